#pragma once

#include <cstdint>
#include <optional>

#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/crypto/rng.hpp"

namespace vpnprobe::wire {

// Encrypted payload datagrams: AES-128-CBC with an HMAC-SHA1-96 trailer.
// Tunnel mode carries a whole inner IPv4 packet (next header 4); transport
// mode in this harness carries a UDP datagram (next header 17).

inline constexpr std::uint8_t kEspNextIpv4 = 4;
inline constexpr std::uint8_t kEspNextUdp = 17;

struct EspKeys {
    Bytes enc;   // 16 bytes
    Bytes auth;  // 20 bytes
};

struct EspPacket {
    std::uint32_t spi = 0;
    std::uint32_t seq = 0;
    std::uint8_t next_header = 0;
    Bytes payload;
};

Bytes esp_seal(const EspKeys& keys, std::uint32_t spi, std::uint32_t seq, ByteView payload,
               std::uint8_t next_header, crypto::Rng& rng);
// Authenticates, decrypts, and strips padding.  nullopt on any failure
// (short packet, bad integrity tag, malformed padding).
std::optional<EspPacket> esp_open(const EspKeys& keys, ByteView raw);

// UDP encapsulation demux: encrypted datagrams travel bare (the SPI is
// never zero), key-exchange messages carry a four-zero-byte prefix.
Bytes udpencap_wrap_ike(ByteView ike_message);
enum class UdpEncap { Ike, Esp, Invalid };
UdpEncap udpencap_classify(ByteView datagram);
// The IKE message bytes after the marker (valid only when classify == Ike).
ByteView udpencap_ike_body(ByteView datagram);

}  // namespace vpnprobe::wire
