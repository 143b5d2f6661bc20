#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::wire {

// HTTPS-encapsulated tunnel protocol: a long-lived HTTP request/response
// pair upgrades the TLS stream into a framed binary channel carrying PPP.

inline constexpr std::uint8_t kSstpVersion = 0x10;  // 1.0

enum class SstpMsgType : std::uint16_t {
    ConnectRequest = 0x0001,
    ConnectAck = 0x0002,
    ConnectNak = 0x0003,
    Connected = 0x0004,
    Abort = 0x0005,
    Disconnect = 0x0006,
    DisconnectAck = 0x0007,
    EchoRequest = 0x0008,
    EchoResponse = 0x0009,
};

inline constexpr std::uint8_t kSstpAttrEncapsulatedProtocol = 1;
inline constexpr std::uint8_t kSstpAttrStatusInfo = 2;
inline constexpr std::uint8_t kSstpAttrCryptoBinding = 3;
inline constexpr std::uint8_t kSstpAttrCryptoBindingReq = 4;

inline constexpr std::uint16_t kSstpEncapProtocolPpp = 0x0001;

// Hash protocol bitmask / selector values.
inline constexpr std::uint8_t kSstpHashSha1 = 0x01;
inline constexpr std::uint8_t kSstpHashSha256 = 0x02;

struct SstpAttribute {
    std::uint8_t id = 0;
    Bytes value;

    bool operator==(const SstpAttribute&) const = default;
};

struct SstpPacket {
    bool control = false;
    // Control packets:
    SstpMsgType type = SstpMsgType::ConnectRequest;
    std::vector<SstpAttribute> attributes;
    // Data packets:
    Bytes payload;  // a PPP frame
};

Bytes encode_sstp_data(ByteView ppp_frame);
Bytes encode_sstp_control(SstpMsgType type, const std::vector<SstpAttribute>& attrs);
// Total packet length from the 4-byte header (for stream reassembly).
std::optional<std::uint16_t> sstp_packet_length(ByteView first4);
std::optional<SstpPacket> decode_sstp(ByteView raw);

// Reassembles framed tunnel packets out of an ordered byte stream.
class SstpBuffer {
public:
    void feed(ByteView data) { buffer_.insert(buffer_.end(), data.begin(), data.end()); }
    std::optional<SstpPacket> pop();
    // Raw bytes of the last popped packet (binding MACs cover whole messages).
    const Bytes& last_raw() const { return last_raw_; }
    bool broken() const { return broken_; }

private:
    Bytes buffer_;
    Bytes last_raw_;
    bool broken_ = false;
};

// Crypto binding payloads.
struct SstpBindingRequest {
    std::uint8_t hash_bitmask = kSstpHashSha256;
    std::array<std::uint8_t, 32> nonce{};
};
struct SstpBinding {
    std::uint8_t hash = kSstpHashSha256;
    std::array<std::uint8_t, 32> nonce{};
    std::array<std::uint8_t, 32> cert_hash{};     // SHA1 values zero-padded
    std::array<std::uint8_t, 32> compound_mac{};  // SHA1 values zero-padded
};

SstpAttribute make_binding_request_attr(const SstpBindingRequest& req);
std::optional<SstpBindingRequest> parse_binding_request_attr(const SstpAttribute& attr);
SstpAttribute make_binding_attr(const SstpBinding& b);
std::optional<SstpBinding> parse_binding_attr(const SstpAttribute& attr);

// Key derivation for the binding: compound-MAC key from the higher-layer
// auth key (32 bytes), per the tunnel's PRF construction.
Bytes sstp_compute_cmk(std::uint8_t hash, ByteView hlak32);
// Compound MAC over the complete Connected message with its MAC field
// zeroed.  Returns 32 bytes (SHA1 output zero-padded).
std::array<std::uint8_t, 32> sstp_compute_cmac(std::uint8_t hash, ByteView cmk,
                                               ByteView whole_message_zeroed_mac);

// Builds the full Connected control message carrying a valid binding.
Bytes build_connected_message(std::uint8_t hash, ByteView hlak32,
                              const std::array<std::uint8_t, 32>& nonce,
                              const std::array<std::uint8_t, 32>& cert_hash);
// Validates a received Connected message end to end (nonce echo, certificate
// hash, compound MAC).  Returns false on any mismatch.
bool verify_connected_message(ByteView raw_message, ByteView hlak32,
                              const std::array<std::uint8_t, 32>& expected_nonce,
                              const std::array<std::uint8_t, 32>& expected_cert_hash);

// HTTP-ish preamble helpers.
std::string sstp_http_request(const std::string& host);
std::string sstp_http_response_ok();
// True when the blob contains a complete header block ending in CRLFCRLF
// whose first line is the tunnel-upgrade method.
bool is_sstp_http_request(const std::string& header_block);

}  // namespace vpnprobe::wire
