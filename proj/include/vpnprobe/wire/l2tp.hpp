#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::wire {

// Minimal layer-two tunneling codec (version 2): enough control-channel
// machinery to bring up one tunnel and one session, plus data messages that
// carry PPP frames.  Carried over UDP port 1701 — with no protection of its
// own, which is the whole point of auditing the IPsec layer around it.

inline constexpr std::uint16_t kL2tpPort = 1701;

inline constexpr std::uint16_t kL2tpMsgSccrq = 1;
inline constexpr std::uint16_t kL2tpMsgSccrp = 2;
inline constexpr std::uint16_t kL2tpMsgScccn = 3;
inline constexpr std::uint16_t kL2tpMsgStopccn = 4;
inline constexpr std::uint16_t kL2tpMsgHello = 6;
inline constexpr std::uint16_t kL2tpMsgIcrq = 10;
inline constexpr std::uint16_t kL2tpMsgIcrp = 11;
inline constexpr std::uint16_t kL2tpMsgIccn = 12;

inline constexpr std::uint16_t kAvpMessageType = 0;
inline constexpr std::uint16_t kAvpProtocolVersion = 2;
inline constexpr std::uint16_t kAvpFramingCap = 3;
inline constexpr std::uint16_t kAvpHostName = 7;
inline constexpr std::uint16_t kAvpAssignedTunnelId = 9;
inline constexpr std::uint16_t kAvpAssignedSessionId = 14;
inline constexpr std::uint16_t kAvpCallSerial = 15;
inline constexpr std::uint16_t kAvpFramingType = 19;
inline constexpr std::uint16_t kAvpConnectSpeed = 24;

struct L2tpAvp {
    bool mandatory = false;
    std::uint16_t type = 0;
    Bytes value;

    bool operator==(const L2tpAvp&) const = default;
};

struct L2tpPacket {
    bool control = false;
    std::uint16_t tunnel_id = 0;
    std::uint16_t session_id = 0;
    std::uint16_t ns = 0;  // control only
    std::uint16_t nr = 0;  // control only
    std::vector<L2tpAvp> avps;  // control only
    Bytes payload;              // data only: one PPP frame
};

Bytes encode_l2tp_control(std::uint16_t tunnel_id, std::uint16_t session_id, std::uint16_t ns,
                          std::uint16_t nr, const std::vector<L2tpAvp>& avps);
Bytes encode_l2tp_data(std::uint16_t tunnel_id, std::uint16_t session_id, ByteView ppp_frame);
std::optional<L2tpPacket> decode_l2tp(ByteView raw);

// Convenience AVP builders/readers.
L2tpAvp avp_u16(std::uint16_t type, std::uint16_t value, bool mandatory = true);
L2tpAvp avp_u32(std::uint16_t type, std::uint32_t value, bool mandatory = true);
L2tpAvp avp_string(std::uint16_t type, const std::string& value, bool mandatory = true);
const L2tpAvp* find_avp(const std::vector<L2tpAvp>& avps, std::uint16_t type);
std::optional<std::uint16_t> avp_as_u16(const std::vector<L2tpAvp>& avps, std::uint16_t type);
// Message type of a control packet (AVP 0), if present.
std::optional<std::uint16_t> l2tp_message_type(const L2tpPacket& pkt);

// Bare UDP segment (header + payload, checksum zero — legal over IPv4),
// used for IPsec transport-mode payloads.
Bytes build_udp_segment(std::uint16_t src_port, std::uint16_t dst_port, ByteView payload);
struct UdpSegment {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Bytes payload;
};
std::optional<UdpSegment> parse_udp_segment(ByteView raw);

}  // namespace vpnprobe::wire
