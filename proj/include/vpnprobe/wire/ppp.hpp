#pragma once

#include <array>
#include <optional>
#include <vector>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::wire {

// PPP protocol numbers used by the harness.
inline constexpr std::uint16_t kProtoLcp = 0xC021;
inline constexpr std::uint16_t kProtoPap = 0xC023;
inline constexpr std::uint16_t kProtoChap = 0xC223;
inline constexpr std::uint16_t kProtoIpcp = 0x8021;
inline constexpr std::uint16_t kProtoCcp = 0x80FD;
inline constexpr std::uint16_t kProtoIpv4 = 0x0021;
inline constexpr std::uint16_t kProtoMppe = 0x00FD;  // compressed/encrypted datagrams

// Control codes shared by LCP/IPCP/CCP.
enum class PppCode : std::uint8_t {
    ConfReq = 1,
    ConfAck = 2,
    ConfNak = 3,
    ConfRej = 4,
    TermReq = 5,
    TermAck = 6,
    CodeRej = 7,
    ProtoRej = 8,
    EchoReq = 9,
    EchoRep = 10,
    DiscardReq = 11,
};

// CHAP codes.
inline constexpr std::uint8_t kChapChallenge = 1;
inline constexpr std::uint8_t kChapResponse = 2;
inline constexpr std::uint8_t kChapSuccess = 3;
inline constexpr std::uint8_t kChapFailure = 4;

// PAP codes.
inline constexpr std::uint8_t kPapAuthReq = 1;
inline constexpr std::uint8_t kPapAuthAck = 2;
inline constexpr std::uint8_t kPapAuthNak = 3;

// LCP option types.
inline constexpr std::uint8_t kLcpOptMru = 1;
inline constexpr std::uint8_t kLcpOptAuthProto = 3;
inline constexpr std::uint8_t kLcpOptMagic = 5;

// CHAP algorithm identifiers carried in the LCP auth option.
inline constexpr std::uint8_t kChapAlgoMd5 = 0x05;
inline constexpr std::uint8_t kChapAlgoMsChapV2 = 0x81;

// CCP option: MPPE/MPPC capabilities, 4-byte big-endian bit field.
inline constexpr std::uint8_t kCcpOptMppe = 18;
inline constexpr std::uint32_t kMppeBitStateless = 0x01000000;  // "H"
inline constexpr std::uint32_t kMppeBit56 = 0x00000080;         // "M"
inline constexpr std::uint32_t kMppeBit128 = 0x00000040;        // "S"
inline constexpr std::uint32_t kMppeBit40 = 0x00000020;         // "L"
inline constexpr std::uint32_t kMppeBitMppc = 0x00000001;       // "C"

// IPCP option types.
inline constexpr std::uint8_t kIpcpOptAddress = 3;

struct PppFrame {
    std::uint16_t protocol = 0;
    Bytes payload;
};

// Frames travel with the HDLC-ish FF 03 header; the decoder accepts frames
// with or without it (and with a protocol-field-compressed single byte).
Bytes encode_ppp_frame(const PppFrame& frame);
std::optional<PppFrame> decode_ppp_frame(ByteView raw);

struct PppOption {
    std::uint8_t type = 0;
    Bytes data;

    bool operator==(const PppOption&) const = default;
};

Bytes encode_options(const std::vector<PppOption>& options);
// nullopt on malformed lengths.
std::optional<std::vector<PppOption>> decode_options(ByteView raw);

struct ControlPacket {
    std::uint8_t code = 0;
    std::uint8_t id = 0;
    Bytes data;
};

Bytes encode_control(const ControlPacket& packet);
std::optional<ControlPacket> decode_control(ByteView raw);

// CHAP challenge/response body: value-size prefixed value, then the name.
struct ChapValue {
    Bytes value;
    std::string name;
};
Bytes encode_chap_value(const ChapValue& cv);
std::optional<ChapValue> decode_chap_value(ByteView raw);

// MS-CHAPv2 response value layout (49 bytes).
struct MsChapV2Response {
    std::array<std::uint8_t, 16> peer_challenge{};
    std::array<std::uint8_t, 24> nt_response{};
    std::uint8_t flags = 0;
};
Bytes encode_mschapv2_response(const MsChapV2Response& r);
std::optional<MsChapV2Response> decode_mschapv2_response(ByteView value49);

// PAP Authenticate-Request body.
struct PapRequest {
    std::string username;
    std::string password;
};
Bytes encode_pap_request(const PapRequest& r);
std::optional<PapRequest> decode_pap_request(ByteView raw);

// Option helpers.
PppOption make_auth_option_pap();
PppOption make_auth_option_chap(std::uint8_t algorithm);
PppOption make_mppe_option(std::uint32_t bits_field);
std::optional<std::uint32_t> mppe_bits_from_option(const PppOption& opt);
PppOption make_ip_option(const std::array<std::uint8_t, 4>& ip);

// Minimal IPv4/UDP datagram builder so data-phase traffic looks like real
// tunneled packets (enough for payload inspection; checksums are computed).
Bytes build_ipv4_udp_packet(const std::array<std::uint8_t, 4>& src_ip,
                            const std::array<std::uint8_t, 4>& dst_ip, std::uint16_t src_port,
                            std::uint16_t dst_port, ByteView payload);
// Extracts the UDP payload if the frame parses as IPv4+UDP.
std::optional<Bytes> extract_udp_payload(ByteView ipv4_packet);

}  // namespace vpnprobe::wire
