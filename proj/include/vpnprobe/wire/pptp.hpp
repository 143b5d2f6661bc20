#pragma once

#include <array>
#include <optional>
#include <string>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::wire {

// Tunnel-control channel (TCP/1723) message framing.
inline constexpr std::uint32_t kPptpMagic = 0x1A2B3C4D;
inline constexpr std::uint16_t kPptpMsgControl = 1;
inline constexpr std::uint16_t kPptpProtocolVersion = 0x0100;
inline constexpr std::uint16_t kPptpPort = 1723;

enum class PptpMsgType : std::uint16_t {
    StartRequest = 1,   // SCCRQ
    StartReply = 2,     // SCCRP
    StopRequest = 3,
    StopReply = 4,
    EchoRequest = 5,
    EchoReply = 6,
    CallRequest = 7,    // OCRQ
    CallReply = 8,      // OCRP
    CallClearRequest = 12,
    CallDisconnectNotify = 13,
    SetLinkInfo = 15,
};

struct PptpStartRequest {
    std::uint32_t framing_caps = 1;  // asynchronous
    std::uint32_t bearer_caps = 1;
    std::uint16_t max_channels = 1;
    std::uint16_t firmware = 0;
    std::string hostname;  // up to 64 bytes
    std::string vendor;
};

struct PptpStartReply {
    std::uint8_t result = 1;  // 1 = success
    std::uint8_t error = 0;
    std::uint32_t framing_caps = 1;
    std::uint32_t bearer_caps = 1;
    std::uint16_t max_channels = 1;
    std::uint16_t firmware = 0;
    std::string hostname;
    std::string vendor;
};

struct PptpCallRequest {
    std::uint16_t call_id = 0;
    std::uint16_t serial = 0;
    std::uint32_t min_bps = 64000;
    std::uint32_t max_bps = 100000000;
    std::uint32_t bearer_type = 3;
    std::uint32_t framing_type = 3;
    std::uint16_t recv_window = 16;
    std::uint16_t processing_delay = 0;
    std::string phone_number;
};

struct PptpCallReply {
    std::uint16_t call_id = 0;       // the replier's id for this call
    std::uint16_t peer_call_id = 0;  // echoes the requester's id
    std::uint8_t result = 1;
    std::uint8_t error = 0;
    std::uint16_t cause = 0;
    std::uint32_t connect_speed = 100000000;
    std::uint16_t recv_window = 16;
    std::uint16_t processing_delay = 0;
    std::uint32_t channel_id = 0;
};

struct PptpEcho {
    std::uint32_t identifier = 0;
    bool reply = false;
    std::uint8_t result = 1;  // reply only
};

// One decoded control message (the variants that matter to the harness).
struct PptpControlMessage {
    PptpMsgType type;
    std::optional<PptpStartRequest> start_request;
    std::optional<PptpStartReply> start_reply;
    std::optional<PptpCallRequest> call_request;
    std::optional<PptpCallReply> call_reply;
    std::optional<PptpEcho> echo;
    Bytes raw_body;  // body bytes for types without a dedicated struct
};

Bytes encode_pptp_start_request(const PptpStartRequest& m);
Bytes encode_pptp_start_reply(const PptpStartReply& m);
Bytes encode_pptp_call_request(const PptpCallRequest& m);
Bytes encode_pptp_call_reply(const PptpCallReply& m);
Bytes encode_pptp_echo(const PptpEcho& m);

// Parses one complete control message (length-prefixed). nullopt on bad
// framing, wrong magic, or truncation.
std::optional<PptpControlMessage> decode_pptp_control(ByteView raw);

// Reads the 2-byte length prefix so stream readers know how much to pull.
std::optional<std::uint16_t> pptp_message_length(ByteView first4);

// Point-to-point data channel: GRE with the key/sequence extensions
// (protocol 0x880B).  Sequence and acknowledgement numbers are optional.
inline constexpr std::uint16_t kGreProtoPpp = 0x880B;

struct GrePacket {
    std::uint16_t call_id = 0;
    std::optional<std::uint32_t> seq;
    std::optional<std::uint32_t> ack;
    Bytes payload;  // a PPP frame
};

Bytes encode_gre(const GrePacket& p);
std::optional<GrePacket> decode_gre(ByteView raw);

}  // namespace vpnprobe::wire
