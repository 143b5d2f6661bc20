#include "vpnprobe/wire/pptp.hpp"

#include <algorithm>

namespace vpnprobe::wire {

namespace {

void put_fixed_string(Bytes& out, const std::string& s, std::size_t width) {
    const std::size_t n = std::min(s.size(), width);
    out.insert(out.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
    out.insert(out.end(), width - n, 0);
}

std::string get_fixed_string(ByteView raw, std::size_t off, std::size_t width) {
    std::string s;
    for (std::size_t i = 0; i < width && off + i < raw.size(); ++i) {
        if (raw[off + i] == 0) break;
        s.push_back(static_cast<char>(raw[off + i]));
    }
    return s;
}

Bytes finish(PptpMsgType type, const Bytes& body) {
    Bytes out;
    put_u16(out, static_cast<std::uint16_t>(body.size() + 12));
    put_u16(out, kPptpMsgControl);
    put_u32(out, kPptpMagic);
    put_u16(out, static_cast<std::uint16_t>(type));
    put_u16(out, 0);  // reserved
    append(out, body);
    return out;
}

}  // namespace

Bytes encode_pptp_start_request(const PptpStartRequest& m) {
    Bytes b;
    put_u16(b, kPptpProtocolVersion);
    put_u16(b, 0);
    put_u32(b, m.framing_caps);
    put_u32(b, m.bearer_caps);
    put_u16(b, m.max_channels);
    put_u16(b, m.firmware);
    put_fixed_string(b, m.hostname, 64);
    put_fixed_string(b, m.vendor, 64);
    return finish(PptpMsgType::StartRequest, b);
}

Bytes encode_pptp_start_reply(const PptpStartReply& m) {
    Bytes b;
    put_u16(b, kPptpProtocolVersion);
    b.push_back(m.result);
    b.push_back(m.error);
    put_u32(b, m.framing_caps);
    put_u32(b, m.bearer_caps);
    put_u16(b, m.max_channels);
    put_u16(b, m.firmware);
    put_fixed_string(b, m.hostname, 64);
    put_fixed_string(b, m.vendor, 64);
    return finish(PptpMsgType::StartReply, b);
}

Bytes encode_pptp_call_request(const PptpCallRequest& m) {
    Bytes b;
    put_u16(b, m.call_id);
    put_u16(b, m.serial);
    put_u32(b, m.min_bps);
    put_u32(b, m.max_bps);
    put_u32(b, m.bearer_type);
    put_u32(b, m.framing_type);
    put_u16(b, m.recv_window);
    put_u16(b, m.processing_delay);
    put_u16(b, static_cast<std::uint16_t>(std::min<std::size_t>(m.phone_number.size(), 64)));
    put_u16(b, 0);
    put_fixed_string(b, m.phone_number, 64);
    put_fixed_string(b, "", 64);  // subaddress
    return finish(PptpMsgType::CallRequest, b);
}

Bytes encode_pptp_call_reply(const PptpCallReply& m) {
    Bytes b;
    put_u16(b, m.call_id);
    put_u16(b, m.peer_call_id);
    b.push_back(m.result);
    b.push_back(m.error);
    put_u16(b, m.cause);
    put_u32(b, m.connect_speed);
    put_u16(b, m.recv_window);
    put_u16(b, m.processing_delay);
    put_u32(b, m.channel_id);
    return finish(PptpMsgType::CallReply, b);
}

Bytes encode_pptp_echo(const PptpEcho& m) {
    Bytes b;
    put_u32(b, m.identifier);
    if (m.reply) {
        b.push_back(m.result);
        b.push_back(0);
        put_u16(b, 0);
    }
    return finish(m.reply ? PptpMsgType::EchoReply : PptpMsgType::EchoRequest, b);
}

std::optional<std::uint16_t> pptp_message_length(ByteView first4) {
    if (first4.size() < 4) return std::nullopt;
    if (get_u16(first4, 2) != kPptpMsgControl) return std::nullopt;
    std::uint16_t len = get_u16(first4, 0);
    if (len < 12) return std::nullopt;
    return len;
}

std::optional<PptpControlMessage> decode_pptp_control(ByteView raw) {
    if (raw.size() < 12) return std::nullopt;
    const std::uint16_t len = get_u16(raw, 0);
    if (len < 12 || len > raw.size()) return std::nullopt;
    if (get_u16(raw, 2) != kPptpMsgControl) return std::nullopt;
    if (get_u32(raw, 4) != kPptpMagic) return std::nullopt;

    PptpControlMessage msg;
    msg.type = static_cast<PptpMsgType>(get_u16(raw, 8));
    ByteView body = raw.subspan(12, len - 12);
    msg.raw_body = Bytes(body.begin(), body.end());

    switch (msg.type) {
        case PptpMsgType::StartRequest: {
            if (body.size() < 144 || get_u16(body, 0) != kPptpProtocolVersion) {
                return std::nullopt;
            }
            PptpStartRequest m;
            m.framing_caps = get_u32(body, 4);
            m.bearer_caps = get_u32(body, 8);
            m.max_channels = get_u16(body, 12);
            m.firmware = get_u16(body, 14);
            m.hostname = get_fixed_string(body, 16, 64);
            m.vendor = get_fixed_string(body, 80, 64);
            msg.start_request = std::move(m);
            break;
        }
        case PptpMsgType::StartReply: {
            if (body.size() < 144) return std::nullopt;
            PptpStartReply m;
            m.result = body[2];
            m.error = body[3];
            m.framing_caps = get_u32(body, 4);
            m.bearer_caps = get_u32(body, 8);
            m.max_channels = get_u16(body, 12);
            m.firmware = get_u16(body, 14);
            m.hostname = get_fixed_string(body, 16, 64);
            m.vendor = get_fixed_string(body, 80, 64);
            msg.start_reply = std::move(m);
            break;
        }
        case PptpMsgType::CallRequest: {
            if (body.size() < 156) return std::nullopt;
            PptpCallRequest m;
            m.call_id = get_u16(body, 0);
            m.serial = get_u16(body, 2);
            m.min_bps = get_u32(body, 4);
            m.max_bps = get_u32(body, 8);
            m.bearer_type = get_u32(body, 12);
            m.framing_type = get_u32(body, 16);
            m.recv_window = get_u16(body, 20);
            m.processing_delay = get_u16(body, 22);
            m.phone_number = get_fixed_string(body, 28, 64);
            msg.call_request = std::move(m);
            break;
        }
        case PptpMsgType::CallReply: {
            if (body.size() < 20) return std::nullopt;
            PptpCallReply m;
            m.call_id = get_u16(body, 0);
            m.peer_call_id = get_u16(body, 2);
            m.result = body[4];
            m.error = body[5];
            m.cause = get_u16(body, 6);
            m.connect_speed = get_u32(body, 8);
            m.recv_window = get_u16(body, 12);
            m.processing_delay = get_u16(body, 14);
            m.channel_id = get_u32(body, 16);
            msg.call_reply = std::move(m);
            break;
        }
        case PptpMsgType::EchoRequest:
        case PptpMsgType::EchoReply: {
            if (body.size() < 4) return std::nullopt;
            PptpEcho m;
            m.identifier = get_u32(body, 0);
            m.reply = msg.type == PptpMsgType::EchoReply;
            if (m.reply && body.size() >= 5) m.result = body[4];
            msg.echo = m;
            break;
        }
        default:
            break;
    }
    return msg;
}

Bytes encode_gre(const GrePacket& p) {
    Bytes out;
    std::uint8_t b0 = 0x20;  // key present
    if (p.seq) b0 |= 0x10;   // sequence present
    std::uint8_t b1 = 0x01;  // version 1 (enhanced)
    if (p.ack) b1 |= 0x80;   // acknowledgement present
    out.push_back(b0);
    out.push_back(b1);
    put_u16(out, kGreProtoPpp);
    put_u16(out, static_cast<std::uint16_t>(p.payload.size()));
    put_u16(out, p.call_id);
    if (p.seq) put_u32(out, *p.seq);
    if (p.ack) put_u32(out, *p.ack);
    append(out, p.payload);
    return out;
}

std::optional<GrePacket> decode_gre(ByteView raw) {
    if (raw.size() < 8) return std::nullopt;
    const std::uint8_t b0 = raw[0];
    const std::uint8_t b1 = raw[1];
    if ((b0 & 0x20) == 0) return std::nullopt;       // key must be present
    if ((b1 & 0x07) != 1) return std::nullopt;       // enhanced GRE version
    if (get_u16(raw, 2) != kGreProtoPpp) return std::nullopt;

    GrePacket p;
    const std::uint16_t payload_len = get_u16(raw, 4);
    p.call_id = get_u16(raw, 6);
    std::size_t off = 8;
    if (b0 & 0x10) {
        if (raw.size() < off + 4) return std::nullopt;
        p.seq = get_u32(raw, off);
        off += 4;
    }
    if (b1 & 0x80) {
        if (raw.size() < off + 4) return std::nullopt;
        p.ack = get_u32(raw, off);
        off += 4;
    }
    if (raw.size() < off + payload_len) return std::nullopt;
    p.payload = Bytes(raw.begin() + static_cast<std::ptrdiff_t>(off),
                      raw.begin() + static_cast<std::ptrdiff_t>(off + payload_len));
    return p;
}

}  // namespace vpnprobe::wire
