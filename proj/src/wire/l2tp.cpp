#include "vpnprobe/wire/l2tp.hpp"

namespace vpnprobe::wire {

namespace {

// Header flag bits.
constexpr std::uint16_t kFlagType = 0x8000;      // control message
constexpr std::uint16_t kFlagLength = 0x4000;    // length field present
constexpr std::uint16_t kFlagSequence = 0x0800;  // Ns/Nr present
constexpr std::uint16_t kVersionMask = 0x000F;

}  // namespace

Bytes encode_l2tp_control(std::uint16_t tunnel_id, std::uint16_t session_id, std::uint16_t ns,
                          std::uint16_t nr, const std::vector<L2tpAvp>& avps) {
    Bytes out;
    put_u16(out, kFlagType | kFlagLength | kFlagSequence | 2);
    put_u16(out, 0);  // length, patched below
    put_u16(out, tunnel_id);
    put_u16(out, session_id);
    put_u16(out, ns);
    put_u16(out, nr);
    for (const auto& avp : avps) {
        std::uint16_t len = static_cast<std::uint16_t>(6 + avp.value.size());
        put_u16(out, static_cast<std::uint16_t>((avp.mandatory ? 0x8000 : 0) | (len & 0x03FF)));
        put_u16(out, 0);  // vendor: IETF
        put_u16(out, avp.type);
        append(out, avp.value);
    }
    out[2] = std::uint8_t(out.size() >> 8);
    out[3] = std::uint8_t(out.size());
    return out;
}

Bytes encode_l2tp_data(std::uint16_t tunnel_id, std::uint16_t session_id, ByteView ppp_frame) {
    Bytes out;
    put_u16(out, kFlagLength | 2);
    put_u16(out, static_cast<std::uint16_t>(8 + ppp_frame.size()));
    put_u16(out, tunnel_id);
    put_u16(out, session_id);
    append(out, ppp_frame);
    return out;
}

std::optional<L2tpPacket> decode_l2tp(ByteView raw) {
    if (raw.size() < 6) return std::nullopt;
    std::uint16_t flags = get_u16(raw, 0);
    if ((flags & kVersionMask) != 2) return std::nullopt;

    L2tpPacket pkt;
    pkt.control = flags & kFlagType;
    std::size_t off = 2;
    std::size_t total = raw.size();
    if (flags & kFlagLength) {
        std::uint16_t len = get_u16(raw, off);
        if (len < 6 || len > raw.size()) return std::nullopt;
        total = len;
        off += 2;
    }
    if (off + 4 > total) return std::nullopt;
    pkt.tunnel_id = get_u16(raw, off);
    pkt.session_id = get_u16(raw, off + 2);
    off += 4;
    if (flags & kFlagSequence) {
        if (off + 4 > total) return std::nullopt;
        pkt.ns = get_u16(raw, off);
        pkt.nr = get_u16(raw, off + 2);
        off += 4;
    }

    if (!pkt.control) {
        pkt.payload.assign(raw.begin() + off, raw.begin() + total);
        return pkt;
    }
    while (off < total) {
        if (off + 6 > total) return std::nullopt;
        std::uint16_t head = get_u16(raw, off);
        std::uint16_t len = head & 0x03FF;
        std::uint16_t vendor = get_u16(raw, off + 2);
        if (len < 6 || off + len > total) return std::nullopt;
        L2tpAvp avp;
        avp.mandatory = head & 0x8000;
        avp.type = get_u16(raw, off + 4);
        avp.value.assign(raw.begin() + off + 6, raw.begin() + off + len);
        if (vendor == 0) pkt.avps.push_back(std::move(avp));  // skip vendor AVPs
        off += len;
    }
    return pkt;
}

L2tpAvp avp_u16(std::uint16_t type, std::uint16_t value, bool mandatory) {
    L2tpAvp avp{mandatory, type, {}};
    put_u16(avp.value, value);
    return avp;
}

L2tpAvp avp_u32(std::uint16_t type, std::uint32_t value, bool mandatory) {
    L2tpAvp avp{mandatory, type, {}};
    put_u32(avp.value, value);
    return avp;
}

L2tpAvp avp_string(std::uint16_t type, const std::string& value, bool mandatory) {
    return L2tpAvp{mandatory, type, to_bytes(value)};
}

const L2tpAvp* find_avp(const std::vector<L2tpAvp>& avps, std::uint16_t type) {
    for (const auto& avp : avps) {
        if (avp.type == type) return &avp;
    }
    return nullptr;
}

std::optional<std::uint16_t> avp_as_u16(const std::vector<L2tpAvp>& avps, std::uint16_t type) {
    const L2tpAvp* avp = find_avp(avps, type);
    if (!avp || avp->value.size() != 2) return std::nullopt;
    return get_u16(avp->value, 0);
}

std::optional<std::uint16_t> l2tp_message_type(const L2tpPacket& pkt) {
    if (!pkt.control) return std::nullopt;
    return avp_as_u16(pkt.avps, kAvpMessageType);
}

Bytes build_udp_segment(std::uint16_t src_port, std::uint16_t dst_port, ByteView payload) {
    Bytes out;
    put_u16(out, src_port);
    put_u16(out, dst_port);
    put_u16(out, static_cast<std::uint16_t>(8 + payload.size()));
    put_u16(out, 0);  // checksum optional over IPv4
    append(out, payload);
    return out;
}

std::optional<UdpSegment> parse_udp_segment(ByteView raw) {
    if (raw.size() < 8) return std::nullopt;
    std::uint16_t len = get_u16(raw, 4);
    if (len < 8 || len > raw.size()) return std::nullopt;
    UdpSegment seg;
    seg.src_port = get_u16(raw, 0);
    seg.dst_port = get_u16(raw, 2);
    seg.payload.assign(raw.begin() + 8, raw.begin() + len);
    return seg;
}

}  // namespace vpnprobe::wire
