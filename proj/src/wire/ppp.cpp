#include "vpnprobe/wire/ppp.hpp"

#include <algorithm>

namespace vpnprobe::wire {

Bytes encode_ppp_frame(const PppFrame& frame) {
    Bytes out;
    out.reserve(frame.payload.size() + 4);
    out.push_back(0xFF);
    out.push_back(0x03);
    put_u16(out, frame.protocol);
    append(out, frame.payload);
    return out;
}

std::optional<PppFrame> decode_ppp_frame(ByteView raw) {
    std::size_t off = 0;
    if (raw.size() >= 2 && raw[0] == 0xFF && raw[1] == 0x03) off = 2;
    if (off >= raw.size()) return std::nullopt;

    PppFrame frame;
    // Protocol field compression: an odd first byte means a 1-byte protocol.
    // 0xFF is excluded: it is indistinguishable from a truncated FF 03
    // address/control prefix.
    if (raw[off] & 0x01) {
        if (raw[off] == 0xFF) return std::nullopt;
        frame.protocol = raw[off];
        off += 1;
    } else {
        if (off + 2 > raw.size()) return std::nullopt;
        frame.protocol = get_u16(raw, off);
        off += 2;
    }
    frame.payload = Bytes(raw.begin() + static_cast<std::ptrdiff_t>(off), raw.end());
    return frame;
}

Bytes encode_options(const std::vector<PppOption>& options) {
    Bytes out;
    for (const auto& opt : options) {
        out.push_back(opt.type);
        out.push_back(static_cast<std::uint8_t>(opt.data.size() + 2));
        append(out, opt.data);
    }
    return out;
}

std::optional<std::vector<PppOption>> decode_options(ByteView raw) {
    std::vector<PppOption> out;
    std::size_t off = 0;
    while (off < raw.size()) {
        if (off + 2 > raw.size()) return std::nullopt;
        std::uint8_t type = raw[off];
        std::uint8_t len = raw[off + 1];
        if (len < 2 || off + len > raw.size()) return std::nullopt;
        out.push_back(PppOption{type, slice(raw, off + 2, len - 2u)});
        off += len;
    }
    return out;
}

Bytes encode_control(const ControlPacket& packet) {
    Bytes out;
    out.push_back(packet.code);
    out.push_back(packet.id);
    put_u16(out, static_cast<std::uint16_t>(packet.data.size() + 4));
    append(out, packet.data);
    return out;
}

std::optional<ControlPacket> decode_control(ByteView raw) {
    if (raw.size() < 4) return std::nullopt;
    std::uint16_t len = get_u16(raw, 2);
    if (len < 4 || len > raw.size()) return std::nullopt;
    ControlPacket packet;
    packet.code = raw[0];
    packet.id = raw[1];
    packet.data = slice(raw, 4, len - 4u);
    return packet;
}

Bytes encode_chap_value(const ChapValue& cv) {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(cv.value.size()));
    append(out, cv.value);
    append(out, cv.name);
    return out;
}

std::optional<ChapValue> decode_chap_value(ByteView raw) {
    if (raw.empty()) return std::nullopt;
    std::uint8_t vsize = raw[0];
    if (1u + vsize > raw.size()) return std::nullopt;
    ChapValue cv;
    cv.value = slice(raw, 1, vsize);
    cv.name = std::string(raw.begin() + 1 + vsize, raw.end());
    return cv;
}

Bytes encode_mschapv2_response(const MsChapV2Response& r) {
    Bytes out;
    out.insert(out.end(), r.peer_challenge.begin(), r.peer_challenge.end());
    out.insert(out.end(), 8, 0x00);  // reserved
    out.insert(out.end(), r.nt_response.begin(), r.nt_response.end());
    out.push_back(r.flags);
    return out;
}

std::optional<MsChapV2Response> decode_mschapv2_response(ByteView value49) {
    if (value49.size() != 49) return std::nullopt;
    MsChapV2Response r;
    std::copy_n(value49.begin(), 16, r.peer_challenge.begin());
    std::copy_n(value49.begin() + 24, 24, r.nt_response.begin());
    r.flags = value49[48];
    return r;
}

Bytes encode_pap_request(const PapRequest& r) {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(r.username.size()));
    append(out, r.username);
    out.push_back(static_cast<std::uint8_t>(r.password.size()));
    append(out, r.password);
    return out;
}

std::optional<PapRequest> decode_pap_request(ByteView raw) {
    if (raw.empty()) return std::nullopt;
    std::uint8_t ulen = raw[0];
    if (1u + ulen + 1u > raw.size()) return std::nullopt;
    std::uint8_t plen = raw[1 + ulen];
    if (2u + ulen + plen > raw.size()) return std::nullopt;
    PapRequest r;
    r.username.assign(raw.begin() + 1, raw.begin() + 1 + ulen);
    r.password.assign(raw.begin() + 2 + ulen, raw.begin() + 2 + ulen + plen);
    return r;
}

PppOption make_auth_option_pap() {
    Bytes data;
    put_u16(data, kProtoPap);
    return PppOption{kLcpOptAuthProto, std::move(data)};
}

PppOption make_auth_option_chap(std::uint8_t algorithm) {
    Bytes data;
    put_u16(data, kProtoChap);
    data.push_back(algorithm);
    return PppOption{kLcpOptAuthProto, std::move(data)};
}

PppOption make_mppe_option(std::uint32_t bits_field) {
    Bytes data;
    put_u32(data, bits_field);
    return PppOption{kCcpOptMppe, std::move(data)};
}

std::optional<std::uint32_t> mppe_bits_from_option(const PppOption& opt) {
    if (opt.type != kCcpOptMppe || opt.data.size() != 4) return std::nullopt;
    return get_u32(opt.data, 0);
}

PppOption make_ip_option(const std::array<std::uint8_t, 4>& ip) {
    return PppOption{kIpcpOptAddress, Bytes(ip.begin(), ip.end())};
}

namespace {

std::uint16_t inet_checksum(ByteView data) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < data.size(); i += 2)
        sum += static_cast<std::uint32_t>(data[i]) << 8 | data[i + 1];
    if (data.size() % 2) sum += static_cast<std::uint32_t>(data.back()) << 8;
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

}  // namespace

Bytes build_ipv4_udp_packet(const std::array<std::uint8_t, 4>& src_ip,
                            const std::array<std::uint8_t, 4>& dst_ip, std::uint16_t src_port,
                            std::uint16_t dst_port, ByteView payload) {
    Bytes udp;
    put_u16(udp, src_port);
    put_u16(udp, dst_port);
    put_u16(udp, static_cast<std::uint16_t>(8 + payload.size()));
    put_u16(udp, 0);  // checksum optional over IPv4
    append(udp, payload);

    Bytes ip;
    ip.push_back(0x45);  // v4, 20-byte header
    ip.push_back(0x00);
    put_u16(ip, static_cast<std::uint16_t>(20 + udp.size()));
    put_u16(ip, 0x0000);  // id
    put_u16(ip, 0x4000);  // don't fragment
    ip.push_back(64);     // ttl
    ip.push_back(17);     // udp
    put_u16(ip, 0);       // header checksum placeholder
    ip.insert(ip.end(), src_ip.begin(), src_ip.end());
    ip.insert(ip.end(), dst_ip.begin(), dst_ip.end());
    std::uint16_t csum = inet_checksum(ByteView(ip.data(), 20));
    ip[10] = static_cast<std::uint8_t>(csum >> 8);
    ip[11] = static_cast<std::uint8_t>(csum);
    append(ip, udp);
    return ip;
}

std::optional<Bytes> extract_udp_payload(ByteView ipv4_packet) {
    if (ipv4_packet.size() < 20) return std::nullopt;
    if ((ipv4_packet[0] >> 4) != 4) return std::nullopt;
    std::size_t ihl = (ipv4_packet[0] & 0x0F) * 4u;
    if (ihl < 20 || ipv4_packet.size() < ihl + 8) return std::nullopt;
    if (ipv4_packet[9] != 17) return std::nullopt;
    // A valid header sums to zero with its checksum field included.
    if (inet_checksum(ipv4_packet.subspan(0, ihl)) != 0) return std::nullopt;
    std::uint16_t udp_len = get_u16(ipv4_packet, ihl + 4);
    if (udp_len < 8 || ihl + udp_len > ipv4_packet.size()) return std::nullopt;
    return slice(ipv4_packet, ihl + 8, udp_len - 8u);
}

}  // namespace vpnprobe::wire
