#include "vpnprobe/wire/sstp.hpp"

#include <algorithm>
#include <cstring>

#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::wire {

namespace {

constexpr std::uint16_t kLengthMask = 0x0FFF;

void put_packet_header(Bytes& out, bool control, std::uint16_t total_len) {
    out.push_back(kSstpVersion);
    out.push_back(control ? 0x01 : 0x00);
    put_u16(out, static_cast<std::uint16_t>(total_len & kLengthMask));
}

}  // namespace

Bytes encode_sstp_data(ByteView ppp_frame) {
    Bytes out;
    put_packet_header(out, false, static_cast<std::uint16_t>(4 + ppp_frame.size()));
    append(out, ppp_frame);
    return out;
}

Bytes encode_sstp_control(SstpMsgType type, const std::vector<SstpAttribute>& attrs) {
    Bytes body;
    put_u16(body, static_cast<std::uint16_t>(type));
    put_u16(body, static_cast<std::uint16_t>(attrs.size()));
    for (const auto& a : attrs) {
        body.push_back(0);  // reserved
        body.push_back(a.id);
        put_u16(body, static_cast<std::uint16_t>((a.value.size() + 4) & kLengthMask));
        append(body, a.value);
    }
    Bytes out;
    put_packet_header(out, true, static_cast<std::uint16_t>(4 + body.size()));
    append(out, body);
    return out;
}

std::optional<std::uint16_t> sstp_packet_length(ByteView first4) {
    if (first4.size() < 4) return std::nullopt;
    if (first4[0] != kSstpVersion) return std::nullopt;
    std::uint16_t len = static_cast<std::uint16_t>(get_u16(first4, 2) & kLengthMask);
    if (len < 4) return std::nullopt;
    return len;
}

std::optional<SstpPacket> decode_sstp(ByteView raw) {
    auto len = sstp_packet_length(raw);
    if (!len || raw.size() < *len) return std::nullopt;
    SstpPacket pkt;
    pkt.control = (raw[1] & 0x01) != 0;
    if (!pkt.control) {
        pkt.payload = Bytes(raw.begin() + 4, raw.begin() + *len);
        return pkt;
    }
    if (*len < 8) return std::nullopt;
    pkt.type = static_cast<SstpMsgType>(get_u16(raw, 4));
    std::uint16_t num_attrs = get_u16(raw, 6);
    std::size_t off = 8;
    for (std::uint16_t i = 0; i < num_attrs; ++i) {
        if (off + 4 > *len) return std::nullopt;
        SstpAttribute a;
        a.id = raw[off + 1];
        std::uint16_t alen = static_cast<std::uint16_t>(get_u16(raw, off + 2) & kLengthMask);
        if (alen < 4 || off + alen > *len) return std::nullopt;
        a.value = Bytes(raw.begin() + static_cast<std::ptrdiff_t>(off + 4),
                        raw.begin() + static_cast<std::ptrdiff_t>(off + alen));
        pkt.attributes.push_back(std::move(a));
        off += alen;
    }
    return pkt;
}

SstpAttribute make_binding_request_attr(const SstpBindingRequest& req) {
    SstpAttribute a;
    a.id = kSstpAttrCryptoBindingReq;
    a.value.assign(3, 0);
    a.value.push_back(req.hash_bitmask);
    a.value.insert(a.value.end(), req.nonce.begin(), req.nonce.end());
    return a;
}

std::optional<SstpBindingRequest> parse_binding_request_attr(const SstpAttribute& attr) {
    if (attr.id != kSstpAttrCryptoBindingReq || attr.value.size() < 36) return std::nullopt;
    SstpBindingRequest req;
    req.hash_bitmask = attr.value[3];
    std::copy(attr.value.begin() + 4, attr.value.begin() + 36, req.nonce.begin());
    return req;
}

SstpAttribute make_binding_attr(const SstpBinding& b) {
    SstpAttribute a;
    a.id = kSstpAttrCryptoBinding;
    a.value.assign(3, 0);
    a.value.push_back(b.hash);
    a.value.insert(a.value.end(), b.nonce.begin(), b.nonce.end());
    a.value.insert(a.value.end(), b.cert_hash.begin(), b.cert_hash.end());
    a.value.insert(a.value.end(), b.compound_mac.begin(), b.compound_mac.end());
    return a;
}

std::optional<SstpBinding> parse_binding_attr(const SstpAttribute& attr) {
    if (attr.id != kSstpAttrCryptoBinding || attr.value.size() < 100) return std::nullopt;
    SstpBinding b;
    b.hash = attr.value[3];
    std::copy(attr.value.begin() + 4, attr.value.begin() + 36, b.nonce.begin());
    std::copy(attr.value.begin() + 36, attr.value.begin() + 68, b.cert_hash.begin());
    std::copy(attr.value.begin() + 68, attr.value.begin() + 100, b.compound_mac.begin());
    return b;
}

Bytes sstp_compute_cmk(std::uint8_t hash, ByteView hlak32) {
    static const char* kSeed = "SSTP inner method derived CMK";
    const std::size_t out_len = hash == kSstpHashSha256 ? 32 : 20;
    Bytes msg = to_bytes(kSeed);
    msg.push_back(static_cast<std::uint8_t>(out_len & 0xFF));  // little-endian length
    msg.push_back(static_cast<std::uint8_t>(out_len >> 8));
    msg.push_back(0x01);
    Bytes t1 = hash == kSstpHashSha256 ? crypto::hmac_sha256(hlak32, msg)
                                       : crypto::hmac_sha1(hlak32, msg);
    t1.resize(out_len);
    return t1;
}

std::array<std::uint8_t, 32> sstp_compute_cmac(std::uint8_t hash, ByteView cmk,
                                               ByteView whole_message_zeroed_mac) {
    Bytes mac = hash == kSstpHashSha256 ? crypto::hmac_sha256(cmk, whole_message_zeroed_mac)
                                        : crypto::hmac_sha1(cmk, whole_message_zeroed_mac);
    std::array<std::uint8_t, 32> out{};
    std::copy(mac.begin(), mac.begin() + std::min<std::size_t>(mac.size(), 32), out.begin());
    return out;
}

Bytes build_connected_message(std::uint8_t hash, ByteView hlak32,
                              const std::array<std::uint8_t, 32>& nonce,
                              const std::array<std::uint8_t, 32>& cert_hash) {
    SstpBinding binding;
    binding.hash = hash;
    binding.nonce = nonce;
    binding.cert_hash = cert_hash;
    // compound_mac left zero while the MAC is computed.
    Bytes msg = encode_sstp_control(SstpMsgType::Connected, {make_binding_attr(binding)});
    Bytes cmk = sstp_compute_cmk(hash, hlak32);
    auto mac = sstp_compute_cmac(hash, cmk, msg);
    // The MAC occupies the last 32 bytes of the binding attribute.
    std::copy(mac.begin(), mac.end(), msg.end() - 32);
    return msg;
}

bool verify_connected_message(ByteView raw_message, ByteView hlak32,
                              const std::array<std::uint8_t, 32>& expected_nonce,
                              const std::array<std::uint8_t, 32>& expected_cert_hash) {
    auto pkt = decode_sstp(raw_message);
    if (!pkt || !pkt->control || pkt->type != SstpMsgType::Connected) return false;
    if (pkt->attributes.size() != 1) return false;
    auto binding = parse_binding_attr(pkt->attributes[0]);
    if (!binding) return false;
    if (binding->hash != kSstpHashSha1 && binding->hash != kSstpHashSha256) return false;
    if (binding->nonce != expected_nonce) return false;
    if (binding->cert_hash != expected_cert_hash) return false;
    // Recompute the MAC over the message with the MAC field zeroed.
    if (raw_message.size() < 32) return false;
    Bytes zeroed(raw_message.begin(), raw_message.end());
    std::fill(zeroed.end() - 32, zeroed.end(), 0);
    Bytes cmk = sstp_compute_cmk(binding->hash, hlak32);
    auto expected_mac = sstp_compute_cmac(binding->hash, cmk, zeroed);
    // SHA1 MACs are zero-padded, so compare all 32 bytes either way.
    return ct_equal(ByteView(expected_mac.data(), expected_mac.size()),
                    ByteView(binding->compound_mac.data(), binding->compound_mac.size()));
}

std::string sstp_http_request(const std::string& host) {
    return "SSTP_DUPLEX_POST /sra_{BA195980-CD49-458b-9E23-C84EE0ADCD75}/ HTTP/1.1\r\n"
           "Host: " +
           host +
           "\r\n"
           "Content-Length: 18446744073709551615\r\n"
           "\r\n";
}

std::string sstp_http_response_ok() {
    return "HTTP/1.1 200 OK\r\n"
           "Content-Length: 18446744073709551615\r\n"
           "Server: vpnprobe\r\n"
           "\r\n";
}

bool is_sstp_http_request(const std::string& header_block) {
    return header_block.rfind("SSTP_DUPLEX_POST ", 0) == 0 &&
           header_block.find("\r\n\r\n") != std::string::npos;
}

std::optional<SstpPacket> SstpBuffer::pop() {
    if (broken_ || buffer_.size() < 4) {
        return std::nullopt;
    }
    auto len = sstp_packet_length(ByteView(buffer_.data(), 4));
    if (!len || *len < 4) {
        broken_ = true;
        return std::nullopt;
    }
    if (buffer_.size() < *len) {
        return std::nullopt;
    }
    Bytes raw(buffer_.begin(), buffer_.begin() + *len);
    buffer_.erase(buffer_.begin(), buffer_.begin() + *len);
    auto pkt = decode_sstp(raw);
    if (!pkt) {
        broken_ = true;
        return std::nullopt;
    }
    last_raw_ = std::move(raw);
    return pkt;
}

}  // namespace vpnprobe::wire
