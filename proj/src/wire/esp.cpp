#include "vpnprobe/wire/esp.hpp"

#include "vpnprobe/crypto/aes.hpp"
#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::wire {

namespace {
constexpr std::size_t kBlock = 16;
constexpr std::size_t kIcvLen = 12;  // HMAC-SHA1 truncated to 96 bits
}  // namespace

Bytes esp_seal(const EspKeys& keys, std::uint32_t spi, std::uint32_t seq, ByteView payload,
               std::uint8_t next_header, crypto::Rng& rng) {
    // Plaintext trailer: padding, pad length, next header.  Pad bytes use
    // the 1,2,3,... ramp so receivers can sanity-check them.
    std::size_t content = payload.size() + 2;
    std::size_t pad = (kBlock - (content % kBlock)) % kBlock;
    Bytes plain(payload.begin(), payload.end());
    for (std::size_t i = 1; i <= pad; ++i) plain.push_back(static_cast<std::uint8_t>(i));
    plain.push_back(static_cast<std::uint8_t>(pad));
    plain.push_back(next_header);

    Bytes iv = rng.bytes(kBlock);
    Bytes ct = crypto::aes128_cbc_encrypt(keys.enc, iv, plain);

    Bytes out;
    put_u32(out, spi);
    put_u32(out, seq);
    append(out, iv);
    append(out, ct);
    Bytes mac = crypto::hmac_sha1(keys.auth, out);
    out.insert(out.end(), mac.begin(), mac.begin() + kIcvLen);
    return out;
}

std::optional<EspPacket> esp_open(const EspKeys& keys, ByteView raw) {
    if (raw.size() < 8 + kBlock + kBlock + kIcvLen) return std::nullopt;

    ByteView body = raw.first(raw.size() - kIcvLen);
    ByteView icv = raw.subspan(raw.size() - kIcvLen);
    Bytes mac = crypto::hmac_sha1(keys.auth, body);
    if (!ct_equal(ByteView(mac.data(), kIcvLen), icv)) return std::nullopt;

    EspPacket pkt;
    pkt.spi = get_u32(raw, 0);
    pkt.seq = get_u32(raw, 4);
    ByteView iv = raw.subspan(8, kBlock);
    ByteView ct = body.subspan(8 + kBlock);
    if (ct.empty() || ct.size() % kBlock != 0) return std::nullopt;

    Bytes plain = crypto::aes128_cbc_decrypt(keys.enc, iv, ct);
    if (plain.size() < 2) return std::nullopt;
    pkt.next_header = plain[plain.size() - 1];
    std::uint8_t pad = plain[plain.size() - 2];
    if (plain.size() < 2u + pad) return std::nullopt;
    for (std::size_t i = 1; i <= pad; ++i) {
        if (plain[plain.size() - 2 - pad + (i - 1)] != i) return std::nullopt;
    }
    plain.resize(plain.size() - 2 - pad);
    pkt.payload = std::move(plain);
    return pkt;
}

Bytes udpencap_wrap_ike(ByteView ike_message) {
    Bytes out(4, 0);
    append(out, ike_message);
    return out;
}

UdpEncap udpencap_classify(ByteView datagram) {
    if (datagram.size() < 4) return UdpEncap::Invalid;
    if (get_u32(datagram, 0) == 0) {
        return datagram.size() > 4 ? UdpEncap::Ike : UdpEncap::Invalid;
    }
    return UdpEncap::Esp;
}

ByteView udpencap_ike_body(ByteView datagram) { return datagram.subspan(4); }

}  // namespace vpnprobe::wire
