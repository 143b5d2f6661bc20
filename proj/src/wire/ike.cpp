#include "vpnprobe/wire/ike.hpp"

#include "vpnprobe/crypto/aes.hpp"
#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::wire {

namespace {

constexpr std::size_t kHeaderLen = 28;
constexpr std::size_t kBlock = 16;
constexpr std::size_t kIcvLen = 16;  // HMAC-SHA2-256 truncated to 128 bits

void put_header(Bytes& out, const IkeHeader& h) {
    append(out, ByteView(h.spi_i.data(), h.spi_i.size()));
    append(out, ByteView(h.spi_r.data(), h.spi_r.size()));
    out.push_back(h.next_payload);
    out.push_back(h.version);
    out.push_back(h.exchange);
    out.push_back(h.flags);
    put_u32(out, h.message_id);
    put_u32(out, h.length);
}

void patch_length(Bytes& msg) {
    const auto len = static_cast<std::uint32_t>(msg.size());
    msg[24] = static_cast<std::uint8_t>(len >> 24);
    msg[25] = static_cast<std::uint8_t>(len >> 16);
    msg[26] = static_cast<std::uint8_t>(len >> 8);
    msg[27] = static_cast<std::uint8_t>(len);
}

}  // namespace

Bytes encode_ike_message(IkeHeader header, const std::vector<IkePayloadChunk>& payloads) {
    header.next_payload = payloads.empty() ? kPayloadNone : payloads[0].type;
    Bytes out;
    put_header(out, header);
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        out.push_back(i + 1 < payloads.size() ? payloads[i + 1].type : kPayloadNone);
        out.push_back(0);  // not critical
        put_u16(out, static_cast<std::uint16_t>(4 + payloads[i].body.size()));
        append(out, payloads[i].body);
    }
    patch_length(out);
    return out;
}

std::optional<IkeMessage> decode_ike_message(ByteView raw) {
    if (raw.size() < kHeaderLen) return std::nullopt;
    IkeMessage msg;
    std::copy(raw.begin(), raw.begin() + 8, msg.header.spi_i.begin());
    std::copy(raw.begin() + 8, raw.begin() + 16, msg.header.spi_r.begin());
    msg.header.next_payload = raw[16];
    msg.header.version = raw[17];
    msg.header.exchange = raw[18];
    msg.header.flags = raw[19];
    msg.header.message_id = get_u32(raw, 20);
    msg.header.length = get_u32(raw, 24);
    if (msg.header.version != kIkeV2Version) return std::nullopt;
    if (msg.header.length != raw.size()) return std::nullopt;

    std::uint8_t next = msg.header.next_payload;
    std::size_t off = kHeaderLen;
    while (next != kPayloadNone) {
        if (off + 4 > raw.size()) return std::nullopt;
        std::uint8_t following = raw[off];
        std::uint16_t plen = get_u16(raw, off + 2);
        if (plen < 4 || off + plen > raw.size()) return std::nullopt;
        msg.payloads.push_back({next, slice(raw, off + 4, plen - 4)});
        off += plen;
        if (next == kPayloadSk) {
            // An encrypted payload is always last; its "next" field names
            // the first payload INSIDE the ciphertext, not a sibling.
            break;
        }
        next = following;
        if (msg.payloads.size() > 64) return std::nullopt;
    }
    if (off != raw.size()) return std::nullopt;
    msg.raw.assign(raw.begin(), raw.end());
    return msg;
}

const IkePayloadChunk* find_payload(const IkeMessage& msg, std::uint8_t type) {
    for (const auto& p : msg.payloads) {
        if (p.type == type) return &p;
    }
    return nullptr;
}

// --- SA payload ------------------------------------------------------------

Bytes encode_sa_payload(const std::vector<IkeProposal>& proposals) {
    Bytes out;
    for (std::size_t pi = 0; pi < proposals.size(); ++pi) {
        const auto& p = proposals[pi];
        Bytes prop;
        prop.push_back(pi + 1 < proposals.size() ? 2 : 0);
        prop.push_back(0);
        std::size_t len_at = prop.size();
        put_u16(prop, 0);  // patched below
        prop.push_back(p.number);
        prop.push_back(p.protocol);
        prop.push_back(static_cast<std::uint8_t>(p.spi.size()));
        prop.push_back(static_cast<std::uint8_t>(p.transforms.size()));
        append(prop, p.spi);
        for (std::size_t ti = 0; ti < p.transforms.size(); ++ti) {
            const auto& t = p.transforms[ti];
            prop.push_back(ti + 1 < p.transforms.size() ? 3 : 0);
            prop.push_back(0);
            put_u16(prop, static_cast<std::uint16_t>(8 + (t.keylen ? 4 : 0)));
            prop.push_back(t.type);
            prop.push_back(0);
            put_u16(prop, t.id);
            if (t.keylen) {
                put_u16(prop, 0x800E);  // TV attribute: key length
                put_u16(prop, *t.keylen);
            }
        }
        prop[len_at] = static_cast<std::uint8_t>(prop.size() >> 8);
        prop[len_at + 1] = static_cast<std::uint8_t>(prop.size());
        append(out, prop);
    }
    return out;
}

std::optional<std::vector<IkeProposal>> decode_sa_payload(ByteView body) {
    std::vector<IkeProposal> props;
    std::size_t off = 0;
    while (off < body.size()) {
        if (off + 8 > body.size()) return std::nullopt;
        std::uint8_t more = body[off];
        std::uint16_t plen = get_u16(body, off + 2);
        if (plen < 8 || off + plen > body.size()) return std::nullopt;

        IkeProposal p;
        p.number = body[off + 4];
        p.protocol = body[off + 5];
        std::uint8_t spi_size = body[off + 6];
        std::uint8_t num_transforms = body[off + 7];
        std::size_t t_off = off + 8;
        if (t_off + spi_size > off + plen) return std::nullopt;
        p.spi = slice(body, t_off, spi_size);
        t_off += spi_size;

        for (int i = 0; i < num_transforms; ++i) {
            if (t_off + 8 > off + plen) return std::nullopt;
            std::uint16_t tlen = get_u16(body, t_off + 2);
            if (tlen < 8 || t_off + tlen > off + plen) return std::nullopt;
            IkeTransform t;
            t.type = body[t_off + 4];
            t.id = get_u16(body, t_off + 6);
            // Attributes: we understand the TV key-length attribute only.
            std::size_t a_off = t_off + 8;
            while (a_off + 4 <= t_off + tlen) {
                std::uint16_t attr_type = get_u16(body, a_off);
                if (attr_type == 0x800E) {
                    t.keylen = get_u16(body, a_off + 2);
                    a_off += 4;
                } else if (attr_type & 0x8000) {
                    a_off += 4;  // other TV attribute
                } else {
                    std::uint16_t alen = get_u16(body, a_off + 2);
                    a_off += 4 + alen;  // TLV attribute
                }
            }
            p.transforms.push_back(t);
            t_off += tlen;
        }
        props.push_back(std::move(p));
        off += plen;
        if (more == 0) break;
    }
    if (props.empty()) return std::nullopt;
    return props;
}

std::optional<IkeTransform> proposal_transform(const IkeProposal& p, std::uint8_t type) {
    for (const auto& t : p.transforms) {
        if (t.type == type) return t;
    }
    return std::nullopt;
}

IkeProposal standard_ike_proposal() {
    IkeProposal p;
    p.protocol = kSaProtoIke;
    p.transforms = {
        {kXfEncr, kEncrAesCbc, 128},
        {kXfPrf, kPrfHmacSha256, std::nullopt},
        {kXfInteg, kIntegHmacSha256_128, std::nullopt},
        {kXfDh, kDhGroup14, std::nullopt},
    };
    return p;
}

IkeProposal standard_esp_proposal(std::uint32_t spi) {
    IkeProposal p;
    p.protocol = kSaProtoEsp;
    put_u32(p.spi, spi);
    p.transforms = {
        {kXfEncr, kEncrAesCbc, 128},
        {kXfInteg, kIntegHmacSha1_96, std::nullopt},
        {kXfEsn, kEsnNone, std::nullopt},
    };
    return p;
}

bool proposal_matches(const IkeProposal& offered, const IkeProposal& wanted) {
    if (offered.protocol != wanted.protocol) return false;
    for (const auto& t : wanted.transforms) {
        bool found = false;
        for (const auto& o : offered.transforms) {
            if (o.type == t.type && o.id == t.id && o.keylen == t.keylen) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

// --- Fixed-layout payload bodies ---------------------------------------------

Bytes ke_payload(std::uint16_t group, ByteView public_value) {
    Bytes out;
    put_u16(out, group);
    put_u16(out, 0);
    append(out, public_value);
    return out;
}

std::optional<KePayload> parse_ke(ByteView body) {
    if (body.size() < 4) return std::nullopt;
    KePayload ke;
    ke.group = get_u16(body, 0);
    ke.data = slice(body, 4, body.size() - 4);
    return ke;
}

Bytes id_payload(std::uint8_t id_type, ByteView data) {
    Bytes out{id_type, 0, 0, 0};
    append(out, data);
    return out;
}

std::optional<IdPayload> parse_id(ByteView body) {
    if (body.size() < 4) return std::nullopt;
    IdPayload id;
    id.type = body[0];
    id.data = slice(body, 4, body.size() - 4);
    return id;
}

Bytes auth_payload(std::uint8_t method, ByteView data) {
    Bytes out{method, 0, 0, 0};
    append(out, data);
    return out;
}

std::optional<AuthPayload> parse_auth(ByteView body) {
    if (body.size() < 4) return std::nullopt;
    AuthPayload a;
    a.method = body[0];
    a.data = slice(body, 4, body.size() - 4);
    return a;
}

Bytes cert_payload(ByteView der) {
    Bytes out{kCertX509Signature};
    append(out, der);
    return out;
}

std::optional<Bytes> parse_cert(ByteView body) {
    if (body.size() < 2 || body[0] != kCertX509Signature) return std::nullopt;
    return slice(body, 1, body.size() - 1);
}

Bytes notify_payload(std::uint16_t type, ByteView data) {
    Bytes out{0, 0};  // protocol 0, no SPI
    put_u16(out, type);
    append(out, data);
    return out;
}

std::optional<NotifyPayload> parse_notify(ByteView body) {
    if (body.size() < 4) return std::nullopt;
    NotifyPayload n;
    n.protocol = body[0];
    std::uint8_t spi_size = body[1];
    n.type = get_u16(body, 2);
    if (body.size() < 4u + spi_size) return std::nullopt;
    n.spi = slice(body, 4, spi_size);
    n.data = slice(body, 4 + spi_size, body.size() - 4 - spi_size);
    return n;
}

Bytes ts_payload_v4(const std::array<std::uint8_t, 4>& start,
                    const std::array<std::uint8_t, 4>& end) {
    Bytes out{1, 0, 0, 0};  // one selector
    out.push_back(7);       // TS_IPV4_ADDR_RANGE
    out.push_back(0);       // any protocol
    put_u16(out, 16);       // selector length
    put_u16(out, 0);        // start port
    put_u16(out, 0xFFFF);   // end port
    append(out, ByteView(start.data(), start.size()));
    append(out, ByteView(end.data(), end.size()));
    return out;
}

Bytes ts_payload_any_v4() { return ts_payload_v4({0, 0, 0, 0}, {255, 255, 255, 255}); }

// --- Encrypted (SK) handling ---------------------------------------------------

Bytes encode_ike_sk_message(IkeHeader header, const std::vector<IkePayloadChunk>& inner,
                            ByteView sk_e, ByteView sk_a, crypto::Rng& rng) {
    // Serialize the inner payload chain.
    Bytes plain;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        plain.push_back(i + 1 < inner.size() ? inner[i + 1].type : kPayloadNone);
        plain.push_back(0);
        put_u16(plain, static_cast<std::uint16_t>(4 + inner[i].body.size()));
        append(plain, inner[i].body);
    }
    // CBC padding: zero bytes then a pad-length byte.
    std::size_t pad = kBlock - ((plain.size() + 1) % kBlock);
    if (pad == kBlock) pad = 0;
    plain.insert(plain.end(), pad, 0);
    plain.push_back(static_cast<std::uint8_t>(pad));

    Bytes iv = rng.bytes(kBlock);
    Bytes ct = crypto::aes128_cbc_encrypt(sk_e, iv, plain);

    header.next_payload = kPayloadSk;
    Bytes out;
    put_header(out, header);
    out.push_back(inner.empty() ? kPayloadNone : inner[0].type);
    out.push_back(0);
    put_u16(out, static_cast<std::uint16_t>(4 + iv.size() + ct.size() + kIcvLen));
    append(out, iv);
    append(out, ct);
    out.insert(out.end(), kIcvLen, 0);
    patch_length(out);

    Bytes mac = crypto::hmac_sha256(sk_a, ByteView(out.data(), out.size() - kIcvLen));
    std::copy(mac.begin(), mac.begin() + kIcvLen, out.end() - kIcvLen);
    return out;
}

std::optional<std::vector<IkePayloadChunk>> decode_ike_sk_message(const IkeMessage& msg,
                                                                  ByteView sk_e, ByteView sk_a) {
    if (msg.header.next_payload != kPayloadSk || msg.payloads.size() != 1) return std::nullopt;
    const Bytes& body = msg.payloads[0].body;
    if (body.size() < kBlock + kBlock + kIcvLen) return std::nullopt;
    if (msg.raw.size() < kIcvLen) return std::nullopt;

    Bytes mac = crypto::hmac_sha256(sk_a, ByteView(msg.raw.data(), msg.raw.size() - kIcvLen));
    if (!ct_equal(ByteView(mac.data(), kIcvLen),
                  ByteView(msg.raw.data() + msg.raw.size() - kIcvLen, kIcvLen))) {
        return std::nullopt;
    }

    ByteView iv = ByteView(body).subspan(0, kBlock);
    ByteView ct = ByteView(body).subspan(kBlock, body.size() - kBlock - kIcvLen);
    if (ct.empty() || ct.size() % kBlock != 0) return std::nullopt;
    Bytes plain = crypto::aes128_cbc_decrypt(sk_e, iv, ct);
    if (plain.empty()) return std::nullopt;
    std::uint8_t pad = plain.back();
    if (plain.size() < 1u + pad) return std::nullopt;
    plain.resize(plain.size() - 1 - pad);

    // Walk the inner payload chain.  The first inner type rides in the SK
    // payload's generic header, which decode_ike_message stored as the
    // chunk's declared "next" — recover it from the raw message instead.
    std::uint8_t next = msg.raw[kHeaderLen];
    std::vector<IkePayloadChunk> out;
    std::size_t off = 0;
    while (next != kPayloadNone) {
        if (off + 4 > plain.size()) return std::nullopt;
        std::uint8_t following = plain[off];
        std::uint16_t plen = get_u16(plain, off + 2);
        if (plen < 4 || off + plen > plain.size()) return std::nullopt;
        out.push_back({next, slice(plain, off + 4, plen - 4)});
        off += plen;
        next = following;
        if (out.size() > 64) return std::nullopt;
    }
    if (off != plain.size()) return std::nullopt;
    return out;
}

// --- Key derivation -------------------------------------------------------------

Bytes prf_plus_sha256(ByteView key, ByteView seed, std::size_t len) {
    Bytes out;
    Bytes t;
    std::uint8_t counter = 1;
    while (out.size() < len) {
        Bytes input = t;
        append(input, seed);
        input.push_back(counter++);
        t = crypto::hmac_sha256(key, input);
        append(out, t);
        if (counter == 0) return {};  // > 255 blocks never happens here
    }
    out.resize(len);
    return out;
}

Bytes ikev2_skeyseed(ByteView ni, ByteView nr, ByteView shared_secret) {
    Bytes key = cat({ni, nr});
    return crypto::hmac_sha256(key, shared_secret);
}

Ikev2Keys derive_ikev2_keys(ByteView skeyseed, ByteView ni, ByteView nr, ByteView spi_i,
                            ByteView spi_r) {
    Bytes seed = cat({ni, nr, spi_i, spi_r});
    // SK_d(32) SK_ai(32) SK_ar(32) SK_ei(16) SK_er(16) SK_pi(32) SK_pr(32)
    Bytes material = prf_plus_sha256(skeyseed, seed, 32 + 32 + 32 + 16 + 16 + 32 + 32);
    Ikev2Keys keys;
    std::size_t off = 0;
    auto take = [&](std::size_t n) {
        Bytes part = slice(material, off, n);
        off += n;
        return part;
    };
    keys.sk_d = take(32);
    keys.sk_ai = take(32);
    keys.sk_ar = take(32);
    keys.sk_ei = take(16);
    keys.sk_er = take(16);
    keys.sk_pi = take(32);
    keys.sk_pr = take(32);
    return keys;
}

ChildSaKeys derive_child_keys(ByteView sk_d, ByteView ni, ByteView nr) {
    Bytes seed = cat({ni, nr});
    Bytes material = prf_plus_sha256(sk_d, seed, 2 * (16 + 20));
    ChildSaKeys keys;
    keys.enc_i = slice(material, 0, 16);
    keys.auth_i = slice(material, 16, 20);
    keys.enc_r = slice(material, 36, 16);
    keys.auth_r = slice(material, 52, 20);
    return keys;
}

Bytes ikev2_signed_octets(ByteView own_first_message, ByteView peer_nonce, ByteView sk_p,
                          ByteView id_payload_body) {
    Bytes maced_id = crypto::hmac_sha256(sk_p, id_payload_body);
    return cat({own_first_message, peer_nonce, ByteView(maced_id.data(), maced_id.size())});
}

Bytes ikev2_auth_from_msk(ByteView msk, ByteView signed_octets) {
    Bytes key = crypto::hmac_sha256(msk, to_bytes("Key Pad for IKEv2"));
    return crypto::hmac_sha256(key, signed_octets);
}

}  // namespace vpnprobe::wire
