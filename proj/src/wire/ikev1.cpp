#include "vpnprobe/wire/ikev1.hpp"

#include <algorithm>

#include "vpnprobe/crypto/aes.hpp"
#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::wire {

namespace {

constexpr std::size_t kHdrLen = 28;
constexpr std::size_t kBlock = 16;
constexpr std::uint32_t kDoiIpsec = 1;
constexpr std::uint32_t kSitIdentityOnly = 1;

void put_header(Bytes& out, const IsakmpHeader& h) {
    append(out, ByteView(h.cky_i.data(), 8));
    append(out, ByteView(h.cky_r.data(), 8));
    out.push_back(h.next_payload);
    out.push_back(h.version);
    out.push_back(h.exchange);
    out.push_back(h.flags);
    put_u32(out, h.message_id);
    put_u32(out, h.length);
}

void patch_length(Bytes& msg) {
    const auto len = static_cast<std::uint32_t>(msg.size());
    msg[24] = std::uint8_t(len >> 24);
    msg[25] = std::uint8_t(len >> 16);
    msg[26] = std::uint8_t(len >> 8);
    msg[27] = std::uint8_t(len);
}

std::optional<IsakmpHeader> parse_header(ByteView raw) {
    if (raw.size() < kHdrLen) return std::nullopt;
    IsakmpHeader h;
    std::copy(raw.begin(), raw.begin() + 8, h.cky_i.begin());
    std::copy(raw.begin() + 8, raw.begin() + 16, h.cky_r.begin());
    h.next_payload = raw[16];
    h.version = raw[17];
    h.exchange = raw[18];
    h.flags = raw[19];
    h.message_id = get_u32(raw, 20);
    h.length = get_u32(raw, 24);
    if ((h.version & 0xF0) != kIsakmpVersion) return std::nullopt;
    if (h.length != raw.size()) return std::nullopt;
    return h;
}

// Encodes one attribute, TV when the value fits 16 bits, TLV otherwise.
void put_attr(Bytes& out, std::uint16_t type, std::uint32_t value) {
    if (value <= 0xFFFF) {
        put_u16(out, std::uint16_t(type | 0x8000));
        put_u16(out, std::uint16_t(value));
    } else {
        put_u16(out, type);
        put_u16(out, 4);
        put_u32(out, value);
    }
}

bool parse_attrs(ByteView body, std::vector<std::pair<std::uint16_t, std::uint32_t>>& out) {
    std::size_t off = 0;
    while (off < body.size()) {
        if (off + 4 > body.size()) return false;
        std::uint16_t type = get_u16(body, off);
        if (type & 0x8000) {
            out.emplace_back(type & 0x7FFF, get_u16(body, off + 2));
            off += 4;
        } else {
            std::uint16_t len = get_u16(body, off + 2);
            if (off + 4 + len > body.size()) return false;
            std::uint32_t value = 0;
            if (len == 2) {
                value = get_u16(body, off + 4);
            } else if (len == 4) {
                value = get_u32(body, off + 4);
            } else {
                // Lengths other than 2/4 carry material this harness never
                // negotiates; record as zero so unknown attrs stay skippable.
                value = 0;
            }
            out.emplace_back(type, value);
            off += 4 + len;
        }
    }
    return true;
}

}  // namespace

Bytes encode_isakmp_chain(const std::vector<IkePayloadChunk>& payloads) {
    Bytes out;
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        out.push_back(i + 1 < payloads.size() ? payloads[i + 1].type : 0);
        out.push_back(0);
        put_u16(out, static_cast<std::uint16_t>(4 + payloads[i].body.size()));
        append(out, payloads[i].body);
    }
    return out;
}

Bytes encode_isakmp_message(IsakmpHeader header, const std::vector<IkePayloadChunk>& payloads) {
    header.next_payload = payloads.empty() ? 0 : payloads[0].type;
    Bytes out;
    put_header(out, header);
    append(out, encode_isakmp_chain(payloads));
    patch_length(out);
    return out;
}

std::optional<std::vector<IkePayloadChunk>> parse_isakmpayloads_impl(std::uint8_t first,
                                                                     ByteView body,
                                                                     bool tolerate_padding) {
    std::vector<IkePayloadChunk> out;
    std::uint8_t next = first;
    std::size_t off = 0;
    while (next != 0) {
        if (out.size() >= 64) return std::nullopt;
        if (off + 4 > body.size()) return std::nullopt;
        std::uint8_t following = body[off];
        std::uint16_t len = get_u16(body, off + 2);
        if (len < 4 || off + len > body.size()) return std::nullopt;
        out.push_back({next, Bytes(body.begin() + off + 4, body.begin() + off + len)});
        off += len;
        next = following;
    }
    std::size_t leftover = body.size() - off;
    if (leftover != 0 && (!tolerate_padding || leftover >= kBlock)) return std::nullopt;
    return out;
}

std::optional<std::vector<IkePayloadChunk>> parse_isakmp_payloads(std::uint8_t first_type,
                                                                  ByteView body,
                                                                  bool tolerate_padding) {
    return parse_isakmpayloads_impl(first_type, body, tolerate_padding);
}

std::optional<IsakmpMessage> decode_isakmp_message(ByteView raw) {
    auto header = parse_header(raw);
    if (!header) return std::nullopt;
    IsakmpMessage msg;
    msg.header = *header;
    msg.raw.assign(raw.begin(), raw.end());
    if (header->flags & kIsakmpFlagEncryption) return msg;  // body is opaque
    auto payloads =
        parse_isakmp_payloads(header->next_payload, raw.subspan(kHdrLen), false);
    if (!payloads) return std::nullopt;
    msg.payloads = std::move(*payloads);
    return msg;
}

const IkePayloadChunk* find_v1_payload(const std::vector<IkePayloadChunk>& payloads,
                                       std::uint8_t type) {
    for (const auto& p : payloads) {
        if (p.type == type) return &p;
    }
    return nullptr;
}

// --- SA payload ---------------------------------------------------------------

Bytes encode_ikev1_sa_body(const std::vector<Ikev1Proposal>& proposals) {
    Bytes out;
    put_u32(out, kDoiIpsec);
    put_u32(out, kSitIdentityOnly);
    for (std::size_t pi = 0; pi < proposals.size(); ++pi) {
        const auto& p = proposals[pi];
        Bytes pbody;
        pbody.push_back(p.number);
        pbody.push_back(p.protocol);
        pbody.push_back(static_cast<std::uint8_t>(p.spi.size()));
        pbody.push_back(static_cast<std::uint8_t>(p.transforms.size()));
        append(pbody, p.spi);
        for (std::size_t ti = 0; ti < p.transforms.size(); ++ti) {
            const auto& t = p.transforms[ti];
            Bytes attrs;
            for (auto [type, value] : t.attrs) put_attr(attrs, type, value);
            pbody.push_back(ti + 1 < p.transforms.size() ? kV1PayloadTransform : 0);
            pbody.push_back(0);
            put_u16(pbody, static_cast<std::uint16_t>(8 + attrs.size()));
            pbody.push_back(t.number);
            pbody.push_back(t.id);
            put_u16(pbody, 0);
            append(pbody, attrs);
        }
        out.push_back(pi + 1 < proposals.size() ? kV1PayloadProposal : 0);
        out.push_back(0);
        put_u16(out, static_cast<std::uint16_t>(4 + pbody.size()));
        append(out, pbody);
    }
    return out;
}

std::optional<std::vector<Ikev1Proposal>> decode_ikev1_sa_body(ByteView body) {
    if (body.size() < 8) return std::nullopt;
    if (get_u32(body, 0) != kDoiIpsec) return std::nullopt;
    std::vector<Ikev1Proposal> out;
    std::size_t off = 8;
    bool more = off < body.size();
    while (more) {
        if (off + 8 > body.size()) return std::nullopt;
        std::uint8_t next = body[off];
        std::uint16_t plen = get_u16(body, off + 2);
        if (plen < 8 || off + plen > body.size()) return std::nullopt;
        Ikev1Proposal p;
        p.number = body[off + 4];
        p.protocol = body[off + 5];
        std::uint8_t spi_size = body[off + 6];
        std::uint8_t n_trans = body[off + 7];
        std::size_t toff = off + 8;
        if (toff + spi_size > off + plen) return std::nullopt;
        p.spi.assign(body.begin() + toff, body.begin() + toff + spi_size);
        toff += spi_size;
        for (std::uint8_t ti = 0; ti < n_trans; ++ti) {
            if (toff + 8 > off + plen) return std::nullopt;
            std::uint16_t tlen = get_u16(body, toff + 2);
            if (tlen < 8 || toff + tlen > off + plen) return std::nullopt;
            Ikev1Transform t;
            t.number = body[toff + 4];
            t.id = body[toff + 5];
            if (!parse_attrs(body.subspan(toff + 8, tlen - 8), t.attrs)) return std::nullopt;
            p.transforms.push_back(std::move(t));
            toff += tlen;
        }
        out.push_back(std::move(p));
        off += plen;
        more = next != 0;
    }
    return out;
}

std::optional<std::uint32_t> transform_attr(const Ikev1Transform& t, std::uint16_t attr) {
    for (auto [type, value] : t.attrs) {
        if (type == attr) return value;
    }
    return std::nullopt;
}

Ikev1Proposal standard_p1_proposal(std::uint16_t group, bool xauth) {
    Ikev1Transform t;
    t.id = kV1TransformKeyIke;
    t.attrs = {{kP1AttrEncryption, kP1EncrAesCbc},
               {kP1AttrKeyLength, 128},
               {kP1AttrHash, kP1HashSha1},
               {kP1AttrAuthMethod, xauth ? kP1AuthXauthInitPsk : kP1AuthPsk},
               {kP1AttrGroup, group},
               {kP1AttrLifeType, 1},
               {kP1AttrLifeDuration, 28800}};
    Ikev1Proposal p;
    p.protocol = kV1ProtoIsakmp;
    p.transforms = {std::move(t)};
    return p;
}

std::optional<std::pair<Ikev1Transform, std::uint16_t>> select_p1_transform(
    const std::vector<Ikev1Proposal>& offered, bool allow_xauth) {
    for (const auto& p : offered) {
        if (p.protocol != kV1ProtoIsakmp) continue;
        for (const auto& t : p.transforms) {
            if (t.id != kV1TransformKeyIke) continue;
            auto enc = transform_attr(t, kP1AttrEncryption);
            auto keylen = transform_attr(t, kP1AttrKeyLength);
            auto hash = transform_attr(t, kP1AttrHash);
            auto auth = transform_attr(t, kP1AttrAuthMethod);
            auto group = transform_attr(t, kP1AttrGroup);
            if (!enc || *enc != kP1EncrAesCbc) continue;
            if (keylen && *keylen != 128) continue;
            if (!hash || *hash != kP1HashSha1) continue;
            if (!auth) continue;
            if (*auth != kP1AuthPsk && !(allow_xauth && *auth == kP1AuthXauthInitPsk)) continue;
            if (!group || (*group != 2 && *group != 14)) continue;
            return std::make_pair(t, static_cast<std::uint16_t>(*group));
        }
    }
    return std::nullopt;
}

Ikev1Proposal standard_esp_transport_proposal(ByteView spi4) {
    Ikev1Transform t;
    t.id = kP2TransformEspAes;
    t.attrs = {{kP2AttrEncapMode, kP2EncapTransport},
               {kP2AttrAuthAlg, kP2AuthHmacSha1},
               {kP2AttrKeyLength, 128},
               {kP2AttrLifeType, 1},
               {kP2AttrLifeDuration, 3600}};
    Ikev1Proposal p;
    p.protocol = kV1ProtoEsp;
    p.spi.assign(spi4.begin(), spi4.end());
    p.transforms = {std::move(t)};
    return p;
}

bool esp_transport_transform_ok(const Ikev1Proposal& offered) {
    if (offered.protocol != kV1ProtoEsp || offered.spi.size() != 4) return false;
    for (const auto& t : offered.transforms) {
        if (t.id != kP2TransformEspAes) continue;
        auto encap = transform_attr(t, kP2AttrEncapMode);
        auto auth = transform_attr(t, kP2AttrAuthAlg);
        auto keylen = transform_attr(t, kP2AttrKeyLength);
        if (encap && *encap == kP2EncapTransport && auth && *auth == kP2AuthHmacSha1 &&
            (!keylen || *keylen == 128)) {
            return true;
        }
    }
    return false;
}

// --- Other payloads --------------------------------------------------------------

Bytes ikev1_id_body(std::uint8_t type, ByteView data, std::uint8_t protocol, std::uint16_t port) {
    Bytes out;
    out.push_back(type);
    out.push_back(protocol);
    put_u16(out, port);
    append(out, data);
    return out;
}

std::optional<Ikev1Id> parse_ikev1_id(ByteView body) {
    if (body.size() < 4) return std::nullopt;
    Ikev1Id id;
    id.type = body[0];
    id.protocol = body[1];
    id.port = get_u16(body, 2);
    id.data.assign(body.begin() + 4, body.end());
    return id;
}

Bytes ikev1_notify_body(std::uint8_t protocol, std::uint16_t type, ByteView data) {
    Bytes out;
    put_u32(out, kDoiIpsec);
    out.push_back(protocol);
    out.push_back(0);  // SPI size
    put_u16(out, type);
    append(out, data);
    return out;
}

Bytes encode_ikev1_config(const Ikev1ConfigPayload& cfg) {
    Bytes out;
    out.push_back(cfg.type);
    out.push_back(0);
    put_u16(out, cfg.identifier);
    for (const auto& [type, value] : cfg.attrs) {
        put_u16(out, type);
        put_u16(out, static_cast<std::uint16_t>(value.size()));
        append(out, value);
    }
    return out;
}

std::optional<Ikev1ConfigPayload> parse_ikev1_config(ByteView body) {
    if (body.size() < 4) return std::nullopt;
    Ikev1ConfigPayload cfg;
    cfg.type = body[0];
    cfg.identifier = get_u16(body, 2);
    std::size_t off = 4;
    while (off < body.size()) {
        if (off + 4 > body.size()) return std::nullopt;
        std::uint16_t type = get_u16(body, off);
        if (type & 0x8000) {
            Bytes value;
            put_u16(value, get_u16(body, off + 2));
            cfg.attrs.emplace_back(type & 0x7FFF, std::move(value));
            off += 4;
        } else {
            std::uint16_t len = get_u16(body, off + 2);
            if (off + 4 + len > body.size()) return std::nullopt;
            cfg.attrs.emplace_back(type,
                                   Bytes(body.begin() + off + 4, body.begin() + off + 4 + len));
            off += 4 + len;
        }
    }
    return cfg;
}

const Bytes* config_attr(const Ikev1ConfigPayload& cfg, std::uint16_t type) {
    for (const auto& [t, v] : cfg.attrs) {
        if (t == type) return &v;
    }
    return nullptr;
}

// --- Key derivation ---------------------------------------------------------------

Bytes ikev1_skeyid_psk(ByteView psk, ByteView ni_b, ByteView nr_b) {
    return crypto::hmac_sha1(psk, cat({ni_b, nr_b}));
}

Ikev1KeySet ikev1_derive_keys(ByteView skeyid, ByteView shared, ByteView cky_i, ByteView cky_r) {
    Ikev1KeySet k;
    k.skeyid.assign(skeyid.begin(), skeyid.end());
    k.skeyid_d = crypto::hmac_sha1(skeyid, cat({shared, cky_i, cky_r, ByteView((const std::uint8_t*)"\x00", 1)}));
    k.skeyid_a = crypto::hmac_sha1(
        skeyid, cat({ByteView(k.skeyid_d), shared, cky_i, cky_r, ByteView((const std::uint8_t*)"\x01", 1)}));
    k.skeyid_e = crypto::hmac_sha1(
        skeyid, cat({ByteView(k.skeyid_a), shared, cky_i, cky_r, ByteView((const std::uint8_t*)"\x02", 1)}));
    k.enc_key.assign(k.skeyid_e.begin(), k.skeyid_e.begin() + kBlock);
    return k;
}

Bytes ikev1_hash_i(ByteView skeyid, ByteView g_xi, ByteView g_xr, ByteView cky_i, ByteView cky_r,
                   ByteView sai_b, ByteView idii_b) {
    return crypto::hmac_sha1(skeyid, cat({g_xi, g_xr, cky_i, cky_r, sai_b, idii_b}));
}

Bytes ikev1_hash_r(ByteView skeyid, ByteView g_xi, ByteView g_xr, ByteView cky_i, ByteView cky_r,
                   ByteView sai_b, ByteView idir_b) {
    return crypto::hmac_sha1(skeyid, cat({g_xr, g_xi, cky_r, cky_i, sai_b, idir_b}));
}

Bytes ikev1_phase1_iv(ByteView g_xi, ByteView g_xr) {
    Bytes h = crypto::sha1(cat({g_xi, g_xr}));
    h.resize(kBlock);
    return h;
}

Bytes ikev1_exchange_hash(ByteView skeyid_a, std::uint32_t message_id, ByteView after_hash) {
    Bytes mid;
    put_u32(mid, message_id);
    return crypto::hmac_sha1(skeyid_a, cat({ByteView(mid), after_hash}));
}

Bytes ikev1_quick_hash2(ByteView skeyid_a, std::uint32_t message_id, ByteView ni_b,
                        ByteView after_hash) {
    Bytes mid;
    put_u32(mid, message_id);
    return crypto::hmac_sha1(skeyid_a, cat({ByteView(mid), ni_b, after_hash}));
}

Bytes ikev1_quick_hash3(ByteView skeyid_a, std::uint32_t message_id, ByteView ni_b, ByteView nr_b) {
    Bytes buf;
    buf.push_back(0);
    put_u32(buf, message_id);
    return crypto::hmac_sha1(skeyid_a, cat({ByteView(buf), ni_b, nr_b}));
}

Bytes ikev1_keymat(ByteView skeyid_d, std::uint8_t protocol, ByteView spi, ByteView ni_b,
                   ByteView nr_b, std::size_t len) {
    Bytes seed;
    seed.push_back(protocol);
    append(seed, spi);
    append(seed, ni_b);
    append(seed, nr_b);
    Bytes out;
    Bytes block;
    while (out.size() < len) {
        block = block.empty() ? crypto::hmac_sha1(skeyid_d, seed)
                              : crypto::hmac_sha1(skeyid_d, cat({ByteView(block), ByteView(seed)}));
        append(out, block);
    }
    out.resize(len);
    return out;
}

// --- Message encryption -------------------------------------------------------------

std::optional<Bytes> ikev1_decrypt_body(ByteView key, ByteView iv, ByteView raw) {
    if (raw.size() <= kHdrLen) return std::nullopt;
    ByteView body = raw.subspan(kHdrLen);
    if (body.size() % kBlock != 0) return std::nullopt;
    return crypto::aes128_cbc_decrypt(key, iv, body);
}

Ikev1Cipher::Ikev1Cipher(Bytes enc_key, Bytes phase1_iv)
    : key_(std::move(enc_key)), phase1_iv_(std::move(phase1_iv)) {}

Bytes& Ikev1Cipher::iv_for(const IsakmpHeader& header) {
    auto it = iv_.find(header.message_id);
    if (it != iv_.end()) return it->second;
    Bytes start;
    if (header.message_id == 0) {
        start = phase1_iv_;
    } else {
        Bytes mid;
        put_u32(mid, header.message_id);
        start = crypto::sha1(cat({ByteView(last_phase1_block_), ByteView(mid)}));
        start.resize(kBlock);
    }
    return iv_.emplace(header.message_id, std::move(start)).first->second;
}

Bytes Ikev1Cipher::seal(ByteView plain_msg) {
    auto header = parse_header(plain_msg);
    if (!header) return {};
    Bytes plain(plain_msg.begin() + kHdrLen, plain_msg.end());
    std::size_t pad = (kBlock - plain.size() % kBlock) % kBlock;
    plain.insert(plain.end(), pad, 0);

    Bytes& iv = iv_for(*header);
    Bytes ct = crypto::aes128_cbc_encrypt(key_, iv, plain);

    Bytes out(plain_msg.begin(), plain_msg.begin() + kHdrLen);
    out[19] |= kIsakmpFlagEncryption;
    append(out, ct);
    patch_length(out);

    iv.assign(ct.end() - kBlock, ct.end());
    if (header->message_id == 0) last_phase1_block_ = iv;
    return out;
}

std::optional<Bytes> Ikev1Cipher::open(ByteView raw) {
    auto header = parse_header(raw);
    if (!header || !(header->flags & kIsakmpFlagEncryption)) return std::nullopt;
    if (raw.size() <= kHdrLen || (raw.size() - kHdrLen) % kBlock != 0) return std::nullopt;
    ByteView body = raw.subspan(kHdrLen);

    Bytes& iv = iv_for(*header);
    Bytes plain = crypto::aes128_cbc_decrypt(key_, iv, body);

    iv.assign(body.end() - kBlock, body.end());
    if (header->message_id == 0) last_phase1_block_ = iv;
    return plain;
}

// --- Candidate PSK matching ------------------------------------------------------------

std::optional<Ikev1PskMatch> ikev1_match_psk(ByteView m5_raw, const Ikev1Phase1Material& material,
                                             const std::vector<PskCandidate>& candidates) {
    auto header = parse_header(m5_raw);
    if (!header || !(header->flags & kIsakmpFlagEncryption)) return std::nullopt;
    if (header->message_id != 0) return std::nullopt;

    const Bytes iv = ikev1_phase1_iv(material.g_xi, material.g_xr);
    for (const auto& candidate : candidates) {
        Bytes skeyid = ikev1_skeyid_psk(to_bytes(candidate.key), material.ni, material.nr);
        Ikev1KeySet keys =
            ikev1_derive_keys(skeyid, material.shared, material.cky_i, material.cky_r);
        auto plain = ikev1_decrypt_body(keys.enc_key, iv, m5_raw);
        if (!plain) continue;
        auto payloads = parse_isakmp_payloads(header->next_payload, *plain, true);
        if (!payloads) continue;
        auto id = find_v1_payload(*payloads, kV1PayloadId);
        auto hash = find_v1_payload(*payloads, kV1PayloadHash);
        if (!id || !hash) continue;
        Bytes expected = ikev1_hash_i(skeyid, material.g_xi, material.g_xr, material.cky_i,
                                      material.cky_r, material.sai_b, id->body);
        if (!ct_equal(hash->body, expected)) continue;
        Ikev1PskMatch match;
        match.candidate = candidate;
        match.keys = std::move(keys);
        match.idii_b = id->body;
        match.hash_i = std::move(expected);
        return match;
    }
    return std::nullopt;
}

}  // namespace vpnprobe::wire
