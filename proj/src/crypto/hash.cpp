#include "vpnprobe/crypto/hash.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

namespace vpnprobe::crypto {

namespace {

Bytes evp_digest(const EVP_MD* md, ByteView data) {
    Bytes out(EVP_MD_get_size(md));
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1)
        throw std::runtime_error("EVP_Digest failed");
    out.resize(len);
    return out;
}

Bytes evp_hmac(const EVP_MD* md, ByteView key, ByteView data) {
    Bytes out(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    if (!HMAC(md, key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(),
              &len))
        throw std::runtime_error("HMAC failed");
    out.resize(len);
    return out;
}

}  // namespace

Bytes sha1(ByteView data) { return evp_digest(EVP_sha1(), data); }
Bytes sha256(ByteView data) { return evp_digest(EVP_sha256(), data); }
Bytes md5(ByteView data) { return evp_digest(EVP_md5(), data); }

Bytes hmac_sha1(ByteView key, ByteView data) { return evp_hmac(EVP_sha1(), key, data); }
Bytes hmac_sha256(ByteView key, ByteView data) { return evp_hmac(EVP_sha256(), key, data); }
Bytes hmac_md5(ByteView key, ByteView data) { return evp_hmac(EVP_md5(), key, data); }

namespace {

inline std::uint32_t rotl32(std::uint32_t x, int n) { return x << n | x >> (32 - n); }

}  // namespace

std::array<std::uint8_t, 16> md4(ByteView data) {
    std::uint32_t h0 = 0x67452301, h1 = 0xEFCDAB89, h2 = 0x98BADCFE, h3 = 0x10325476;

    Bytes msg(data.begin(), data.end());
    std::uint64_t bitlen = static_cast<std::uint64_t>(msg.size()) * 8;
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) msg.push_back(0x00);
    for (int i = 0; i < 8; ++i) msg.push_back(static_cast<std::uint8_t>(bitlen >> (8 * i)));

    for (std::size_t off = 0; off < msg.size(); off += 64) {
        std::uint32_t x[16];
        for (int i = 0; i < 16; ++i)
            x[i] = static_cast<std::uint32_t>(msg[off + 4 * i]) |
                   static_cast<std::uint32_t>(msg[off + 4 * i + 1]) << 8 |
                   static_cast<std::uint32_t>(msg[off + 4 * i + 2]) << 16 |
                   static_cast<std::uint32_t>(msg[off + 4 * i + 3]) << 24;

        std::uint32_t a = h0, b = h1, c = h2, d = h3;

        auto ff = [&x](std::uint32_t& p, std::uint32_t q, std::uint32_t r, std::uint32_t s, int k,
                       int rot) { p = rotl32(p + ((q & r) | (~q & s)) + x[k], rot); };
        auto gg = [&x](std::uint32_t& p, std::uint32_t q, std::uint32_t r, std::uint32_t s, int k,
                       int rot) {
            p = rotl32(p + ((q & r) | (q & s) | (r & s)) + x[k] + 0x5A827999u, rot);
        };
        auto hh = [&x](std::uint32_t& p, std::uint32_t q, std::uint32_t r, std::uint32_t s, int k,
                       int rot) { p = rotl32(p + (q ^ r ^ s) + x[k] + 0x6ED9EBA1u, rot); };

        for (int k = 0; k < 16; k += 4) {
            ff(a, b, c, d, k + 0, 3);
            ff(d, a, b, c, k + 1, 7);
            ff(c, d, a, b, k + 2, 11);
            ff(b, c, d, a, k + 3, 19);
        }
        for (int k = 0; k < 4; ++k) {
            gg(a, b, c, d, k + 0, 3);
            gg(d, a, b, c, k + 4, 5);
            gg(c, d, a, b, k + 8, 9);
            gg(b, c, d, a, k + 12, 13);
        }
        static constexpr int r3[4] = {0, 2, 1, 3};
        for (int i = 0; i < 4; ++i) {
            int k = r3[i];
            hh(a, b, c, d, k + 0, 3);
            hh(d, a, b, c, k + 8, 9);
            hh(c, d, a, b, k + 4, 11);
            hh(b, c, d, a, k + 12, 15);
        }

        h0 += a;
        h1 += b;
        h2 += c;
        h3 += d;
    }

    std::array<std::uint8_t, 16> out{};
    std::uint32_t h[4] = {h0, h1, h2, h3};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out[4 * i + j] = static_cast<std::uint8_t>(h[i] >> (8 * j));
    return out;
}

}  // namespace vpnprobe::crypto
