#include "vpnprobe/auth/mschapv2.hpp"

#include "vpnprobe/crypto/des.hpp"
#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::auth {

namespace {

// RFC 2759 section 8.2 signing constants.
constexpr std::uint8_t kRespMagic1[39] = {
    0x4D, 0x61, 0x67, 0x69, 0x63, 0x20, 0x73, 0x65, 0x72, 0x76, 0x65, 0x72, 0x20,
    0x74, 0x6F, 0x20, 0x63, 0x6C, 0x69, 0x65, 0x6E, 0x74, 0x20, 0x73, 0x69, 0x67,
    0x6E, 0x69, 0x6E, 0x67, 0x20, 0x63, 0x6F, 0x6E, 0x73, 0x74, 0x61, 0x6E, 0x74};

constexpr std::uint8_t kRespMagic2[41] = {
    0x50, 0x61, 0x64, 0x20, 0x74, 0x6F, 0x20, 0x6D, 0x61, 0x6B, 0x65, 0x20, 0x69, 0x74,
    0x20, 0x64, 0x6F, 0x20, 0x6D, 0x6F, 0x72, 0x65, 0x20, 0x74, 0x68, 0x61, 0x6E, 0x20,
    0x6F, 0x6E, 0x65, 0x20, 0x69, 0x74, 0x65, 0x72, 0x61, 0x74, 0x69, 0x6F, 0x6E};

}  // namespace

Bytes nt_password_hash(std::string_view password_utf8) {
    Bytes utf16 = utf8_to_utf16le(password_utf8);
    auto digest = crypto::md4(utf16);
    return Bytes(digest.begin(), digest.end());
}

Bytes hash_nt_password_hash(ByteView password_hash) {
    auto digest = crypto::md4(password_hash);
    return Bytes(digest.begin(), digest.end());
}

Bytes challenge_hash(ByteView peer_challenge16, ByteView auth_challenge16,
                     std::string_view username) {
    if (peer_challenge16.size() != 16 || auth_challenge16.size() != 16)
        throw std::invalid_argument("challenges must be 16 bytes");
    Bytes input;
    append(input, peer_challenge16);
    append(input, auth_challenge16);
    append(input, username);
    Bytes digest = crypto::sha1(input);
    digest.resize(8);
    return digest;
}

Bytes challenge_response(ByteView challenge8, ByteView password_hash16) {
    if (challenge8.size() != 8) throw std::invalid_argument("challenge must be 8 bytes");
    if (password_hash16.size() != 16) throw std::invalid_argument("password hash must be 16 bytes");
    std::uint8_t z[21] = {};
    std::copy(password_hash16.begin(), password_hash16.end(), z);
    Bytes out;
    out.reserve(24);
    for (int i = 0; i < 3; ++i) {
        auto key = crypto::des_expand_key_56(ByteView(z + 7 * i, 7));
        auto block = crypto::des_encrypt_block(key, challenge8);
        out.insert(out.end(), block.begin(), block.end());
    }
    return out;
}

Bytes generate_nt_response(ByteView auth_challenge16, ByteView peer_challenge16,
                           std::string_view username, std::string_view password_utf8) {
    Bytes challenge = challenge_hash(peer_challenge16, auth_challenge16, username);
    Bytes hash = nt_password_hash(password_utf8);
    return challenge_response(challenge, hash);
}

std::string authenticator_response(std::string_view password_utf8, ByteView nt_response24,
                                   ByteView peer_challenge16, ByteView auth_challenge16,
                                   std::string_view username) {
    if (nt_response24.size() != 24) throw std::invalid_argument("NT response must be 24 bytes");
    Bytes hash_hash = hash_nt_password_hash(nt_password_hash(password_utf8));

    Bytes first;
    append(first, hash_hash);
    append(first, nt_response24);
    append(first, ByteView(kRespMagic1, sizeof kRespMagic1));
    Bytes digest = crypto::sha1(first);

    Bytes challenge = challenge_hash(peer_challenge16, auth_challenge16, username);

    Bytes second;
    append(second, digest);
    append(second, challenge);
    append(second, ByteView(kRespMagic2, sizeof kRespMagic2));
    digest = crypto::sha1(second);

    static const char* upper = "0123456789ABCDEF";
    std::string out = "S=";
    for (std::uint8_t b : digest) {
        out.push_back(upper[b >> 4]);
        out.push_back(upper[b & 0xF]);
    }
    return out;
}

bool verify_nt_response(ByteView auth_challenge16, ByteView peer_challenge16,
                        std::string_view username, std::string_view password_utf8,
                        ByteView nt_response24) {
    Bytes expected =
        generate_nt_response(auth_challenge16, peer_challenge16, username, password_utf8);
    return ct_equal(expected, nt_response24);
}

Bytes chap_md5_response(std::uint8_t id, std::string_view secret, ByteView challenge) {
    Bytes input;
    input.push_back(id);
    append(input, secret);
    append(input, challenge);
    return crypto::md5(input);
}

}  // namespace vpnprobe::auth
