#pragma once

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::auth {

// MS-CHAPv2 primitives.  Passwords arrive as UTF-8 and are converted to
// UTF-16LE before hashing.

Bytes nt_password_hash(std::string_view password_utf8);        // 16 bytes
Bytes hash_nt_password_hash(ByteView password_hash);           // 16 bytes

// SHA1(peer_challenge || auth_challenge || username)[0..7]
Bytes challenge_hash(ByteView peer_challenge16, ByteView auth_challenge16,
                     std::string_view username);

// 24-byte DES response over an 8-byte challenge with the 16-byte NT hash
// padded to three 7-byte DES keys.
Bytes challenge_response(ByteView challenge8, ByteView password_hash16);

Bytes generate_nt_response(ByteView auth_challenge16, ByteView peer_challenge16,
                           std::string_view username, std::string_view password_utf8);

// 42-character "S=<40 hex digits>" success proof the server must return.
std::string authenticator_response(std::string_view password_utf8, ByteView nt_response24,
                                   ByteView peer_challenge16, ByteView auth_challenge16,
                                   std::string_view username);

// Server-side check of a client's response.
bool verify_nt_response(ByteView auth_challenge16, ByteView peer_challenge16,
                        std::string_view username, std::string_view password_utf8,
                        ByteView nt_response24);

// CHAP with MD5 (algorithm 0x05): MD5(id || secret || challenge).
Bytes chap_md5_response(std::uint8_t id, std::string_view secret, ByteView challenge);

}  // namespace vpnprobe::auth
