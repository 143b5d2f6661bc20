#pragma once

#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/crypto/rng.hpp"

namespace vpnprobe::crypto {

// Classic finite-field Diffie-Hellman over the well-known MODP groups used
// by IKE (group 2: 1024-bit, group 14: 2048-bit), generator 2.
struct DhKeyPair {
    int group = 14;
    Bytes private_key;
    Bytes public_key;  // fixed length: the group's prime size
};

// Prime size in bytes for a supported group (0 if unsupported).
std::size_t dh_prime_size(int group);

DhKeyPair dh_generate(int group, Rng& rng);

// g^(peer_private) ^ own_private mod p, left-padded to the prime size.
// Empty on malformed input (wrong size, zero/one, >= p).
Bytes dh_shared_secret(const DhKeyPair& own, ByteView peer_public);

}  // namespace vpnprobe::crypto
