#include "vpnprobe/crypto/dh.hpp"

#include <openssl/bn.h>

#include <memory>
#include <stdexcept>

namespace vpnprobe::crypto {

namespace {

// RFC 2409 Second Oakley Group (1024-bit MODP).
constexpr const char* kGroup2Prime =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE65381FFFFFFFFFFFFFFFF";

// RFC 3526 group 14 (2048-bit MODP).
constexpr const char* kGroup14Prime =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

using BnPtr = std::unique_ptr<BIGNUM, decltype(&BN_free)>;
using CtxPtr = std::unique_ptr<BN_CTX, decltype(&BN_CTX_free)>;

BnPtr group_prime(int group) {
    const char* hex = group == 2 ? kGroup2Prime : group == 14 ? kGroup14Prime : nullptr;
    if (!hex) return BnPtr(nullptr, BN_free);
    BIGNUM* p = nullptr;
    if (BN_hex2bn(&p, hex) == 0) throw std::runtime_error("BN_hex2bn failed");
    return BnPtr(p, BN_free);
}

Bytes bn_to_fixed(const BIGNUM* v, std::size_t size) {
    Bytes out(size, 0);
    int n = BN_num_bytes(v);
    if (n < 0 || static_cast<std::size_t>(n) > size) return {};
    BN_bn2bin(v, out.data() + (size - static_cast<std::size_t>(n)));
    return out;
}

}  // namespace

std::size_t dh_prime_size(int group) {
    switch (group) {
        case 2:
            return 128;
        case 14:
            return 256;
        default:
            return 0;
    }
}

DhKeyPair dh_generate(int group, Rng& rng) {
    auto p = group_prime(group);
    if (!p) throw std::invalid_argument("unsupported DH group");

    DhKeyPair kp;
    kp.group = group;
    kp.private_key = rng.bytes(32);  // 256-bit exponent: ample for these groups

    BnPtr x(BN_bin2bn(kp.private_key.data(), static_cast<int>(kp.private_key.size()), nullptr),
            BN_free);
    BnPtr g(BN_new(), BN_free);
    BN_set_word(g.get(), 2);
    BnPtr pub(BN_new(), BN_free);
    CtxPtr ctx(BN_CTX_new(), BN_CTX_free);
    if (BN_mod_exp(pub.get(), g.get(), x.get(), p.get(), ctx.get()) != 1) {
        throw std::runtime_error("BN_mod_exp failed");
    }
    kp.public_key = bn_to_fixed(pub.get(), dh_prime_size(group));
    return kp;
}

Bytes dh_shared_secret(const DhKeyPair& own, ByteView peer_public) {
    const std::size_t size = dh_prime_size(own.group);
    if (size == 0 || peer_public.size() != size) return {};

    auto p = group_prime(own.group);
    BnPtr peer(BN_bin2bn(peer_public.data(), static_cast<int>(peer_public.size()), nullptr),
               BN_free);
    // Reject degenerate public values: y <= 1 or y >= p - 1.
    BnPtr pm1(BN_dup(p.get()), BN_free);
    BN_sub_word(pm1.get(), 1);
    if (BN_cmp(peer.get(), BN_value_one()) <= 0 || BN_cmp(peer.get(), pm1.get()) >= 0) {
        return {};
    }

    BnPtr x(BN_bin2bn(own.private_key.data(), static_cast<int>(own.private_key.size()), nullptr),
            BN_free);
    BnPtr shared(BN_new(), BN_free);
    CtxPtr ctx(BN_CTX_new(), BN_CTX_free);
    if (BN_mod_exp(shared.get(), peer.get(), x.get(), p.get(), ctx.get()) != 1) {
        return {};
    }
    return bn_to_fixed(shared.get(), size);
}

}  // namespace vpnprobe::crypto
