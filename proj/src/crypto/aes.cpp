#include "vpnprobe/crypto/aes.hpp"

#include <openssl/evp.h>

namespace vpnprobe::crypto {

namespace {

Bytes aes128_cbc(ByteView key, ByteView iv, ByteView in, bool encrypt) {
    if (key.size() != 16) throw std::invalid_argument("AES-128 key must be 16 bytes");
    if (iv.size() != 16) throw std::invalid_argument("AES CBC IV must be 16 bytes");
    if (in.size() % 16 != 0) throw std::invalid_argument("AES CBC input must be block-aligned");

    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    Bytes out(in.size() + 16);
    int len1 = 0, len2 = 0;
    bool ok = EVP_CipherInit_ex(ctx, EVP_aes_128_cbc(), nullptr, key.data(), iv.data(),
                                encrypt ? 1 : 0) == 1 &&
              EVP_CIPHER_CTX_set_padding(ctx, 0) == 1 &&
              EVP_CipherUpdate(ctx, out.data(), &len1, in.data(), static_cast<int>(in.size())) ==
                  1 &&
              EVP_CipherFinal_ex(ctx, out.data() + len1, &len2) == 1;
    EVP_CIPHER_CTX_free(ctx);
    if (!ok) throw std::runtime_error("AES-128-CBC operation failed");
    out.resize(static_cast<std::size_t>(len1 + len2));
    return out;
}

}  // namespace

Bytes aes128_cbc_encrypt(ByteView key, ByteView iv, ByteView plaintext) {
    return aes128_cbc(key, iv, plaintext, true);
}

Bytes aes128_cbc_decrypt(ByteView key, ByteView iv, ByteView ciphertext) {
    return aes128_cbc(key, iv, ciphertext, false);
}

}  // namespace vpnprobe::crypto
