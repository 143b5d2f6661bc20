#include "vpnprobe/crypto/sign.hpp"

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>

#include <memory>
#include <stdexcept>

namespace vpnprobe::crypto {

namespace {

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct X509Deleter {
    void operator()(X509* x) const { X509_free(x); }
};

}  // namespace

Bytes pkey_sign_sha256(const std::string& key_pem, ByteView data) {
    BIO* bio = BIO_new_mem_buf(key_pem.data(), static_cast<int>(key_pem.size()));
    std::unique_ptr<EVP_PKEY, EvpPkeyDeleter> key(
        PEM_read_bio_PrivateKey(bio, nullptr, nullptr, nullptr));
    BIO_free(bio);
    if (!key) throw std::runtime_error("could not parse signing key");

    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    if (EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) != 1) {
        throw std::runtime_error("DigestSignInit failed");
    }
    std::size_t sig_len = 0;
    if (EVP_DigestSign(ctx.get(), nullptr, &sig_len, data.data(), data.size()) != 1) {
        throw std::runtime_error("DigestSign sizing failed");
    }
    Bytes sig(sig_len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, data.data(), data.size()) != 1) {
        throw std::runtime_error("DigestSign failed");
    }
    sig.resize(sig_len);
    return sig;
}

bool cert_verify_sha256(ByteView cert_der, ByteView data, ByteView signature) {
    const unsigned char* p = cert_der.data();
    std::unique_ptr<X509, X509Deleter> cert(
        d2i_X509(nullptr, &p, static_cast<long>(cert_der.size())));
    if (!cert) return false;
    std::unique_ptr<EVP_PKEY, EvpPkeyDeleter> key(X509_get_pubkey(cert.get()));
    if (!key) return false;

    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) != 1) {
        return false;
    }
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), data.data(),
                            data.size()) == 1;
}

}  // namespace vpnprobe::crypto
