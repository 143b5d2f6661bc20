#include "vpnprobe/net/tls.hpp"

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>
#include <sys/socket.h>

#include <atomic>
#include <cerrno>
#include <ctime>
#include <mutex>

#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::net {

namespace {

[[noreturn]] void throw_openssl(const std::string& what) {
    char buf[256] = {};
    ERR_error_string_n(ERR_get_error(), buf, sizeof buf);
    throw std::runtime_error(what + ": " + buf);
}

// Key generation dominates certificate minting, and tests mint many
// certificates; two cached process-wide keys keep that cheap.  Uniqueness of
// certificates comes from subjects and serial numbers, which is all the
// harness cares about.
EVP_PKEY* cached_key(int slot) {
    static std::mutex mu;
    static EVP_PKEY* keys[2] = {nullptr, nullptr};
    std::lock_guard lock(mu);
    if (!keys[slot]) {
        keys[slot] = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(2048));
        if (!keys[slot]) throw_openssl("RSA keygen");
    }
    return keys[slot];
}

struct X509Deleter {
    void operator()(X509* x) const { X509_free(x); }
};
using X509Ptr = std::unique_ptr<X509, X509Deleter>;

std::string bio_to_string(BIO* bio) {
    char* data = nullptr;
    long len = BIO_get_mem_data(bio, &data);
    return std::string(data, static_cast<std::size_t>(len));
}

std::string name_cn(X509_NAME* name) {
    char buf[256] = {};
    int n = X509_NAME_get_text_by_NID(name, NID_commonName, buf, sizeof buf);
    return n > 0 ? std::string(buf, static_cast<std::size_t>(n)) : std::string();
}

TlsCertificate finish_certificate(X509* x, EVP_PKEY* key) {
    TlsCertificate out;

    BIO* bio = BIO_new(BIO_s_mem());
    PEM_write_bio_X509(bio, x);
    out.cert_pem = bio_to_string(bio);
    BIO_free(bio);

    bio = BIO_new(BIO_s_mem());
    PEM_write_bio_PrivateKey(bio, key, nullptr, nullptr, 0, nullptr, nullptr);
    out.key_pem = bio_to_string(bio);
    BIO_free(bio);

    unsigned char* der = nullptr;
    int der_len = i2d_X509(x, &der);
    if (der_len <= 0) throw_openssl("i2d_X509");
    out.cert_der.assign(der, der + der_len);
    OPENSSL_free(der);

    out.fingerprint_sha256 = crypto::sha256(out.cert_der);
    out.subject_cn = name_cn(X509_get_subject_name(x));
    out.issuer_cn = name_cn(X509_get_issuer_name(x));
    return out;
}

X509Ptr build_certificate(const CertSpec& spec, EVP_PKEY* subject_key, X509* issuer,
                          EVP_PKEY* issuer_key, bool is_ca) {
    X509Ptr x(X509_new());
    if (!x) throw_openssl("X509_new");
    X509_set_version(x.get(), 2);

    static std::atomic<long> serial_counter{1};
    long serial = static_cast<long>(std::time(nullptr) % 100000000) * 1000 +
                  serial_counter.fetch_add(1);
    ASN1_INTEGER_set(X509_get_serialNumber(x.get()), serial);

    if (spec.expired) {
        X509_gmtime_adj(X509_getm_notBefore(x.get()), -60L * 60 * 24 * 30);
        X509_gmtime_adj(X509_getm_notAfter(x.get()), -60L * 60 * 24);
    } else {
        X509_gmtime_adj(X509_getm_notBefore(x.get()), -60);
        X509_gmtime_adj(X509_getm_notAfter(x.get()), 60L * 60 * 24 * spec.days);
    }

    X509_NAME* subject = X509_get_subject_name(x.get());
    X509_NAME_add_entry_by_txt(subject, "CN", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>(spec.cn.c_str()), -1, -1, 0);
    X509_set_issuer_name(x.get(), issuer ? X509_get_subject_name(issuer) : subject);
    X509_set_pubkey(x.get(), subject_key);

    X509V3_CTX ext_ctx;
    X509V3_set_ctx_nodb(&ext_ctx);
    X509V3_set_ctx(&ext_ctx, issuer ? issuer : x.get(), x.get(), nullptr, nullptr, 0);

    auto add_ext = [&](int nid, const char* value) {
        X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ext_ctx, nid, value);
        if (ext) {
            X509_add_ext(x.get(), ext, -1);
            X509_EXTENSION_free(ext);
        }
    };
    add_ext(NID_basic_constraints, is_ca ? "critical,CA:TRUE" : "critical,CA:FALSE");
    if (!spec.dns_names.empty()) {
        std::string san;
        for (const auto& d : spec.dns_names) {
            if (!san.empty()) san += ",";
            san += "DNS:" + d;
        }
        add_ext(NID_subject_alt_name, san.c_str());
    }

    if (X509_sign(x.get(), issuer_key ? issuer_key : subject_key, EVP_sha256()) == 0)
        throw_openssl("X509_sign");
    return x;
}

}  // namespace

TlsCertificate generate_self_signed(const CertSpec& spec) {
    EVP_PKEY* key = cached_key(1);
    X509Ptr x = build_certificate(spec, key, nullptr, nullptr, false);
    return finish_certificate(x.get(), key);
}

CertAuthority CertAuthority::create(const std::string& cn) {
    CertAuthority ca;
    EVP_PKEY* key = cached_key(0);
    CertSpec spec;
    spec.cn = cn;
    spec.days = 3650;
    X509Ptr x = build_certificate(spec, key, nullptr, nullptr, true);
    ca.root_ = finish_certificate(x.get(), key);
    return ca;
}

TlsCertificate CertAuthority::issue(const CertSpec& spec) const {
    EVP_PKEY* leaf_key = cached_key(1);
    EVP_PKEY* ca_key = cached_key(0);

    BIO* bio = BIO_new_mem_buf(root_.cert_pem.data(), static_cast<int>(root_.cert_pem.size()));
    X509Ptr ca_cert(PEM_read_bio_X509(bio, nullptr, nullptr, nullptr));
    BIO_free(bio);
    if (!ca_cert) throw_openssl("parse CA cert");

    X509Ptr x = build_certificate(spec, leaf_key, ca_cert.get(), ca_key, false);
    return finish_certificate(x.get(), leaf_key);
}

namespace {

void apply_socket_timeout(int fd, Millis timeout) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>(timeout.count() % 1000 * 1000);
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

SSL_CTX* make_ctx(bool server) {
    SSL_CTX* ctx = SSL_CTX_new(server ? TLS_server_method() : TLS_client_method());
    if (!ctx) throw_openssl("SSL_CTX_new");
    SSL_CTX_set_verify(ctx, SSL_VERIFY_NONE, nullptr);
    return ctx;
}

void load_cert(SSL_CTX* ctx, const TlsCertificate& cert) {
    BIO* bio = BIO_new_mem_buf(cert.cert_pem.data(), static_cast<int>(cert.cert_pem.size()));
    X509Ptr x(PEM_read_bio_X509(bio, nullptr, nullptr, nullptr));
    BIO_free(bio);
    if (!x || SSL_CTX_use_certificate(ctx, x.get()) != 1) throw_openssl("use_certificate");

    bio = BIO_new_mem_buf(cert.key_pem.data(), static_cast<int>(cert.key_pem.size()));
    EVP_PKEY* key = PEM_read_bio_PrivateKey(bio, nullptr, nullptr, nullptr);
    BIO_free(bio);
    if (!key) throw_openssl("parse key");
    int rc = SSL_CTX_use_PrivateKey(ctx, key);
    EVP_PKEY_free(key);
    if (rc != 1) throw_openssl("use_PrivateKey");
}

TlsVerifyOutcome evaluate_peer(SSL* ssl, const TlsClientPolicy& policy) {
    TlsVerifyOutcome outcome;
    X509Ptr leaf(SSL_get1_peer_certificate(ssl));
    if (!leaf) {
        outcome.failure = "server presented no certificate";
        return outcome;
    }

    unsigned char* der = nullptr;
    int der_len = i2d_X509(leaf.get(), &der);
    if (der_len > 0) {
        Bytes der_bytes(der, der + der_len);
        OPENSSL_free(der);
        outcome.peer_fingerprint_sha256 = crypto::sha256(der_bytes);
        outcome.peer_cert_der = std::move(der_bytes);
    }
    outcome.peer_cn = name_cn(X509_get_subject_name(leaf.get()));

    switch (policy.mode) {
        case TlsVerifyMode::None:
            outcome.cert_ok = true;
            return outcome;

        case TlsVerifyMode::PinnedFingerprint:
            if (outcome.peer_fingerprint_sha256 == policy.pinned_fingerprint) {
                outcome.cert_ok = true;
            } else {
                outcome.failure = "certificate fingerprint does not match the pinned value";
            }
            return outcome;

        case TlsVerifyMode::CaAndHostname: {
            X509_STORE* store = X509_STORE_new();
            if (!policy.ca_pem.empty()) {
                BIO* bio =
                    BIO_new_mem_buf(policy.ca_pem.data(), static_cast<int>(policy.ca_pem.size()));
                X509Ptr ca(PEM_read_bio_X509(bio, nullptr, nullptr, nullptr));
                BIO_free(bio);
                if (ca) X509_STORE_add_cert(store, ca.get());
            }
            X509_STORE_CTX* vctx = X509_STORE_CTX_new();
            X509_STORE_CTX_init(vctx, store, leaf.get(), SSL_get_peer_cert_chain(ssl));
            int ok = X509_verify_cert(vctx);
            int err = X509_STORE_CTX_get_error(vctx);
            X509_STORE_CTX_free(vctx);
            X509_STORE_free(store);
            if (ok != 1) {
                outcome.failure = std::string("chain validation failed: ") +
                                  X509_verify_cert_error_string(err);
                return outcome;
            }
            if (!policy.expect_hostname.empty() &&
                X509_check_host(leaf.get(), policy.expect_hostname.c_str(),
                                policy.expect_hostname.size(), 0, nullptr) != 1) {
                outcome.failure = "certificate does not match hostname " + policy.expect_hostname;
                return outcome;
            }
            outcome.cert_ok = true;
            return outcome;
        }
    }
    outcome.failure = "unknown verification mode";
    return outcome;
}

}  // namespace

TlsStream::TlsStream(TlsStream&& other) noexcept
    : ssl_(std::exchange(other.ssl_, nullptr)),
      sock_(std::move(other.sock_)),
      verify_outcome_(std::move(other.verify_outcome_)) {}

TlsStream& TlsStream::operator=(TlsStream&& other) noexcept {
    if (this != &other) {
        if (ssl_) SSL_free(ssl_);
        ssl_ = std::exchange(other.ssl_, nullptr);
        sock_ = std::move(other.sock_);
        verify_outcome_ = std::move(other.verify_outcome_);
    }
    return *this;
}

TlsStream::~TlsStream() {
    if (ssl_) SSL_free(ssl_);
}

std::optional<std::size_t> TlsStream::read_some(std::span<std::uint8_t> out, Millis timeout) {
    if (!ssl_ || out.empty()) return std::nullopt;
    apply_socket_timeout(sock_.fd(), timeout);
    errno = 0;
    int n = SSL_read(ssl_, out.data(), static_cast<int>(out.size()));
    if (n > 0) return static_cast<std::size_t>(n);
    int err = SSL_get_error(ssl_, n);
    if (err == SSL_ERROR_ZERO_RETURN) return std::nullopt;  // clean TLS shutdown
    if (err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) return 0;
    if (err == SSL_ERROR_SYSCALL &&
        (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
        return 0;  // receive timeout expired: no data yet
    }
    return std::nullopt;
}

bool TlsStream::read_exact(std::span<std::uint8_t> out, Millis timeout) {
    std::size_t got = 0;
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (got < out.size()) {
        auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return false;
        auto n = read_some(out.subspan(got), left);
        if (!n) return false;
        got += *n;
    }
    return true;
}

bool TlsStream::write_all(ByteView data, Millis timeout) {
    if (!ssl_) return false;
    apply_socket_timeout(sock_.fd(), timeout);
    std::size_t sent = 0;
    while (sent < data.size()) {
        int n = SSL_write(ssl_, data.data() + sent, static_cast<int>(data.size() - sent));
        if (n <= 0) return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

void TlsStream::shutdown() {
    if (ssl_) SSL_shutdown(ssl_);
    sock_.shutdown_both();
}

TlsServer::TlsServer(const TlsCertificate& cert) : ctx_(make_ctx(true)) {
    load_cert(ctx_, cert);
}

TlsServer::TlsServer(TlsServer&& other) noexcept : ctx_(std::exchange(other.ctx_, nullptr)) {}

TlsServer& TlsServer::operator=(TlsServer&& other) noexcept {
    if (this != &other) {
        if (ctx_) SSL_CTX_free(ctx_);
        ctx_ = std::exchange(other.ctx_, nullptr);
    }
    return *this;
}

TlsServer::~TlsServer() {
    if (ctx_) SSL_CTX_free(ctx_);
}

std::optional<TlsStream> TlsServer::accept(TcpStream sock, Millis timeout) {
    if (!sock.valid()) return std::nullopt;
    apply_socket_timeout(sock.fd(), timeout);
    SSL* ssl = SSL_new(ctx_);
    if (!ssl) return std::nullopt;
    SSL_set_fd(ssl, sock.fd());
    if (SSL_accept(ssl) != 1) {
        SSL_free(ssl);
        return std::nullopt;
    }
    TlsStream stream(ssl, std::move(sock));
    stream.verify_outcome_.cert_ok = true;  // server side: nothing to verify
    return stream;
}

TlsClient::TlsClient(TlsClientPolicy policy) : policy_(std::move(policy)), ctx_(make_ctx(false)) {}

TlsClient::TlsClient(TlsClient&& other) noexcept
    : policy_(std::move(other.policy_)), ctx_(std::exchange(other.ctx_, nullptr)) {}

TlsClient& TlsClient::operator=(TlsClient&& other) noexcept {
    if (this != &other) {
        if (ctx_) SSL_CTX_free(ctx_);
        ctx_ = std::exchange(other.ctx_, nullptr);
        policy_ = std::move(other.policy_);
    }
    return *this;
}

TlsClient::~TlsClient() {
    if (ctx_) SSL_CTX_free(ctx_);
}

std::optional<TlsStream> TlsClient::connect(TcpStream sock, Millis timeout) {
    if (!sock.valid()) return std::nullopt;
    apply_socket_timeout(sock.fd(), timeout);
    SSL* ssl = SSL_new(ctx_);
    if (!ssl) return std::nullopt;
    if (!policy_.expect_hostname.empty())
        SSL_set_tlsext_host_name(ssl, policy_.expect_hostname.c_str());
    SSL_set_fd(ssl, sock.fd());
    if (SSL_connect(ssl) != 1) {
        SSL_free(ssl);
        return std::nullopt;
    }
    TlsStream stream(ssl, std::move(sock));
    stream.verify_outcome_ = evaluate_peer(ssl, policy_);
    return stream;
}

}  // namespace vpnprobe::net
