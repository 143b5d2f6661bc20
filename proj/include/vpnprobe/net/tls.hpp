#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vpnprobe/net/socket.hpp"

typedef struct ssl_ctx_st SSL_CTX;
typedef struct ssl_st SSL;

namespace vpnprobe::net {

struct TlsCertificate {
    std::string cert_pem;
    std::string key_pem;
    Bytes cert_der;
    Bytes fingerprint_sha256;
    std::string subject_cn;
    std::string issuer_cn;
};

struct CertSpec {
    std::string cn = "vpn.example.test";
    std::vector<std::string> dns_names;  // subject alternative names
    bool expired = false;
    int days = 365;
};

// Self-signed end-entity certificate (what a MitM without a trusted CA can
// present).
TlsCertificate generate_self_signed(const CertSpec& spec);

// Private CA for the "legitimate server" role in tests.
class CertAuthority {
public:
    static CertAuthority create(const std::string& cn = "harness-test-root");
    TlsCertificate issue(const CertSpec& spec) const;
    const TlsCertificate& root() const { return root_; }

private:
    TlsCertificate root_;
};

enum class TlsVerifyMode {
    None,               // record the outcome, enforce nothing
    PinnedFingerprint,  // leaf SHA-256 must match
    CaAndHostname,      // chain to the given CA and match the hostname
};

struct TlsClientPolicy {
    TlsVerifyMode mode = TlsVerifyMode::None;
    Bytes pinned_fingerprint;
    std::string ca_pem;
    std::string expect_hostname;
};

// What validation of the server's certificate concluded.  The handshake is
// always completed first; callers (simulated clients) choose whether a
// failure aborts the session, which is exactly the behaviour under test.
struct TlsVerifyOutcome {
    bool cert_ok = false;
    std::string failure;  // empty when cert_ok
    Bytes peer_fingerprint_sha256;
    Bytes peer_cert_der;
    std::string peer_cn;
};

class TlsStream {
public:
    TlsStream(TlsStream&&) noexcept;
    TlsStream& operator=(TlsStream&&) noexcept;
    TlsStream(const TlsStream&) = delete;
    TlsStream& operator=(const TlsStream&) = delete;
    ~TlsStream();

    // >0 bytes read; 0 when the timeout elapsed with no data; nullopt when
    // the peer closed the stream or it broke.
    std::optional<std::size_t> read_some(std::span<std::uint8_t> out,
                                         Millis timeout = Millis(2000));
    bool read_exact(std::span<std::uint8_t> out, Millis timeout = Millis(2000));
    bool write_all(ByteView data, Millis timeout = Millis(2000));
    void shutdown();

    const TlsVerifyOutcome& verify_outcome() const { return verify_outcome_; }

private:
    friend class TlsServer;
    friend class TlsClient;
    TlsStream(SSL* ssl, TcpStream sock) : ssl_(ssl), sock_(std::move(sock)) {}

    SSL* ssl_ = nullptr;
    TcpStream sock_;
    TlsVerifyOutcome verify_outcome_;
};

class TlsServer {
public:
    explicit TlsServer(const TlsCertificate& cert);
    TlsServer(TlsServer&&) noexcept;
    TlsServer& operator=(TlsServer&&) noexcept;
    ~TlsServer();

    std::optional<TlsStream> accept(TcpStream sock, Millis timeout = Millis(3000));

private:
    SSL_CTX* ctx_ = nullptr;
};

class TlsClient {
public:
    explicit TlsClient(TlsClientPolicy policy);
    TlsClient(TlsClient&&) noexcept;
    TlsClient& operator=(TlsClient&&) noexcept;
    ~TlsClient();

    // Completes the handshake and evaluates the policy; the stream's
    // verify_outcome() reports the result.  nullopt only on transport or
    // handshake failure, never on a policy failure.
    std::optional<TlsStream> connect(TcpStream sock, Millis timeout = Millis(3000));

private:
    TlsClientPolicy policy_;
    SSL_CTX* ctx_ = nullptr;
};

}  // namespace vpnprobe::net
