#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/net/tls.hpp"
#include "vpnprobe/ppp/engine.hpp"
#include "vpnprobe/wire/sstp.hpp"

namespace vpnprobe::probe {

struct SstpProbeOptions {
    std::string listen_ip = "127.0.0.1";
    std::uint16_t port = 0;
    // The certificate the fake server presents.  The default is a
    // self-signed leaf for a hostname nobody asked for: every honest
    // validator rejects it.  Tests can override `certificate` with a
    // CA-issued one for the trusted-cert control run.
    net::CertSpec cert_spec{.cn = "evil.mitm.test", .dns_names = {"evil.mitm.test"}};
    std::optional<net::TlsCertificate> certificate;
    bool cert_is_untrusted = true;  // set false for the control run
    std::uint8_t hash_bitmask = wire::kSstpHashSha256 | wire::kSstpHashSha1;
    // TLS already encrypts the stream, so the inner link skips its own
    // cipher negotiation by default.
    ppp::PppServerConfig ppp{.mppe = vpnprobe::ppp::MppePolicy::Reject};
    std::chrono::milliseconds session_timeout{8000};
    bool stop_on_marker = true;
    std::string target_label = "sstp-client";
};

struct SstpSessionResult {
    bool tls_established = false;
    bool http_upgraded = false;
    bool connect_requested = false;
    bool auth_succeeded = false;
    bool binding_received = false;
    bool binding_valid = false;
    std::vector<Bytes> ip_frames;        // tunneled data observed after auth
    std::vector<Bytes> udp_payloads;     // extracted marker payloads
    Transcript transcript;
    Finding finding;
};

// Verdict for "client keeps going after the server certificate fails
// validation".  `ev_progress` is the furthest pre-auth milestone, used as
// evidence for Weak verdicts.
Finding judge_ignored_cert_failure(const std::string& target, bool cert_untrusted,
                                   bool tls_established, bool http_upgraded,
                                   bool connect_requested, bool auth_succeeded,
                                   std::optional<std::size_t> ev_tls,
                                   std::optional<std::size_t> ev_auth,
                                   std::optional<std::size_t> ev_progress);

class SstpProbeServer {
public:
    SstpProbeServer(SstpProbeOptions options, crypto::Rng& rng);

    void bind();
    std::uint16_t port() const { return listener_.port(); }
    const net::TlsCertificate& certificate() const { return cert_; }

    SstpSessionResult serve_one();

private:
    SstpProbeOptions options_;
    crypto::Rng& rng_;
    net::TcpListener listener_;
    net::TlsCertificate cert_;
    std::optional<net::TlsServer> tls_;
};

}  // namespace vpnprobe::probe
