#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/net/socket.hpp"
#include "vpnprobe/net/tls.hpp"
#include "vpnprobe/wire/ike.hpp"

namespace vpnprobe::probe {

struct Ikev2ProbeOptions {
    std::string listen_ip = "127.0.0.1";
    std::uint16_t port = 0;
    // Identity the fake responder asserts: a certificate nobody vetted plus
    // a matching signature.  A client that checks either the trust chain or
    // a pinned identity must refuse to authenticate to it.
    net::CertSpec cert_spec{.cn = "evil.mitm.test", .dns_names = {"evil.mitm.test"}};
    std::optional<net::TlsCertificate> certificate;
    bool cert_is_untrusted = true;  // set false for the control run
    Credentials credentials;        // the EAP account the responder accepts
    std::string server_id = "vpn.example.test";
    std::chrono::milliseconds session_timeout{8000};
    bool stop_on_marker = true;
    std::string target_label = "ikev2-client";
};

struct Ikev2SessionResult {
    bool sa_init_completed = false;
    bool auth_request_seen = false;  // client revealed its identity
    bool eap_response_seen = false;  // challenge/response material captured
    bool eap_succeeded = false;
    bool auth_completed = false;     // final AUTH verified both ways
    bool child_sa_established = false;
    std::string client_identity;
    std::vector<Bytes> tunnel_ip_packets;  // inner IPv4 packets from the tunnel
    std::vector<Bytes> udp_payloads;       // extracted datagram payloads
    Transcript transcript;
    Finding finding;
};

Finding judge_improper_server_verification(const std::string& target, bool cert_untrusted,
                                           bool sa_init_completed, bool auth_request_seen,
                                           bool eap_response_seen, bool auth_completed,
                                           bool tunnel_data_seen,
                                           std::optional<std::size_t> ev_cert,
                                           std::optional<std::size_t> ev_eap,
                                           std::optional<std::size_t> ev_tunnel);

class Ikev2ProbeServer {
public:
    Ikev2ProbeServer(Ikev2ProbeOptions options, crypto::Rng& rng);

    void bind();
    std::uint16_t port() const { return socket_.port(); }
    const net::TlsCertificate& certificate() const { return cert_; }

    Ikev2SessionResult serve_one();

private:
    Ikev2ProbeOptions options_;
    crypto::Rng& rng_;
    net::UdpSocket socket_;
    net::TlsCertificate cert_;
};

}  // namespace vpnprobe::probe
