#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "vpnprobe/core/psk.hpp"
#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/net/socket.hpp"
#include "vpnprobe/ppp/engine.hpp"
#include "vpnprobe/wire/ikev1.hpp"

namespace vpnprobe::probe {

// Which service the fake IPsec responder impersonates after the key is
// matched: a tunnel endpoint that terminates the inner layer-two tunnel and
// PPP (revealing user traffic and any plaintext credentials), or an
// enterprise-style gateway that runs XAUTH user authentication (harvesting
// the submitted username/password).
using Ikev1Mode = wire::Ikev1Mode;

struct Ikev1ProbeOptions {
    std::string listen_ip = "127.0.0.1";
    std::uint16_t port = 0;
    Ikev1Mode mode = Ikev1Mode::L2tp;
    // Pre-shared keys to try against the client's authentication hash.
    // Public entries produce Vulnerable on a match; an operator-supplied
    // control key (is_public=false) proves a hardened client completes
    // normally and yields Secure.
    std::vector<PskCandidate> candidates;
    std::size_t max_candidates = 10000;
    vpnprobe::ppp::PppServerConfig ppp;  // inner link config (L2tp mode)
    std::chrono::milliseconds session_timeout{8000};
    bool stop_on_marker = true;
    std::string target_label = "ikev1-client";
};

struct Ikev1SessionResult {
    bool phase1_attempted = false;  // the encrypted identity message arrived
    bool phase1_completed = false;
    std::optional<PskCandidate> matched;
    std::optional<Credentials> xauth_credentials;
    bool quick_completed = false;
    bool l2tp_established = false;
    std::optional<Credentials> inner_credentials;  // plaintext (PAP) capture
    std::vector<Bytes> tunnel_ppp_ip_frames;       // inner IP packets, decrypted
    std::vector<Bytes> udp_payloads;               // datagram payloads from those
    Transcript transcript;
    Finding finding;
};

// Verdict logic: a match on a publicly known key is Vulnerable (the class
// depends on the mode); a match on an operator control key is a Secure
// control run; an attempted exchange with no match is Inconclusive — the
// client's key was simply not in the candidate list, which proves nothing
// about how the key was chosen.
Finding judge_known_psk(Ikev1Mode mode, const std::string& target, bool phase1_attempted,
                        const std::optional<PskCandidate>& matched,
                        std::optional<std::size_t> ev_match,
                        std::optional<std::size_t> ev_secondary);

class Ikev1ProbeServer {
public:
    Ikev1ProbeServer(Ikev1ProbeOptions options, crypto::Rng& rng);

    void bind();
    std::uint16_t port() const { return socket_.port(); }

    Ikev1SessionResult serve_one();

private:
    Ikev1ProbeOptions options_;
    crypto::Rng& rng_;
    net::UdpSocket socket_;
};

}  // namespace vpnprobe::probe
