#pragma once

#include <chrono>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/sim/ppp_client.hpp"
#include "vpnprobe/wire/ikev1.hpp"

namespace vpnprobe::sim {

// Simulated legacy-IKE initiator: Main Mode with a pre-shared key, then —
// depending on the mode — either a transport SA carrying a layer-two tunnel
// and PPP, or XAUTH user authentication.  The key itself is the behaviour
// under test: a publicly documented value models the vulnerable client, a
// strong private one the hardened client.  The gateway is authenticated
// exactly as the protocol prescribes (identity hash over PSK-derived
// material); there is no separate "skip verification" defect here.
struct Ikev1ClientOptions {
    std::string server_ip = "127.0.0.1";
    std::uint16_t port = 0;
    wire::Ikev1Mode mode = wire::Ikev1Mode::L2tp;
    std::string psk = "12345678";
    int dh_group = 14;
    Credentials xauth_credentials{"corp-user", "corp-pass"};  // CiscoXauth mode
    PppClientConfig ppp;  // inner link behaviour (L2tp mode)
    std::chrono::milliseconds timeout{8000};
};

struct Ikev1ClientResult {
    bool phase1_completed = false;  // gateway returned a valid identity hash
    bool hash_mismatch = false;     // gateway's identity hash failed to verify
    bool rejected_by_gateway = false;  // authentication-failed notification
    bool xauth_submitted = false;
    bool xauth_status_ok = false;
    bool quick_completed = false;
    bool l2tp_established = false;
    bool marker_sent = false;
    PppClientOutcome ppp_outcome = PppClientOutcome::InProgress;
    Transcript transcript;
};

Ikev1ClientResult run_ikev1_client(const Ikev1ClientOptions& options, crypto::Rng& rng);

}  // namespace vpnprobe::sim
