#pragma once

#include <chrono>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"

namespace vpnprobe::sim {

// How the simulated initiator checks who it is talking to.
enum class Ikev2Verify {
    AcceptAny,          // the defect under test: any responder will do
    PinnedFingerprint,  // responder's certificate must match the pin
};

struct Ikev2ClientOptions {
    std::string server_ip = "127.0.0.1";
    std::uint16_t port = 0;
    Ikev2Verify verify = Ikev2Verify::PinnedFingerprint;
    Bytes pinned_fingerprint;  // SHA-256 of the expected certificate
    Credentials credentials;
    std::string client_id = "client.example.test";
    Bytes marker;  // datagram payload pushed through the tunnel once up
    std::uint16_t marker_src_port = 40000;
    std::uint16_t marker_dst_port = 40001;
    std::chrono::milliseconds timeout{8000};
};

struct Ikev2ClientResult {
    bool sa_init_completed = false;
    bool cert_received = false;
    bool identity_ok = false;       // what the policy concluded
    bool signature_ok = false;      // responder's proof checked out
    bool aborted_on_verification = false;
    bool eap_succeeded = false;
    bool auth_completed = false;
    bool child_sa_established = false;
    bool marker_sent = false;
    std::vector<Bytes> received_inner;  // inner IPv4 packets echoed back
    Transcript transcript;
};

Ikev2ClientResult run_ikev2_client(const Ikev2ClientOptions& options, crypto::Rng& rng);

}  // namespace vpnprobe::sim
