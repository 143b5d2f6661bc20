#pragma once

#include <chrono>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/sim/ppp_client.hpp"

namespace vpnprobe::sim {

struct PptpClientOptions {
    std::string server_ip = "127.0.0.1";
    std::uint16_t control_port = 0;
    std::uint16_t data_port = 0;  // where tunneled-data datagrams go
    PppClientConfig ppp;
    std::chrono::milliseconds timeout{8000};
    // After the marker is pushed, linger this long for replies.
    std::chrono::milliseconds reply_wait{0};
};

struct PptpClientResult {
    bool control_established = false;
    bool call_established = false;
    PppClientOutcome outcome = PppClientOutcome::InProgress;
    bool marker_sent = false;
    bool marker_sent_encrypted = false;
    std::vector<Bytes> received_ip_frames;
    Transcript transcript;
};

// Scripted tunnel client with configurable tolerance for refused
// encryption.  Blocking; returns when the session reaches a terminal state
// or the timeout passes.
PptpClientResult run_pptp_client(const PptpClientOptions& options, crypto::Rng& rng);

}  // namespace vpnprobe::sim
