#pragma once

#include <chrono>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/net/tls.hpp"
#include "vpnprobe/sim/ppp_client.hpp"
#include "vpnprobe/wire/sstp.hpp"

namespace vpnprobe::sim {

struct SstpClientOptions {
    std::string server_ip = "127.0.0.1";
    std::uint16_t port = 0;
    std::string http_host = "vpn.example.test";
    net::TlsClientPolicy tls;
    // The behaviour under test: a hardened client tears the connection down
    // when certificate validation fails; a broken one keeps going.
    bool abort_on_cert_failure = true;
    bool send_binding = true;
    bool stop_after_connect = false;  // disconnect right after the tunnel ack
    PppClientConfig ppp;
    std::chrono::milliseconds timeout{8000};
    std::chrono::milliseconds linger{150};  // wait for server frames after success
};

struct SstpClientResult {
    bool tcp_connected = false;
    bool tls_established = false;
    bool cert_ok = false;
    std::string cert_failure;
    bool aborted_on_cert = false;
    bool http_ok = false;
    bool sstp_connected = false;  // tunnel connect acknowledged
    bool binding_sent = false;
    bool server_aborted = false;
    bool auth_succeeded = false;
    bool marker_sent = false;
    PppClientOutcome outcome = PppClientOutcome::InProgress;
    std::vector<Bytes> received_ip_frames;
    Transcript transcript;
};

SstpClientResult run_sstp_client(const SstpClientOptions& options, crypto::Rng& rng);

}  // namespace vpnprobe::sim
