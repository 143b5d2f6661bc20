#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/net/socket.hpp"
#include "vpnprobe/ppp/engine.hpp"
#include "vpnprobe/wire/pptp.hpp"

namespace vpnprobe::probe {

// Accumulates control-channel bytes and pops complete messages.
class PptpControlBuffer {
public:
    void feed(ByteView data) { buffer_.insert(buffer_.end(), data.begin(), data.end()); }
    std::optional<wire::PptpControlMessage> pop();
    // When a pop fails because framing is broken (not just short), the
    // channel is unusable.
    bool broken() const { return broken_; }

private:
    Bytes buffer_;
    bool broken_ = false;
};

struct PptpProbeOptions {
    std::string listen_ip = "127.0.0.1";
    std::uint16_t control_port = 0;  // 0 = pick an ephemeral port
    std::uint16_t data_port = 0;     // tunneled-data datagrams (see transport note)
    ppp::PppServerConfig ppp;
    std::chrono::milliseconds session_timeout{8000};
    // End the session early once a cleartext datagram has been captured.
    bool stop_on_plaintext = true;
    std::string target_label = "pptp-client";
};

struct PptpSessionResult {
    bool control_established = false;
    bool call_established = false;
    bool auth_succeeded = false;
    bool mppe_active = false;
    bool ccp_mppe_rejected = false;
    std::optional<Credentials> plaintext_credentials;
    std::vector<Bytes> plaintext_ip_frames;
    std::vector<Bytes> decrypted_ip_frames;
    // UDP payloads carried by cleartext datagrams (marker recovery).
    std::vector<Bytes> plaintext_udp_payloads;
    Transcript transcript;
    Finding finding;
};

// Instrumented fake tunnel server: accepts one client session, drives the
// link per the configured policy, and reports whether the client tolerated
// an unencrypted link.
class PptpProbeServer {
public:
    PptpProbeServer(PptpProbeOptions options, crypto::Rng& rng);

    // Binds both channels; call before serve_one so ports are known.
    void bind();
    std::uint16_t control_port() const { return control_listener_.port(); }
    std::uint16_t data_port() const { return data_socket_.port(); }

    // Serves exactly one session to completion (blocking).
    PptpSessionResult serve_one();

private:
    PptpProbeOptions options_;
    crypto::Rng& rng_;
    net::TcpListener control_listener_;
    net::UdpSocket data_socket_;
};

// Builds the optional-encryption finding from what a PPP-over-tunnel session
// observed.  Shared by the fake server and the in-path relay.
Finding judge_optional_encryption(const std::string& target, bool auth_succeeded,
                                  bool mppe_active, bool ccp_rejected,
                                  bool plaintext_data_seen, bool encrypted_data_seen,
                                  bool client_aborted,
                                  std::optional<std::size_t> ev_ccp_rejected,
                                  std::optional<std::size_t> ev_first_plaintext,
                                  std::optional<std::size_t> ev_mppe_active);

}  // namespace vpnprobe::probe
