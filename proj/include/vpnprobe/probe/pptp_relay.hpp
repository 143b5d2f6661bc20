#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/net/socket.hpp"

namespace vpnprobe::probe {

struct PptpRelayOptions {
    std::string listen_ip = "127.0.0.1";
    std::uint16_t control_port = 0;
    std::uint16_t data_port = 0;
    std::string upstream_ip = "127.0.0.1";
    std::uint16_t upstream_control_port = 0;
    std::uint16_t upstream_data_port = 0;
    // Refuse encryption on the client's behalf (and ours) once
    // authentication has passed through.  Off = passive observation only.
    bool inject_downgrade = true;
    bool stop_on_plaintext = true;
    std::chrono::milliseconds session_timeout{8000};
    std::string target_label = "pptp-client";
};

struct PptpRelayResult {
    bool saw_auth_success = false;
    bool downgrade_injected = false;
    bool saw_encrypted_data = false;
    bool client_aborted = false;
    std::optional<Credentials> captured_credentials;  // cleartext auth capture
    std::vector<Bytes> plaintext_ip_frames;
    std::vector<Bytes> plaintext_udp_payloads;
    Transcript transcript;
    Finding finding;
};

// Man-in-the-middle relay for the tunnel protocol: forwards the control and
// data channels between a real client and a real server, lets
// authentication complete untouched, then strips the encryption
// negotiation from both sides.  Everything that crosses in cleartext
// afterwards is captured as evidence.
class PptpMitmRelay {
public:
    PptpMitmRelay(PptpRelayOptions options);

    void bind();
    std::uint16_t control_port() const { return control_listener_.port(); }
    std::uint16_t data_port() const { return downstream_data_.port(); }

    PptpRelayResult serve_one();

private:
    PptpRelayOptions options_;
    net::TcpListener control_listener_;
    net::UdpSocket downstream_data_;  // faces the client
    net::UdpSocket upstream_data_;    // faces the real server
};

}  // namespace vpnprobe::probe
