#include "vpnprobe/probe/pptp.hpp"

#include <chrono>

#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/wire/ppp.hpp"

namespace vpnprobe::probe {

using namespace std::chrono;

std::optional<wire::PptpControlMessage> PptpControlBuffer::pop() {
    if (buffer_.size() < 4) {
        return std::nullopt;
    }
    auto len = wire::pptp_message_length(buffer_);
    if (!len) {
        broken_ = true;
        return std::nullopt;
    }
    if (buffer_.size() < *len) {
        return std::nullopt;
    }
    auto msg = wire::decode_pptp_control(ByteView(buffer_.data(), *len));
    buffer_.erase(buffer_.begin(), buffer_.begin() + *len);
    if (!msg) {
        broken_ = true;
    }
    return msg;
}

Finding judge_optional_encryption(const std::string& target, bool auth_succeeded,
                                  bool mppe_active, bool ccp_rejected,
                                  bool plaintext_data_seen, bool encrypted_data_seen,
                                  bool client_aborted,
                                  std::optional<std::size_t> ev_ccp_rejected,
                                  std::optional<std::size_t> ev_first_plaintext,
                                  std::optional<std::size_t> ev_mppe_active) {
    if (plaintext_data_seen && auth_succeeded) {
        std::vector<std::size_t> evidence;
        if (ev_ccp_rejected) evidence.push_back(*ev_ccp_rejected);
        if (ev_first_plaintext) evidence.push_back(*ev_first_plaintext);
        std::string note = ccp_rejected
                               ? "client kept the tunnel up and sent application data in "
                                 "cleartext after its encryption offer was refused"
                               : "client never negotiated link encryption and sent "
                                 "application data in cleartext";
        return make_finding(VulnClass::PptpOptionalEncryption, target,
                            verdict_vulnerable(std::move(evidence), std::move(note)));
    }
    if (ccp_rejected && client_aborted && !plaintext_data_seen) {
        std::vector<std::size_t> evidence;
        if (ev_ccp_rejected) evidence.push_back(*ev_ccp_rejected);
        return make_finding(VulnClass::PptpOptionalEncryption, target,
                            Verdict{VerdictLevel::Secure, std::move(evidence),
                                    "client tore the tunnel down rather than continue "
                                    "without encryption"});
    }
    if (mppe_active && encrypted_data_seen && !plaintext_data_seen) {
        std::vector<std::size_t> evidence;
        if (ev_mppe_active) evidence.push_back(*ev_mppe_active);
        return make_finding(VulnClass::PptpOptionalEncryption, target,
                            Verdict{VerdictLevel::Secure, std::move(evidence),
                                    "all application data arrived through the encrypted "
                                    "link"});
    }
    return make_finding(VulnClass::PptpOptionalEncryption, target,
                        verdict_inconclusive("session ended before the client's reaction to "
                                             "the encryption policy could be observed"));
}

PptpProbeServer::PptpProbeServer(PptpProbeOptions options, crypto::Rng& rng)
    : options_(std::move(options)), rng_(rng) {}

void PptpProbeServer::bind() {
    control_listener_ = net::TcpListener::bind(options_.listen_ip, options_.control_port);
    data_socket_ = net::UdpSocket::bind(options_.listen_ip, options_.data_port);
}

PptpSessionResult PptpProbeServer::serve_one() {
    PptpSessionResult result;
    result.transcript = Transcript(options_.target_label);
    Transcript& tr = result.transcript;

    if (!control_listener_.valid() || !data_socket_.valid()) {
        bind();
    }

    const auto deadline = steady_clock::now() + options_.session_timeout;
    auto remaining = [&] {
        return std::max(milliseconds(0),
                        duration_cast<milliseconds>(deadline - steady_clock::now()));
    };

    auto control = control_listener_.accept(remaining());
    if (!control) {
        tr.record(Direction::Local, "tcp", false, "no control connection before the timeout");
        result.finding = judge_optional_encryption(options_.target_label, false, false, false,
                                                   false, false, false, {}, {}, {});
        return result;
    }
    tr.record(Direction::ClientToProbe, "tcp", false, "control connection accepted");

    ppp::PppServerEngine engine(options_.ppp, rng_, tr);

    PptpControlBuffer control_buf;
    std::optional<std::string> peer_ip;
    std::uint16_t peer_port = 0;
    std::uint16_t peer_call_id = 0;
    std::uint32_t gre_seq = 0;
    bool call_up = false;
    bool client_terminated = false;
    std::vector<Bytes> pending_ppp;  // frames waiting for the data path to open

    auto send_gre = [&](const Bytes& ppp_frame) {
        if (!peer_ip) {
            pending_ppp.push_back(ppp_frame);
            return;
        }
        wire::GrePacket p;
        p.call_id = peer_call_id;
        p.seq = gre_seq++;
        p.payload = ppp_frame;
        data_socket_.send_to(*peer_ip, peer_port, wire::encode_gre(p));
    };

    auto pump_engine = [&](ByteView ppp_frame) {
        for (const auto& out : engine.on_frame(ppp_frame)) {
            send_gre(out);
        }
    };

    std::array<std::uint8_t, 4096> tcp_buf{};
    bool control_open = true;
    // Once the peer is done we keep draining the data channel briefly so
    // datagrams racing the control-channel close are not lost.
    std::optional<steady_clock::time_point> drain_until;
    auto begin_drain = [&] {
        if (!drain_until) {
            drain_until = steady_clock::now() + milliseconds(200);
        }
    };
    while (steady_clock::now() < deadline) {
        if (drain_until && steady_clock::now() >= *drain_until) {
            break;
        }
        if (options_.stop_on_plaintext && !engine.plaintext_ip_frames().empty()) {
            break;
        }
        if (engine.phase() == ppp::PppPhase::Terminated && !drain_until) {
            client_terminated = true;
            begin_drain();
        }
        std::vector<int> fds{data_socket_.fd()};
        if (control_open) {
            fds.push_back(control->fd());
        }
        auto ready = net::wait_readable(fds, milliseconds(50));
        for (std::size_t idx : ready) {
            if (idx == 1) {
                auto n = control->read_some(tcp_buf, milliseconds(10));
                if (!n || *n == 0) {
                    tr.record(Direction::ClientToProbe, "tcp", false,
                              "control connection closed");
                    client_terminated = true;
                    control_open = false;
                    begin_drain();
                    continue;
                }
                control_buf.feed(ByteView(tcp_buf.data(), *n));
                while (auto msg = control_buf.pop()) {
                    switch (msg->type) {
                        case wire::PptpMsgType::StartRequest: {
                            tr.record(Direction::ClientToProbe, "pptp", false,
                                      "tunnel start request");
                            result.control_established = true;
                            wire::PptpStartReply rep;
                            rep.hostname = "vpnprobe";
                            rep.vendor = "vpnprobe";
                            control->write_all(wire::encode_pptp_start_reply(rep));
                            tr.record(Direction::ProbeToClient, "pptp", false,
                                      "tunnel start reply (success)");
                            break;
                        }
                        case wire::PptpMsgType::CallRequest: {
                            peer_call_id = msg->call_request ? msg->call_request->call_id : 0;
                            tr.record(Direction::ClientToProbe, "pptp", false,
                                      "call request, peer call id " +
                                          std::to_string(peer_call_id));
                            wire::PptpCallReply rep;
                            rep.call_id = 1;
                            rep.peer_call_id = peer_call_id;
                            control->write_all(wire::encode_pptp_call_reply(rep));
                            tr.record(Direction::ProbeToClient, "pptp", false,
                                      "call reply (accepted)");
                            call_up = true;
                            result.call_established = true;
                            for (const auto& f : engine.start()) {
                                send_gre(f);
                            }
                            break;
                        }
                        case wire::PptpMsgType::EchoRequest: {
                            wire::PptpEcho rep;
                            rep.identifier = msg->echo ? msg->echo->identifier : 0;
                            rep.reply = true;
                            control->write_all(wire::encode_pptp_echo(rep));
                            break;
                        }
                        case wire::PptpMsgType::CallClearRequest:
                        case wire::PptpMsgType::CallDisconnectNotify:
                        case wire::PptpMsgType::StopRequest:
                            tr.record(Direction::ClientToProbe, "pptp", false,
                                      "client is closing the tunnel");
                            client_terminated = true;
                            begin_drain();
                            break;
                        default:
                            break;
                    }
                }
                if (control_buf.broken()) {
                    tr.record(Direction::ClientToProbe, "pptp", false,
                              "control channel framing broken; giving up");
                    begin_drain();
                }
            } else {
                auto dg = data_socket_.recv_from(milliseconds(10));
                if (!dg) {
                    continue;
                }
                if (!peer_ip) {
                    peer_ip = dg->ip;
                    peer_port = dg->port;
                    for (const auto& f : pending_ppp) {
                        wire::GrePacket p;
                        p.call_id = peer_call_id;
                        p.seq = gre_seq++;
                        p.payload = f;
                        data_socket_.send_to(*peer_ip, peer_port, wire::encode_gre(p));
                    }
                    pending_ppp.clear();
                }
                auto gre = wire::decode_gre(dg->payload);
                if (!gre || !call_up) {
                    continue;
                }
                if (!gre->payload.empty()) {
                    pump_engine(gre->payload);
                }
            }
        }
    }

    result.auth_succeeded = engine.auth_succeeded();
    result.mppe_active = engine.mppe_active();
    result.ccp_mppe_rejected = engine.ccp_mppe_rejected();
    result.plaintext_credentials = engine.plaintext_credentials_seen();
    result.plaintext_ip_frames = engine.plaintext_ip_frames();
    result.decrypted_ip_frames = engine.decrypted_ip_frames();
    for (const auto& ip : result.plaintext_ip_frames) {
        if (auto payload = wire::extract_udp_payload(ip)) {
            result.plaintext_udp_payloads.push_back(*payload);
        }
    }

    result.finding = judge_optional_encryption(
        options_.target_label, result.auth_succeeded, result.mppe_active,
        result.ccp_mppe_rejected, !result.plaintext_ip_frames.empty(),
        !result.decrypted_ip_frames.empty(), client_terminated, engine.ev_ccp_rejected(),
        engine.ev_first_plaintext_ip(), engine.ev_mppe_active());
    return result;
}

}  // namespace vpnprobe::probe
