#include "vpnprobe/sim/pptp_client.hpp"

#include <array>
#include <chrono>

#include "vpnprobe/net/socket.hpp"
#include "vpnprobe/probe/pptp.hpp"
#include "vpnprobe/wire/pptp.hpp"

namespace vpnprobe::sim {

using namespace std::chrono;

PptpClientResult run_pptp_client(const PptpClientOptions& options, crypto::Rng& rng) {
    PptpClientResult result;
    result.transcript = Transcript("pptp-client");
    Transcript& tr = result.transcript;

    const auto deadline = steady_clock::now() + options.timeout;
    auto remaining = [&] {
        return std::max(milliseconds(0),
                        duration_cast<milliseconds>(deadline - steady_clock::now()));
    };

    auto conn = net::TcpStream::connect(options.server_ip, options.control_port, remaining());
    if (!conn.stream) {
        tr.record(Direction::Local, "tcp", false, "control connect failed");
        return result;
    }
    net::TcpStream control = std::move(*conn.stream);
    tr.record(Direction::ClientToProbe, "tcp", false, "control connection open");

    probe::PptpControlBuffer control_buf;
    std::array<std::uint8_t, 4096> tcp_buf{};

    auto read_control_msg = [&](wire::PptpMsgType want)
        -> std::optional<wire::PptpControlMessage> {
        while (steady_clock::now() < deadline) {
            if (auto msg = control_buf.pop()) {
                if (msg->type == want) {
                    return msg;
                }
                continue;  // skip interleaved messages (echoes etc.)
            }
            if (control_buf.broken()) {
                return std::nullopt;
            }
            auto n = control.read_some(tcp_buf, milliseconds(100));
            if (n && *n == 0) {
                return std::nullopt;
            }
            if (n && *n > 0) {
                control_buf.feed(ByteView(tcp_buf.data(), *n));
            }
        }
        return std::nullopt;
    };

    wire::PptpStartRequest sccrq;
    sccrq.hostname = "sim-client";
    sccrq.vendor = "sim";
    control.write_all(wire::encode_pptp_start_request(sccrq));
    auto sccrp = read_control_msg(wire::PptpMsgType::StartReply);
    if (!sccrp || !sccrp->start_reply || sccrp->start_reply->result != 1) {
        tr.record(Direction::ProbeToClient, "pptp", false, "tunnel start rejected");
        return result;
    }
    result.control_established = true;
    tr.record(Direction::ProbeToClient, "pptp", false, "tunnel started");

    wire::PptpCallRequest ocrq;
    ocrq.call_id = 7;
    ocrq.serial = 1;
    control.write_all(wire::encode_pptp_call_request(ocrq));
    auto ocrp = read_control_msg(wire::PptpMsgType::CallReply);
    if (!ocrp || !ocrp->call_reply || ocrp->call_reply->result != 1) {
        tr.record(Direction::ProbeToClient, "pptp", false, "call rejected");
        return result;
    }
    result.call_established = true;
    const std::uint16_t server_call_id = ocrp->call_reply->call_id;
    tr.record(Direction::ProbeToClient, "pptp", false, "call established");

    net::UdpSocket data = net::UdpSocket::bind_loopback();
    std::uint32_t gre_seq = 0;
    auto send_gre = [&](const Bytes& ppp_frame) {
        wire::GrePacket p;
        p.call_id = server_call_id;
        p.seq = gre_seq++;
        p.payload = ppp_frame;
        data.send_to(options.server_ip, options.data_port, wire::encode_gre(p));
    };

    // Prime the data path so the server learns our datagram endpoint.
    send_gre({});

    PppClientEngine engine(options.ppp, rng, tr);
    for (const auto& f : engine.start()) {
        send_gre(f);
    }

    std::optional<steady_clock::time_point> linger_until;
    while (steady_clock::now() < deadline) {
        const auto outcome = engine.outcome();
        const bool terminal = outcome != PppClientOutcome::InProgress;
        if (terminal && !linger_until) {
            const bool want_replies =
                (outcome == PppClientOutcome::EstablishedEncrypted ||
                 outcome == PppClientOutcome::EstablishedPlaintext) &&
                options.reply_wait.count() > 0;
            linger_until = steady_clock::now() + (want_replies ? options.reply_wait
                                                               : milliseconds(0));
        }
        if (linger_until && steady_clock::now() >= *linger_until) {
            break;
        }
        auto ready = net::wait_readable({data.fd(), control.fd()}, milliseconds(50));
        for (std::size_t idx : ready) {
            if (idx == 0) {
                auto dg = data.recv_from(milliseconds(10));
                if (!dg) {
                    continue;
                }
                auto gre = wire::decode_gre(dg->payload);
                if (!gre || gre->payload.empty()) {
                    continue;
                }
                for (const auto& out : engine.on_frame(gre->payload)) {
                    send_gre(out);
                }
            } else {
                auto n = control.read_some(tcp_buf, milliseconds(10));
                if (!n || *n == 0) {
                    tr.record(Direction::ProbeToClient, "tcp", false,
                              "control connection closed by server");
                    goto done;
                }
                control_buf.feed(ByteView(tcp_buf.data(), *n));
                while (auto msg = control_buf.pop()) {
                    if (msg->type == wire::PptpMsgType::EchoRequest) {
                        wire::PptpEcho rep;
                        rep.identifier = msg->echo ? msg->echo->identifier : 0;
                        rep.reply = true;
                        control.write_all(wire::encode_pptp_echo(rep));
                    }
                }
            }
        }
    }
done:

    result.outcome = engine.outcome();
    result.marker_sent = engine.marker_sent();
    result.marker_sent_encrypted = engine.marker_sent_encrypted();
    result.received_ip_frames = engine.received_ip_frames();
    return result;
}

}  // namespace vpnprobe::sim
