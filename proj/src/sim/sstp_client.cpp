#include "vpnprobe/sim/sstp_client.hpp"

#include <algorithm>

#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::sim {

namespace {

using Clock = std::chrono::steady_clock;

ByteView str_view(const std::string& s) {
    return ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

}  // namespace

SstpClientResult run_sstp_client(const SstpClientOptions& options, crypto::Rng& rng) {
    SstpClientResult r;
    r.transcript = Transcript("sstp-client");
    const auto deadline = Clock::now() + options.timeout;
    auto remaining = [&] {
        auto left = std::chrono::duration_cast<net::Millis>(deadline - Clock::now());
        return std::max(left, net::Millis(0));
    };

    auto conn = net::TcpStream::connect(options.server_ip, options.port, remaining());
    if (!conn.stream) {
        r.transcript.record(Direction::Local, "tcp", false, "connect failed");
        return r;
    }
    r.tcp_connected = true;

    net::TlsClient tls(options.tls);
    auto stream = tls.connect(std::move(*conn.stream), remaining());
    if (!stream) {
        r.transcript.record(Direction::Local, "tls", false, "TLS handshake failed");
        return r;
    }
    r.tls_established = true;
    const auto& outcome = stream->verify_outcome();
    r.cert_ok = outcome.cert_ok;
    r.cert_failure = outcome.failure;
    r.transcript.record(Direction::ProbeToClient, "tls", false,
                        r.cert_ok ? "server certificate validated"
                                  : "server certificate FAILED validation: " + r.cert_failure);

    if (!r.cert_ok && options.abort_on_cert_failure) {
        r.aborted_on_cert = true;
        r.transcript.record(Direction::Local, "tls", false,
                            "aborting connection on certificate failure");
        stream->shutdown();
        return r;
    }

    // HTTP preamble.
    const std::string req = wire::sstp_http_request(options.http_host);
    if (!stream->write_all(str_view(req))) {
        return r;
    }
    std::string http;
    while (http.find("\r\n\r\n") == std::string::npos) {
        if (Clock::now() >= deadline || http.size() > 8192) {
            return r;
        }
        std::uint8_t chunk[1024];
        auto n = stream->read_some(std::span<std::uint8_t>(chunk),
                                   std::min<net::Millis>(remaining(), net::Millis(200)));
        if (!n) {
            return r;
        }
        http.append(reinterpret_cast<const char*>(chunk), *n);
    }
    if (http.rfind("HTTP/1.1 200", 0) != 0) {
        r.transcript.record(Direction::ProbeToClient, "http", false,
                            "unexpected HTTP response: " + http.substr(0, http.find("\r\n")));
        return r;
    }
    r.http_ok = true;

    PppClientEngine engine(options.ppp, rng, r.transcript);
    wire::SstpBuffer buf;
    std::optional<wire::SstpBindingRequest> binding_req;
    std::uint8_t chosen_hash = wire::kSstpHashSha256;
    bool done = false;
    std::optional<Clock::time_point> linger_until;

    auto send_packet = [&](const Bytes& pkt) { return stream->write_all(pkt); };
    auto send_ppp = [&](const std::vector<Bytes>& frames) {
        for (const auto& f : frames) {
            if (!send_packet(wire::encode_sstp_data(f))) return false;
        }
        return true;
    };

    // Once the inner authentication has succeeded, prove it on the outer
    // channel: echo the server's nonce and its certificate hash under a MAC
    // keyed from the auth exchange.
    auto maybe_send_binding = [&] {
        if (!options.send_binding || r.binding_sent || !binding_req) return true;
        if (!engine.auth_succeeded() || engine.nt_response().empty()) return true;
        Bytes hlak = auth::sstp_hlak_from_mschap(options.ppp.credentials.password,
                                                 engine.nt_response());
        std::array<std::uint8_t, 32> cert_hash{};
        if (chosen_hash == wire::kSstpHashSha1) {
            Bytes h = crypto::sha1(outcome.peer_cert_der);
            std::copy(h.begin(), h.end(), cert_hash.begin());
        } else {
            std::copy(outcome.peer_fingerprint_sha256.begin(),
                      outcome.peer_fingerprint_sha256.end(), cert_hash.begin());
        }
        Bytes msg =
            wire::build_connected_message(chosen_hash, hlak, binding_req->nonce, cert_hash);
        if (!send_packet(msg)) return false;
        r.binding_sent = true;
        r.transcript.record(Direction::ClientToProbe, "sstp", false,
                            "crypto binding sent (nonce echo, certificate hash, compound MAC)");
        return true;
    };

    // Tunnel connect request: the framed channel carries PPP.
    wire::SstpAttribute encap{wire::kSstpAttrEncapsulatedProtocol, {0x00, 0x01}};
    if (!send_packet(wire::encode_sstp_control(wire::SstpMsgType::ConnectRequest, {encap}))) {
        return r;
    }

    while (!done && Clock::now() < deadline) {
        if (linger_until && Clock::now() >= *linger_until) {
            send_packet(wire::encode_sstp_control(wire::SstpMsgType::Disconnect, {}));
            break;
        }
        std::uint8_t chunk[4096];
        auto n = stream->read_some(std::span<std::uint8_t>(chunk),
                                   std::min<net::Millis>(remaining(), net::Millis(100)));
        if (!n) {
            r.transcript.record(Direction::ProbeToClient, "tls", false,
                                "server closed the stream");
            break;
        }
        buf.feed(ByteView(chunk, *n));
        std::optional<wire::SstpPacket> pkt;
        while (!done && (pkt = buf.pop())) {
            if (!pkt->control) {
                if (!send_ppp(engine.on_frame(pkt->payload))) done = true;
                if (!maybe_send_binding()) done = true;
                continue;
            }
            switch (pkt->type) {
                case wire::SstpMsgType::ConnectAck: {
                    r.sstp_connected = true;
                    for (const auto& attr : pkt->attributes) {
                        if (auto req = wire::parse_binding_request_attr(attr)) {
                            binding_req = *req;
                            chosen_hash = (req->hash_bitmask & wire::kSstpHashSha256)
                                              ? wire::kSstpHashSha256
                                              : wire::kSstpHashSha1;
                        }
                    }
                    r.transcript.record(Direction::ProbeToClient, "sstp", false,
                                        "tunnel connect acknowledged");
                    if (options.stop_after_connect) {
                        send_packet(
                            wire::encode_sstp_control(wire::SstpMsgType::Disconnect, {}));
                        done = true;
                        break;
                    }
                    if (!send_ppp(engine.start())) done = true;
                    break;
                }
                case wire::SstpMsgType::Abort:
                    r.server_aborted = true;
                    r.transcript.record(Direction::ProbeToClient, "sstp", false,
                                        "server aborted the session");
                    done = true;
                    break;
                case wire::SstpMsgType::EchoRequest:
                    send_packet(wire::encode_sstp_control(wire::SstpMsgType::EchoResponse, {}));
                    break;
                case wire::SstpMsgType::Disconnect:
                    send_packet(
                        wire::encode_sstp_control(wire::SstpMsgType::DisconnectAck, {}));
                    done = true;
                    break;
                default:
                    break;
            }
        }
        if (buf.broken()) {
            break;
        }
        switch (engine.outcome()) {
            case PppClientOutcome::InProgress:
                break;
            case PppClientOutcome::EstablishedEncrypted:
            case PppClientOutcome::EstablishedPlaintext:
                if (!linger_until && engine.marker_sent() &&
                    (!options.send_binding || r.binding_sent)) {
                    linger_until = Clock::now() + options.linger;
                }
                break;
            default:
                done = true;
                break;
        }
    }
    stream->shutdown();
    r.auth_succeeded = engine.auth_succeeded();
    r.marker_sent = engine.marker_sent();
    r.outcome = engine.outcome();
    r.received_ip_frames = engine.received_ip_frames();
    return r;
}

}  // namespace vpnprobe::sim
