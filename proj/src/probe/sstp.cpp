#include "vpnprobe/probe/sstp.hpp"

#include <algorithm>

#include "vpnprobe/crypto/hash.hpp"
#include "vpnprobe/wire/ppp.hpp"

namespace vpnprobe::probe {

namespace {

using Clock = std::chrono::steady_clock;

ByteView str_view(const std::string& s) {
    return ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

// Cert hash as carried in the binding: SHA-256 fingerprint, or SHA-1
// zero-padded to 32 bytes.
std::array<std::uint8_t, 32> cert_hash_for(std::uint8_t hash, const net::TlsCertificate& cert) {
    std::array<std::uint8_t, 32> out{};
    if (hash == wire::kSstpHashSha1) {
        Bytes h = crypto::sha1(cert.cert_der);
        std::copy(h.begin(), h.end(), out.begin());
    } else {
        std::copy(cert.fingerprint_sha256.begin(), cert.fingerprint_sha256.end(), out.begin());
    }
    return out;
}

}  // namespace

Finding judge_ignored_cert_failure(const std::string& target, bool cert_untrusted,
                                   bool tls_established, bool http_upgraded,
                                   bool connect_requested, bool auth_succeeded,
                                   std::optional<std::size_t> ev_tls,
                                   std::optional<std::size_t> ev_auth,
                                   std::optional<std::size_t> ev_progress) {
    const VulnClass cls = VulnClass::SstpIgnoredCertFailure;
    if (!tls_established) {
        return make_finding(cls, target,
                            verdict_inconclusive("client never completed a TLS handshake"));
    }
    if (!cert_untrusted) {
        if (auth_succeeded) {
            return make_finding(
                cls, target,
                verdict_secure("control run: certificate was trusted, proceeding is expected"));
        }
        return make_finding(
            cls, target,
            verdict_inconclusive("trusted-certificate control run ended before authentication"));
    }
    if (auth_succeeded) {
        std::vector<std::size_t> ev;
        if (ev_tls) ev.push_back(*ev_tls);
        if (ev_auth) ev.push_back(*ev_auth);
        return make_finding(cls, target,
                            verdict_vulnerable(std::move(ev),
                                               "client completed inner authentication through a "
                                               "server certificate that fails validation"));
    }
    if (http_upgraded || connect_requested) {
        std::vector<std::size_t> ev;
        if (ev_tls) ev.push_back(*ev_tls);
        if (ev_progress) ev.push_back(*ev_progress);
        return make_finding(cls, target,
                            verdict_weak(std::move(ev),
                                         "client started tunnel negotiation despite the failing "
                                         "certificate but stopped before authenticating"));
    }
    return make_finding(
        cls, target,
        verdict_secure("client abandoned the session after the certificate failed validation"));
}

SstpProbeServer::SstpProbeServer(SstpProbeOptions options, crypto::Rng& rng)
    : options_(std::move(options)), rng_(rng) {}

void SstpProbeServer::bind() {
    listener_ = net::TcpListener::bind(options_.listen_ip, options_.port);
    cert_ = options_.certificate ? *options_.certificate
                                 : net::generate_self_signed(options_.cert_spec);
    tls_.emplace(cert_);
}

SstpSessionResult SstpProbeServer::serve_one() {
    SstpSessionResult r;
    r.transcript = Transcript(options_.target_label);
    const auto deadline = Clock::now() + options_.session_timeout;
    auto remaining = [&] {
        auto left = std::chrono::duration_cast<net::Millis>(deadline - Clock::now());
        return std::max(left, net::Millis(0));
    };

    std::optional<std::size_t> ev_tls, ev_progress;

    auto finish = [&] {
        r.finding = judge_ignored_cert_failure(
            options_.target_label, options_.cert_is_untrusted, r.tls_established, r.http_upgraded,
            r.connect_requested, r.auth_succeeded, ev_tls, std::nullopt, ev_progress);
        return std::move(r);
    };

    ppp::PppServerEngine engine(options_.ppp, rng_, r.transcript);
    auto finish_with_auth = [&] {
        r.finding = judge_ignored_cert_failure(
            options_.target_label, options_.cert_is_untrusted, r.tls_established, r.http_upgraded,
            r.connect_requested, r.auth_succeeded, ev_tls, engine.ev_auth(), ev_progress);
        return std::move(r);
    };

    auto sock = listener_.accept(remaining());
    if (!sock) {
        r.transcript.record(Direction::Local, "tcp", false, "no client connected");
        return finish();
    }
    r.transcript.record(Direction::ClientToProbe, "tcp", false, "client connected");

    auto stream = tls_->accept(std::move(*sock), remaining());
    if (!stream) {
        r.transcript.record(Direction::ClientToProbe, "tls", false,
                            "TLS handshake failed or was abandoned");
        return finish();
    }
    r.tls_established = true;
    ev_tls = r.transcript.record(
        Direction::ProbeToClient, "tls", false,
        std::string("served certificate subject=") + cert_.subject_cn +
            " sha256=" + to_hex(cert_.fingerprint_sha256) +
            (options_.cert_is_untrusted ? " (fails honest validation)" : " (trusted)"));

    // HTTP preamble: one long-lived request/response pair upgrades the
    // stream to the framed tunnel.
    std::string http;
    while (http.find("\r\n\r\n") == std::string::npos) {
        if (Clock::now() >= deadline || http.size() > 8192) {
            r.transcript.record(Direction::ClientToProbe, "http", false,
                                "connection closed before a complete HTTP request");
            return finish();
        }
        std::uint8_t chunk[1024];
        auto n = stream->read_some(std::span<std::uint8_t>(chunk),
                                   std::min<net::Millis>(remaining(), net::Millis(200)));
        if (!n) {
            r.transcript.record(Direction::ClientToProbe, "http", false,
                                "connection closed before a complete HTTP request");
            return finish();
        }
        http.append(reinterpret_cast<const char*>(chunk), *n);
    }
    if (!wire::is_sstp_http_request(http)) {
        r.transcript.record(Direction::ClientToProbe, "http", false,
                            "unexpected HTTP preamble: " + http.substr(0, http.find("\r\n")));
        return finish();
    }
    ev_progress = r.transcript.record(Direction::ClientToProbe, "http", false,
                                      "tunnel-upgrade HTTP request received");
    const std::string ok = wire::sstp_http_response_ok();
    if (!stream->write_all(str_view(ok))) {
        return finish();
    }
    r.http_upgraded = true;

    wire::SstpBuffer buf;
    std::array<std::uint8_t, 32> nonce{};
    bool nonce_sent = false;
    std::size_t ip_seen = 0;
    bool done = false;

    auto send_packet = [&](const Bytes& pkt) { return stream->write_all(pkt); };
    auto send_ppp = [&](const std::vector<Bytes>& frames) {
        for (const auto& f : frames) {
            if (!send_packet(wire::encode_sstp_data(f))) return false;
        }
        return true;
    };

    // Pull newly observed tunneled IP packets out of the engine.
    auto harvest = [&] {
        const auto& plain = engine.plaintext_ip_frames();
        for (; ip_seen < plain.size(); ++ip_seen) {
            r.ip_frames.push_back(plain[ip_seen]);
            if (auto payload = wire::extract_udp_payload(plain[ip_seen])) {
                r.udp_payloads.push_back(*payload);
                r.transcript.record(Direction::ClientToProbe, "sstp", false,
                                    "datagram payload extracted from tunneled traffic",
                                    *payload);
                if (options_.stop_on_marker) done = true;
            }
        }
    };

    while (!done && Clock::now() < deadline) {
        std::uint8_t chunk[4096];
        auto n = stream->read_some(std::span<std::uint8_t>(chunk),
                                   std::min<net::Millis>(remaining(), net::Millis(200)));
        if (n && *n == 0) {
            continue;  // timeout slice, poll again
        }
        if (!n) {
            r.transcript.record(Direction::ClientToProbe, "tls", false, "client closed the stream");
            break;
        }
        buf.feed(ByteView(chunk, *n));
        std::optional<wire::SstpPacket> pkt;
        while (!done && (pkt = buf.pop())) {
            if (!pkt->control) {
                if (!send_ppp(engine.on_frame(pkt->payload))) done = true;
                if (engine.auth_succeeded() && !r.auth_succeeded) {
                    r.auth_succeeded = true;
                }
                harvest();
                if (engine.phase() == ppp::PppPhase::Terminated) done = true;
                continue;
            }
            switch (pkt->type) {
                case wire::SstpMsgType::ConnectRequest: {
                    r.connect_requested = true;
                    ev_progress = r.transcript.record(Direction::ClientToProbe, "sstp", false,
                                                      "tunnel connect request received");
                    rng_.fill(nonce);
                    nonce_sent = true;
                    wire::SstpBindingRequest req{options_.hash_bitmask, nonce};
                    if (!send_packet(wire::encode_sstp_control(
                            wire::SstpMsgType::ConnectAck, {wire::make_binding_request_attr(req)})))
                        done = true;
                    r.transcript.record(Direction::ProbeToClient, "sstp", false,
                                        "connect acknowledged; binding challenge issued");
                    if (!send_ppp(engine.start())) done = true;
                    break;
                }
                case wire::SstpMsgType::Connected: {
                    r.binding_received = true;
                    std::uint8_t hash = wire::kSstpHashSha256;
                    if (pkt->attributes.size() == 1) {
                        if (auto b = wire::parse_binding_attr(pkt->attributes[0])) hash = b->hash;
                    }
                    Bytes hlak(32, 0);
                    if (engine.auth_succeeded() && !engine.nt_response().empty()) {
                        hlak = auth::sstp_hlak_from_mschap(options_.ppp.credentials.password,
                                                           engine.nt_response());
                    }
                    r.binding_valid = nonce_sent && wire::verify_connected_message(
                                                        buf.last_raw(), hlak, nonce,
                                                        cert_hash_for(hash, cert_));
                    if (r.binding_valid) {
                        r.transcript.record(Direction::ClientToProbe, "sstp", false,
                                            "crypto binding verified (nonce, certificate hash, "
                                            "compound MAC)");
                    } else {
                        r.transcript.record(Direction::ClientToProbe, "sstp", false,
                                            "crypto binding INVALID; aborting session");
                        send_packet(wire::encode_sstp_control(wire::SstpMsgType::Abort, {}));
                        done = true;
                    }
                    break;
                }
                case wire::SstpMsgType::EchoRequest:
                    send_packet(wire::encode_sstp_control(wire::SstpMsgType::EchoResponse, {}));
                    break;
                case wire::SstpMsgType::Disconnect:
                    send_packet(wire::encode_sstp_control(wire::SstpMsgType::DisconnectAck, {}));
                    r.transcript.record(Direction::ClientToProbe, "sstp", false,
                                        "client disconnected");
                    done = true;
                    break;
                case wire::SstpMsgType::Abort:
                    r.transcript.record(Direction::ClientToProbe, "sstp", false, "client aborted");
                    done = true;
                    break;
                default:
                    break;
            }
        }
        if (buf.broken()) {
            r.transcript.record(Direction::ClientToProbe, "sstp", false,
                                "unparseable framing; ending session");
            break;
        }
    }
    stream->shutdown();
    return finish_with_auth();
}

}  // namespace vpnprobe::probe
