#include "vpnprobe/probe/ikev2.hpp"

#include <algorithm>

#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/auth/mschapv2.hpp"
#include "vpnprobe/crypto/dh.hpp"
#include "vpnprobe/crypto/hash.hpp"
#include "vpnprobe/crypto/sign.hpp"
#include "vpnprobe/wire/eap.hpp"
#include "vpnprobe/wire/esp.hpp"
#include "vpnprobe/wire/ppp.hpp"

namespace vpnprobe::probe {

namespace {

using Clock = std::chrono::steady_clock;

// Swap endpoints of an inner IPv4/UDP packet to synthesize an echo reply.
std::optional<Bytes> echo_inner_packet(ByteView inner) {
    auto payload = wire::extract_udp_payload(inner);
    if (!payload || inner.size() < 20) return std::nullopt;
    std::size_t ihl = (inner[0] & 0x0F) * 4u;
    if (inner.size() < ihl + 8) return std::nullopt;
    std::array<std::uint8_t, 4> src{inner[12], inner[13], inner[14], inner[15]};
    std::array<std::uint8_t, 4> dst{inner[16], inner[17], inner[18], inner[19]};
    std::uint16_t sport = get_u16(inner, ihl);
    std::uint16_t dport = get_u16(inner, ihl + 2);
    return wire::build_ipv4_udp_packet(dst, src, dport, sport, *payload);
}

}  // namespace

Finding judge_improper_server_verification(const std::string& target, bool cert_untrusted,
                                           bool sa_init_completed, bool auth_request_seen,
                                           bool eap_response_seen, bool auth_completed,
                                           bool tunnel_data_seen,
                                           std::optional<std::size_t> ev_cert,
                                           std::optional<std::size_t> ev_eap,
                                           std::optional<std::size_t> ev_tunnel) {
    const VulnClass cls = VulnClass::Ikev2ImproperServerVerification;
    if (!sa_init_completed) {
        return make_finding(cls, target,
                            verdict_inconclusive("client never completed a key exchange"));
    }
    if (!cert_untrusted) {
        if (auth_completed) {
            return make_finding(
                cls, target,
                verdict_secure("control run: responder identity was the expected one, "
                               "completion is correct behaviour"));
        }
        return make_finding(cls, target,
                            verdict_inconclusive(
                                "trusted-identity control run ended before authentication"));
    }
    if (eap_response_seen) {
        std::vector<std::size_t> ev;
        if (ev_cert) ev.push_back(*ev_cert);
        if (ev_eap) ev.push_back(*ev_eap);
        if (tunnel_data_seen && ev_tunnel) ev.push_back(*ev_tunnel);
        std::string note =
            "client handed challenge/response credential material to an unverified responder";
        if (auth_completed) note += " and completed the tunnel";
        return make_finding(cls, target, verdict_vulnerable(std::move(ev), std::move(note)));
    }
    if (auth_request_seen) {
        return make_finding(
            cls, target,
            verdict_secure("client refused to authenticate once the responder identity "
                           "failed verification"));
    }
    return make_finding(cls, target,
                        verdict_inconclusive("session ended after the initial exchange, "
                                             "before authentication was attempted"));
}

Ikev2ProbeServer::Ikev2ProbeServer(Ikev2ProbeOptions options, crypto::Rng& rng)
    : options_(std::move(options)), rng_(rng) {}

void Ikev2ProbeServer::bind() {
    socket_ = net::UdpSocket::bind(options_.listen_ip, options_.port);
    cert_ = options_.certificate ? *options_.certificate
                                 : net::generate_self_signed(options_.cert_spec);
}

Ikev2SessionResult Ikev2ProbeServer::serve_one() {
    Ikev2SessionResult r;
    r.transcript = Transcript(options_.target_label);
    const auto deadline = Clock::now() + options_.session_timeout;

    std::optional<std::size_t> ev_cert, ev_eap, ev_tunnel;

    // Handshake state.
    Bytes real_msg1, real_msg2, ni, nr, idi_body, idr_body, nt_response, msk;
    std::array<std::uint8_t, 8> spi_r{};
    crypto::DhKeyPair dh;
    wire::Ikev2Keys keys;
    bool have_keys = false;
    std::array<std::uint8_t, 16> eap_challenge{};
    wire::ChildSaKeys child;
    bool have_child = false;
    std::uint32_t esp_spi_client = 0;      // SPI the client receives on
    std::uint32_t esp_spi_server = 0;      // SPI we receive on
    std::uint32_t esp_send_seq = 0;
    bool done = false;

    idr_body = wire::id_payload(wire::kIdFqdn, to_bytes(options_.server_id));

    std::string peer_ip;
    std::uint16_t peer_port = 0;
    auto send_ike = [&](const Bytes& msg) {
        return socket_.send_to(peer_ip, peer_port, wire::udpencap_wrap_ike(msg));
    };

    while (!done && Clock::now() < deadline) {
        auto dgram = socket_.recv_from(net::Millis(200));
        if (!dgram) continue;
        peer_ip = dgram->ip;
        peer_port = dgram->port;

        const auto kind = wire::udpencap_classify(dgram->payload);
        if (kind == wire::UdpEncap::Invalid) continue;

        if (kind == wire::UdpEncap::Esp) {
            if (!have_child) continue;
            auto esp = wire::esp_open({child.enc_i, child.auth_i}, dgram->payload);
            if (!esp || esp->spi != esp_spi_server || esp->next_header != wire::kEspNextIpv4) {
                continue;
            }
            r.tunnel_ip_packets.push_back(esp->payload);
            if (auto payload = wire::extract_udp_payload(esp->payload)) {
                r.udp_payloads.push_back(*payload);
                ev_tunnel = r.transcript.record(Direction::ClientToProbe, "esp", false,
                                                "datagram payload extracted from tunnel traffic",
                                                *payload);
                if (auto reply = echo_inner_packet(esp->payload)) {
                    socket_.send_to(peer_ip, peer_port,
                                    wire::esp_seal({child.enc_r, child.auth_r}, esp_spi_client,
                                                   ++esp_send_seq, *reply, wire::kEspNextIpv4,
                                                   rng_));
                }
                if (options_.stop_on_marker) done = true;
            }
            continue;
        }

        auto msg = wire::decode_ike_message(wire::udpencap_ike_body(dgram->payload));
        if (!msg || (msg->header.flags & wire::kIkeFlagResponse)) continue;

        if (msg->header.exchange == wire::kIkeExchangeSaInit && msg->header.message_id == 0) {
            auto sa = find_payload(*msg, wire::kPayloadSa);
            auto ke = find_payload(*msg, wire::kPayloadKe);
            auto nonce = find_payload(*msg, wire::kPayloadNonce);
            if (!sa || !ke || !nonce) continue;
            auto proposals = wire::decode_sa_payload(sa->body);
            auto ke_parsed = wire::parse_ke(ke->body);
            if (!proposals || !ke_parsed || ke_parsed->group != wire::kDhGroup14) continue;
            bool acceptable = false;
            for (const auto& p : *proposals) {
                if (wire::proposal_matches(p, wire::standard_ike_proposal())) acceptable = true;
            }
            if (!acceptable) continue;

            rng_.fill(spi_r);
            dh = crypto::dh_generate(14, rng_);
            Bytes shared = crypto::dh_shared_secret(dh, ke_parsed->data);
            if (shared.empty()) continue;
            ni = nonce->body;
            nr = rng_.bytes(32);

            wire::IkeHeader hdr;
            hdr.spi_i = msg->header.spi_i;
            hdr.spi_r = spi_r;
            hdr.exchange = wire::kIkeExchangeSaInit;
            hdr.flags = wire::kIkeFlagResponse;
            hdr.message_id = 0;
            Bytes response = wire::encode_ike_message(
                hdr, {{wire::kPayloadSa, wire::encode_sa_payload({wire::standard_ike_proposal()})},
                      {wire::kPayloadKe, wire::ke_payload(wire::kDhGroup14, dh.public_key)},
                      {wire::kPayloadNonce, nr}});

            real_msg1 = msg->raw;
            real_msg2 = response;
            Bytes skeyseed = wire::ikev2_skeyseed(ni, nr, shared);
            keys = wire::derive_ikev2_keys(skeyseed, ni, nr,
                                           ByteView(msg->header.spi_i.data(), 8),
                                           ByteView(spi_r.data(), 8));
            have_keys = true;
            send_ike(response);
            r.sa_init_completed = true;
            r.transcript.record(Direction::ClientToProbe, "ike", false,
                                "initial exchange completed (ephemeral key agreement)");
            continue;
        }

        if (msg->header.exchange == wire::kIkeExchangeInformational) {
            if (!have_keys) continue;
            wire::IkeHeader hdr = msg->header;
            hdr.flags = wire::kIkeFlagResponse;
            send_ike(wire::encode_ike_sk_message(hdr, {}, keys.sk_er, keys.sk_ar, rng_));
            auto inner = wire::decode_ike_sk_message(*msg, keys.sk_ei, keys.sk_ai);
            if (inner) {
                for (const auto& p : *inner) {
                    if (p.type == wire::kPayloadDelete) done = true;
                    if (p.type == wire::kPayloadNotify) {
                        auto notify = wire::parse_notify(p.body);
                        if (notify && notify->type == wire::kNotifyAuthFailed) {
                            r.transcript.record(Direction::ClientToProbe, "ike", false,
                                                "client signalled authentication failure");
                            done = true;
                        }
                    }
                }
            }
            continue;
        }

        if (msg->header.exchange != wire::kIkeExchangeAuth || !have_keys) continue;
        auto inner = wire::decode_ike_sk_message(*msg, keys.sk_ei, keys.sk_ai);
        if (!inner) continue;
        auto find_inner = [&](std::uint8_t type) -> const wire::IkePayloadChunk* {
            for (const auto& p : *inner) {
                if (p.type == type) return &p;
            }
            return nullptr;
        };

        wire::IkeHeader hdr = msg->header;
        hdr.flags = wire::kIkeFlagResponse;

        if (msg->header.message_id == 1) {
            auto idi = find_inner(wire::kPayloadIdI);
            auto auth = find_inner(wire::kPayloadAuth);
            if (!idi) continue;
            idi_body = idi->body;
            if (auto parsed = wire::parse_id(idi->body)) {
                r.client_identity.assign(parsed->data.begin(), parsed->data.end());
            }
            r.auth_request_seen = true;
            r.transcript.record(Direction::ClientToProbe, "ike", false,
                                "client revealed identity: " + r.client_identity);
            if (auth) {
                // Non-EAP authentication is outside this probe's scope.
                send_ike(wire::encode_ike_sk_message(
                    hdr, {{wire::kPayloadNotify, wire::notify_payload(wire::kNotifyAuthFailed)}},
                    keys.sk_er, keys.sk_ar, rng_));
                done = true;
                continue;
            }
            if (auto sa = find_inner(wire::kPayloadSa)) {
                if (auto props = wire::decode_sa_payload(sa->body)) {
                    if (!props->empty() && (*props)[0].spi.size() == 4) {
                        esp_spi_client = get_u32((*props)[0].spi, 0);
                    }
                }
            }

            // Assert our identity: certificate + signature over the
            // responder's signed octets, then open the EAP conversation.
            Bytes octets =
                wire::ikev2_signed_octets(real_msg2, ni, keys.sk_pr, idr_body);
            Bytes sig = crypto::pkey_sign_sha256(cert_.key_pem, octets);
            rng_.fill(eap_challenge);
            wire::EapMsChapV2 challenge;
            challenge.opcode = wire::kMsChapV2OpChallenge;
            challenge.mschap_id = 1;
            challenge.data = wire::mschapv2_challenge_body(
                ByteView(eap_challenge.data(), eap_challenge.size()), "probe");
            send_ike(wire::encode_ike_sk_message(
                hdr,
                {{wire::kPayloadIdR, idr_body},
                 {wire::kPayloadCert, wire::cert_payload(cert_.cert_der)},
                 {wire::kPayloadAuth, wire::auth_payload(wire::kAuthMethodSignature, sig)},
                 {wire::kPayloadEap,
                  wire::encode_eap_mschapv2(wire::kEapCodeRequest, 1, challenge)}},
                keys.sk_er, keys.sk_ar, rng_));
            ev_cert = r.transcript.record(
                Direction::ProbeToClient, "ike", false,
                "asserted responder identity with unvetted certificate subject=" +
                    cert_.subject_cn + " sha256=" + to_hex(cert_.fingerprint_sha256));
            continue;
        }

        auto eap_chunk = find_inner(wire::kPayloadEap);
        if (msg->header.message_id == 2 && eap_chunk) {
            auto eap = wire::decode_eap(eap_chunk->body);
            if (!eap || eap->code != wire::kEapCodeResponse) continue;
            auto ms = wire::parse_eap_mschapv2(*eap);
            if (!ms || ms->opcode != wire::kMsChapV2OpResponse) continue;
            auto body = wire::parse_mschapv2_response_body(ms->data);
            if (!body) continue;

            nt_response.assign(body->nt_response.begin(), body->nt_response.end());
            r.eap_response_seen = true;
            Bytes evidence = cat({ByteView(eap_challenge.data(), eap_challenge.size()),
                                  ByteView(body->peer_challenge.data(), 16),
                                  ByteView(nt_response.data(), nt_response.size())});
            ev_eap = r.transcript.record(
                Direction::ClientToProbe, "ike", false,
                "captured EAP challenge/response material (challenge, peer challenge, "
                "NT response)",
                evidence);

            const bool ok = auth::verify_nt_response(
                ByteView(eap_challenge.data(), 16), ByteView(body->peer_challenge.data(), 16),
                body->name.empty() ? options_.credentials.username : body->name,
                options_.credentials.password, nt_response);
            wire::EapMsChapV2 reply;
            reply.mschap_id = ms->mschap_id;
            if (ok) {
                reply.opcode = wire::kMsChapV2OpSuccess;
                std::string success =
                    auth::authenticator_response(options_.credentials.password, nt_response,
                                                 ByteView(body->peer_challenge.data(), 16),
                                                 ByteView(eap_challenge.data(), 16),
                                                 body->name.empty()
                                                     ? options_.credentials.username
                                                     : body->name) +
                    " M=OK";
                reply.data = to_bytes(success);
                send_ike(wire::encode_ike_sk_message(
                    hdr,
                    {{wire::kPayloadEap,
                      wire::encode_eap_mschapv2(wire::kEapCodeRequest, 2, reply)}},
                    keys.sk_er, keys.sk_ar, rng_));
            } else {
                wire::EapPacket failure;
                failure.code = wire::kEapCodeFailure;
                failure.identifier = 2;
                send_ike(wire::encode_ike_sk_message(
                    hdr, {{wire::kPayloadEap, wire::encode_eap(failure)}}, keys.sk_er,
                    keys.sk_ar, rng_));
                r.transcript.record(Direction::Local, "ike", false,
                                    "EAP authentication failed (wrong credentials)");
                done = true;
            }
            continue;
        }

        if (msg->header.message_id == 3 && eap_chunk) {
            auto eap = wire::decode_eap(eap_chunk->body);
            if (!eap || eap->code != wire::kEapCodeResponse) continue;
            auto ms = wire::parse_eap_mschapv2(*eap);
            if (!ms || ms->opcode != wire::kMsChapV2OpSuccess) continue;
            wire::EapPacket success;
            success.code = wire::kEapCodeSuccess;
            success.identifier = 3;
            send_ike(wire::encode_ike_sk_message(
                hdr, {{wire::kPayloadEap, wire::encode_eap(success)}}, keys.sk_er, keys.sk_ar,
                rng_));
            msk = auth::eap_mschapv2_msk(options_.credentials.password, nt_response);
            r.eap_succeeded = true;
            continue;
        }

        if (msg->header.message_id == 4 && !msk.empty()) {
            auto auth_chunk = find_inner(wire::kPayloadAuth);
            if (!auth_chunk) continue;
            auto auth = wire::parse_auth(auth_chunk->body);
            Bytes expected = wire::ikev2_auth_from_msk(
                msk, wire::ikev2_signed_octets(real_msg1, nr, keys.sk_pi, idi_body));
            if (!auth || auth->method != wire::kAuthMethodPsk ||
                !ct_equal(auth->data, expected)) {
                send_ike(wire::encode_ike_sk_message(
                    hdr, {{wire::kPayloadNotify, wire::notify_payload(wire::kNotifyAuthFailed)}},
                    keys.sk_er, keys.sk_ar, rng_));
                done = true;
                continue;
            }
            r.auth_completed = true;

            esp_spi_server = 0;
            while (esp_spi_server == 0) {
                Bytes b = rng_.bytes(4);
                esp_spi_server = get_u32(b, 0);
            }
            Bytes responder_auth = wire::ikev2_auth_from_msk(
                msk, wire::ikev2_signed_octets(real_msg2, ni, keys.sk_pr, idr_body));
            send_ike(wire::encode_ike_sk_message(
                hdr,
                {{wire::kPayloadAuth,
                  wire::auth_payload(wire::kAuthMethodPsk, responder_auth)},
                 {wire::kPayloadSa,
                  wire::encode_sa_payload({wire::standard_esp_proposal(esp_spi_server)})},
                 {wire::kPayloadTsI, wire::ts_payload_any_v4()},
                 {wire::kPayloadTsR, wire::ts_payload_any_v4()}},
                keys.sk_er, keys.sk_ar, rng_));
            child = wire::derive_child_keys(keys.sk_d, ni, nr);
            have_child = true;
            r.child_sa_established = true;
            r.transcript.record(Direction::Local, "ike", false,
                                "authentication completed; tunnel keys derived");
            continue;
        }
    }

    r.finding = judge_improper_server_verification(
        options_.target_label, options_.cert_is_untrusted, r.sa_init_completed,
        r.auth_request_seen, r.eap_response_seen, r.auth_completed, !r.udp_payloads.empty(),
        ev_cert, ev_eap, ev_tunnel);
    return r;
}

}  // namespace vpnprobe::probe
