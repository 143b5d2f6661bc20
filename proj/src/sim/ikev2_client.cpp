#include "vpnprobe/sim/ikev2_client.hpp"

#include <algorithm>

#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/auth/mschapv2.hpp"
#include "vpnprobe/crypto/dh.hpp"
#include "vpnprobe/crypto/hash.hpp"
#include "vpnprobe/crypto/sign.hpp"
#include "vpnprobe/net/socket.hpp"
#include "vpnprobe/wire/eap.hpp"
#include "vpnprobe/wire/esp.hpp"
#include "vpnprobe/wire/ike.hpp"
#include "vpnprobe/wire/ppp.hpp"

namespace vpnprobe::sim {

namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

Ikev2ClientResult run_ikev2_client(const Ikev2ClientOptions& options, crypto::Rng& rng) {
    Ikev2ClientResult r;
    r.transcript = Transcript("ikev2-client");
    const auto deadline = Clock::now() + options.timeout;

    net::UdpSocket sock = net::UdpSocket::bind_loopback();
    auto send_ike = [&](const Bytes& msg) {
        return sock.send_to(options.server_ip, options.port, wire::udpencap_wrap_ike(msg));
    };
    // Waits for the next IKE response, ignoring stray datagrams.
    auto recv_ike = [&]() -> std::optional<wire::IkeMessage> {
        while (Clock::now() < deadline) {
            auto dgram = sock.recv_from(net::Millis(200));
            if (!dgram) continue;
            if (wire::udpencap_classify(dgram->payload) != wire::UdpEncap::Ike) continue;
            auto msg = wire::decode_ike_message(wire::udpencap_ike_body(dgram->payload));
            if (msg && (msg->header.flags & wire::kIkeFlagResponse)) return msg;
        }
        return std::nullopt;
    };

    // --- Initial exchange ---------------------------------------------------
    std::array<std::uint8_t, 8> spi_i{};
    rng.fill(spi_i);
    auto dh = crypto::dh_generate(14, rng);
    Bytes ni = rng.bytes(32);

    wire::IkeHeader hdr;
    hdr.spi_i = spi_i;
    hdr.exchange = wire::kIkeExchangeSaInit;
    hdr.flags = wire::kIkeFlagInitiator;
    hdr.message_id = 0;
    Bytes msg1 = wire::encode_ike_message(
        hdr, {{wire::kPayloadSa, wire::encode_sa_payload({wire::standard_ike_proposal()})},
              {wire::kPayloadKe, wire::ke_payload(wire::kDhGroup14, dh.public_key)},
              {wire::kPayloadNonce, ni}});
    if (!send_ike(msg1)) return r;

    auto resp1 = recv_ike();
    if (!resp1 || resp1->header.exchange != wire::kIkeExchangeSaInit) return r;
    auto ke_r = find_payload(*resp1, wire::kPayloadKe);
    auto nonce_r = find_payload(*resp1, wire::kPayloadNonce);
    if (!ke_r || !nonce_r) return r;
    auto ke_parsed = wire::parse_ke(ke_r->body);
    if (!ke_parsed || ke_parsed->group != wire::kDhGroup14) return r;
    Bytes shared = crypto::dh_shared_secret(dh, ke_parsed->data);
    if (shared.empty()) return r;
    Bytes nr = nonce_r->body;

    Bytes skeyseed = wire::ikev2_skeyseed(ni, nr, shared);
    auto keys = wire::derive_ikev2_keys(skeyseed, ni, nr, ByteView(spi_i.data(), 8),
                                        ByteView(resp1->header.spi_r.data(), 8));
    r.sa_init_completed = true;
    r.transcript.record(Direction::ClientToProbe, "ike", false, "initial exchange completed");

    wire::IkeHeader auth_hdr;
    auth_hdr.spi_i = spi_i;
    auth_hdr.spi_r = resp1->header.spi_r;
    auth_hdr.exchange = wire::kIkeExchangeAuth;
    auth_hdr.flags = wire::kIkeFlagInitiator;

    // --- First authentication request (no AUTH payload: requests EAP) -------
    Bytes idi_body = wire::id_payload(wire::kIdFqdn, to_bytes(options.client_id));
    std::uint32_t esp_spi_client = 0;
    while (esp_spi_client == 0) {
        Bytes b = rng.bytes(4);
        esp_spi_client = get_u32(b, 0);
    }
    auth_hdr.message_id = 1;
    if (!send_ike(wire::encode_ike_sk_message(
            auth_hdr,
            {{wire::kPayloadIdI, idi_body},
             {wire::kPayloadSa,
              wire::encode_sa_payload({wire::standard_esp_proposal(esp_spi_client)})},
             {wire::kPayloadTsI, wire::ts_payload_any_v4()},
             {wire::kPayloadTsR, wire::ts_payload_any_v4()}},
            keys.sk_ei, keys.sk_ai, rng))) {
        return r;
    }

    auto resp2 = recv_ike();
    if (!resp2 || resp2->header.exchange != wire::kIkeExchangeAuth) return r;
    auto inner2 = wire::decode_ike_sk_message(*resp2, keys.sk_er, keys.sk_ar);
    if (!inner2) return r;
    auto find_in = [](const std::vector<wire::IkePayloadChunk>& chunks,
                      std::uint8_t type) -> const wire::IkePayloadChunk* {
        for (const auto& p : chunks) {
            if (p.type == type) return &p;
        }
        return nullptr;
    };

    auto idr_chunk = find_in(*inner2, wire::kPayloadIdR);
    auto cert_chunk = find_in(*inner2, wire::kPayloadCert);
    auto auth_chunk = find_in(*inner2, wire::kPayloadAuth);
    auto eap_chunk = find_in(*inner2, wire::kPayloadEap);
    if (!idr_chunk || !auth_chunk || !eap_chunk) return r;

    // --- Responder identity check: the behaviour under test ------------------
    Bytes cert_der;
    if (cert_chunk) {
        if (auto der = wire::parse_cert(cert_chunk->body)) {
            cert_der = *der;
            r.cert_received = true;
        }
    }
    if (!cert_der.empty()) {
        auto auth_parsed = wire::parse_auth(auth_chunk->body);
        Bytes octets =
            wire::ikev2_signed_octets(resp1->raw, ni, keys.sk_pr, idr_chunk->body);
        r.signature_ok = auth_parsed &&
                         auth_parsed->method == wire::kAuthMethodSignature &&
                         crypto::cert_verify_sha256(cert_der, octets, auth_parsed->data);
    }
    Bytes fingerprint = crypto::sha256(cert_der);
    switch (options.verify) {
        case Ikev2Verify::AcceptAny:
            r.identity_ok = true;  // no check at all: the defect
            r.transcript.record(Direction::Local, "ike", false,
                                "responder identity accepted without verification");
            break;
        case Ikev2Verify::PinnedFingerprint:
            r.identity_ok = r.signature_ok && !cert_der.empty() &&
                            fingerprint == options.pinned_fingerprint;
            r.transcript.record(Direction::Local, "ike", false,
                                r.identity_ok
                                    ? "responder identity matches the pinned certificate"
                                    : "responder identity REJECTED (pin mismatch or bad proof)");
            break;
    }
    if (!r.identity_ok) {
        r.aborted_on_verification = true;
        // Tell the responder authentication failed, then stop.
        wire::IkeHeader info = auth_hdr;
        info.exchange = wire::kIkeExchangeInformational;
        info.message_id = 2;
        send_ike(wire::encode_ike_sk_message(
            info, {{wire::kPayloadNotify, wire::notify_payload(wire::kNotifyAuthFailed)}},
            keys.sk_ei, keys.sk_ai, rng));
        return r;
    }

    // --- EAP conversation ------------------------------------------------------
    auto eap1 = wire::decode_eap(eap_chunk->body);
    if (!eap1 || eap1->code != wire::kEapCodeRequest) return r;
    auto ms1 = wire::parse_eap_mschapv2(*eap1);
    if (!ms1 || ms1->opcode != wire::kMsChapV2OpChallenge) return r;
    auto challenge = wire::parse_mschapv2_challenge_body(ms1->data);
    if (!challenge) return r;

    Bytes peer_challenge = rng.bytes(16);
    Bytes nt_response = auth::generate_nt_response(
        ByteView(challenge->challenge.data(), 16), peer_challenge, options.credentials.username,
        options.credentials.password);
    wire::EapMsChapV2 ms_resp;
    ms_resp.opcode = wire::kMsChapV2OpResponse;
    ms_resp.mschap_id = ms1->mschap_id;
    ms_resp.data =
        wire::mschapv2_response_body(peer_challenge, nt_response, options.credentials.username);
    auth_hdr.message_id = 2;
    if (!send_ike(wire::encode_ike_sk_message(
            auth_hdr,
            {{wire::kPayloadEap,
              wire::encode_eap_mschapv2(wire::kEapCodeResponse, eap1->identifier, ms_resp)}},
            keys.sk_ei, keys.sk_ai, rng))) {
        return r;
    }

    auto resp3 = recv_ike();
    if (!resp3) return r;
    auto inner3 = wire::decode_ike_sk_message(*resp3, keys.sk_er, keys.sk_ar);
    if (!inner3) return r;
    auto eap3_chunk = find_in(*inner3, wire::kPayloadEap);
    if (!eap3_chunk) return r;
    auto eap3 = wire::decode_eap(eap3_chunk->body);
    if (!eap3 || eap3->code != wire::kEapCodeRequest) return r;  // Failure ends here
    auto ms3 = wire::parse_eap_mschapv2(*eap3);
    if (!ms3 || ms3->opcode != wire::kMsChapV2OpSuccess) return r;

    // Verify the authenticator proof ("S=...") before conceding success.
    std::string message(ms3->data.begin(), ms3->data.end());
    std::string expected = auth::authenticator_response(
        options.credentials.password, nt_response, peer_challenge,
        ByteView(challenge->challenge.data(), 16), options.credentials.username);
    if (message.rfind(expected, 0) != 0) {
        r.transcript.record(Direction::Local, "ike", false,
                            "authenticator proof mismatch; aborting");
        return r;
    }

    wire::EapMsChapV2 ms_ok;
    ms_ok.opcode = wire::kMsChapV2OpSuccess;
    auth_hdr.message_id = 3;
    if (!send_ike(wire::encode_ike_sk_message(
            auth_hdr,
            {{wire::kPayloadEap,
              wire::encode_eap_mschapv2(wire::kEapCodeResponse, eap3->identifier, ms_ok)}},
            keys.sk_ei, keys.sk_ai, rng))) {
        return r;
    }

    auto resp4 = recv_ike();
    if (!resp4) return r;
    auto inner4 = wire::decode_ike_sk_message(*resp4, keys.sk_er, keys.sk_ar);
    if (!inner4) return r;
    auto eap4_chunk = find_in(*inner4, wire::kPayloadEap);
    if (!eap4_chunk) return r;
    auto eap4 = wire::decode_eap(eap4_chunk->body);
    if (!eap4 || eap4->code != wire::kEapCodeSuccess) return r;
    r.eap_succeeded = true;

    // --- Final AUTH from the EAP session key ------------------------------------
    Bytes msk = auth::eap_mschapv2_msk(options.credentials.password, nt_response);
    Bytes my_auth = wire::ikev2_auth_from_msk(
        msk, wire::ikev2_signed_octets(msg1, nr, keys.sk_pi, idi_body));
    auth_hdr.message_id = 4;
    if (!send_ike(wire::encode_ike_sk_message(
            auth_hdr, {{wire::kPayloadAuth, wire::auth_payload(wire::kAuthMethodPsk, my_auth)}},
            keys.sk_ei, keys.sk_ai, rng))) {
        return r;
    }

    auto resp5 = recv_ike();
    if (!resp5) return r;
    auto inner5 = wire::decode_ike_sk_message(*resp5, keys.sk_er, keys.sk_ar);
    if (!inner5) return r;
    auto rauth_chunk = find_in(*inner5, wire::kPayloadAuth);
    auto rsa_chunk = find_in(*inner5, wire::kPayloadSa);
    if (!rauth_chunk || !rsa_chunk) return r;
    auto rauth = wire::parse_auth(rauth_chunk->body);
    Bytes expected_rauth = wire::ikev2_auth_from_msk(
        msk, wire::ikev2_signed_octets(resp1->raw, ni, keys.sk_pr, idr_chunk->body));
    if (!rauth || !ct_equal(rauth->data, expected_rauth)) {
        r.transcript.record(Direction::Local, "ike", false,
                            "responder's final proof of the session keys failed; aborting");
        return r;
    }
    r.auth_completed = true;

    std::uint32_t esp_spi_server = 0;
    if (auto props = wire::decode_sa_payload(rsa_chunk->body)) {
        if (!props->empty() && (*props)[0].spi.size() == 4) {
            esp_spi_server = get_u32((*props)[0].spi, 0);
        }
    }
    if (esp_spi_server == 0) return r;
    auto child = wire::derive_child_keys(keys.sk_d, ni, nr);
    r.child_sa_established = true;
    r.transcript.record(Direction::Local, "ike", false, "tunnel keys derived");

    // --- Push the marker through the tunnel ---------------------------------------
    if (!options.marker.empty()) {
        Bytes inner_pkt = wire::build_ipv4_udp_packet({10, 99, 0, 2}, {10, 99, 0, 1},
                                                      options.marker_src_port,
                                                      options.marker_dst_port, options.marker);
        if (sock.send_to(options.server_ip, options.port,
                         wire::esp_seal({child.enc_i, child.auth_i}, esp_spi_server, 1,
                                        inner_pkt, wire::kEspNextIpv4, rng))) {
            r.marker_sent = true;
            r.transcript.record(Direction::ClientToProbe, "esp", false,
                                "marker datagram sent through the tunnel");
        }
        // Collect any echo.
        auto until = Clock::now() + std::chrono::milliseconds(500);
        while (Clock::now() < until && Clock::now() < deadline) {
            auto dgram = sock.recv_from(net::Millis(100));
            if (!dgram) continue;
            if (wire::udpencap_classify(dgram->payload) != wire::UdpEncap::Esp) continue;
            auto esp = wire::esp_open({child.enc_r, child.auth_r}, dgram->payload);
            if (esp && esp->spi == esp_spi_client &&
                esp->next_header == wire::kEspNextIpv4) {
                r.received_inner.push_back(esp->payload);
                break;
            }
        }
    }
    return r;
}

}  // namespace vpnprobe::sim
