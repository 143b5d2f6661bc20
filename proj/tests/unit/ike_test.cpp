#include <random>
#include <thread>

#include "doctest.h"
#include "vpnprobe/auth/mschapv2.hpp"
#include "vpnprobe/crypto/dh.hpp"
#include "vpnprobe/crypto/hash.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/crypto/sign.hpp"
#include "vpnprobe/net/tls.hpp"
#include "vpnprobe/probe/ikev2.hpp"
#include "vpnprobe/sim/ikev2_client.hpp"
#include "vpnprobe/wire/eap.hpp"
#include "vpnprobe/wire/esp.hpp"
#include "vpnprobe/wire/ike.hpp"
#include "vpnprobe/wire/ppp.hpp"

using namespace vpnprobe;
using namespace vpnprobe::wire;

TEST_CASE("dh key agreement produces matching shared secrets") {
    crypto::SystemRng rng;
    for (int group : {2, 14}) {
        CAPTURE(group);
        auto a = crypto::dh_generate(group, rng);
        auto b = crypto::dh_generate(group, rng);
        Bytes sa = crypto::dh_shared_secret(a, b.public_key);
        Bytes sb = crypto::dh_shared_secret(b, a.public_key);
        REQUIRE(!sa.empty());
        CHECK(sa == sb);
        CHECK(sa.size() == crypto::dh_prime_size(group));
        CHECK(a.public_key.size() == crypto::dh_prime_size(group));
    }
}

TEST_CASE("dh rejects degenerate peer public values") {
    crypto::SystemRng rng;
    auto a = crypto::dh_generate(14, rng);
    Bytes zero(256, 0x00);
    CHECK(crypto::dh_shared_secret(a, zero).empty());
    Bytes one(256, 0x00);
    one.back() = 0x01;
    CHECK(crypto::dh_shared_secret(a, one).empty());
    Bytes wrong_size(128, 0x42);
    CHECK(crypto::dh_shared_secret(a, wrong_size).empty());
}

TEST_CASE("esp seal/open round trip") {
    crypto::SystemRng rng;
    EspKeys keys{rng.bytes(16), rng.bytes(20)};
    Bytes payload = to_bytes("an inner packet that is not block aligned..");
    Bytes sealed = esp_seal(keys, 0x11223344, 7, payload, kEspNextIpv4, rng);
    auto opened = esp_open(keys, sealed);
    REQUIRE(opened.has_value());
    CHECK(opened->spi == 0x11223344);
    CHECK(opened->seq == 7);
    CHECK(opened->next_header == kEspNextIpv4);
    CHECK(opened->payload == payload);
}

TEST_CASE("esp rejects every single-byte tamper and wrong keys") {
    crypto::SystemRng rng;
    EspKeys keys{rng.bytes(16), rng.bytes(20)};
    Bytes payload = to_bytes("tamper target");
    Bytes sealed = esp_seal(keys, 5, 1, payload, kEspNextUdp, rng);

    std::mt19937 gen(7);
    for (std::size_t i = 0; i < sealed.size(); ++i) {
        Bytes copy = sealed;
        copy[i] ^= std::uint8_t(1u << (gen() % 8));
        auto opened = esp_open(keys, copy);
        // Flips in the SPI/sequence fields still authenticate differently,
        // so every flip must fail the integrity check.
        CHECK(!opened.has_value());
    }
    EspKeys other{rng.bytes(16), rng.bytes(20)};
    CHECK(!esp_open(other, sealed).has_value());
}

TEST_CASE("udp encapsulation demultiplexes ike and esp") {
    crypto::SystemRng rng;
    IkeHeader hdr;
    rng.fill(hdr.spi_i);
    hdr.exchange = kIkeExchangeSaInit;
    hdr.flags = kIkeFlagInitiator;
    Bytes ike = encode_ike_message(hdr, {{kPayloadNonce, rng.bytes(32)}});
    Bytes wrapped = udpencap_wrap_ike(ike);
    CHECK(udpencap_classify(wrapped) == UdpEncap::Ike);
    auto body = udpencap_ike_body(wrapped);
    CHECK(Bytes(body.begin(), body.end()) == ike);

    EspKeys keys{rng.bytes(16), rng.bytes(20)};
    Bytes esp = esp_seal(keys, 9, 1, to_bytes("x"), kEspNextIpv4, rng);
    CHECK(udpencap_classify(esp) == UdpEncap::Esp);

    CHECK(udpencap_classify(Bytes{0x00}) == UdpEncap::Invalid);
    CHECK(udpencap_classify(Bytes{}) == UdpEncap::Invalid);
}

TEST_CASE("eap ms-chap-v2 bodies round trip") {
    crypto::SystemRng rng;
    Bytes challenge = rng.bytes(16);

    Bytes cbody = mschapv2_challenge_body(challenge, "authenticator");
    auto cparsed = parse_mschapv2_challenge_body(cbody);
    REQUIRE(cparsed.has_value());
    CHECK(Bytes(cparsed->challenge.begin(), cparsed->challenge.end()) == challenge);
    CHECK(cparsed->name == "authenticator");

    Bytes peer = rng.bytes(16);
    Bytes nt = rng.bytes(24);
    Bytes rbody = mschapv2_response_body(peer, nt, "alice");
    auto rparsed = parse_mschapv2_response_body(rbody);
    REQUIRE(rparsed.has_value());
    CHECK(Bytes(rparsed->peer_challenge.begin(), rparsed->peer_challenge.end()) == peer);
    CHECK(Bytes(rparsed->nt_response.begin(), rparsed->nt_response.end()) == nt);
    CHECK(rparsed->name == "alice");

    EapMsChapV2 ms;
    ms.opcode = kMsChapV2OpChallenge;
    ms.mschap_id = 9;
    ms.data = cbody;
    Bytes pkt = encode_eap_mschapv2(kEapCodeRequest, 5, ms);
    auto eap = decode_eap(pkt);
    REQUIRE(eap.has_value());
    CHECK(eap->code == kEapCodeRequest);
    CHECK(eap->identifier == 5);
    auto back = parse_eap_mschapv2(*eap);
    REQUIRE(back.has_value());
    CHECK(back->opcode == kMsChapV2OpChallenge);
    CHECK(back->mschap_id == 9);
    CHECK(back->data == cbody);

    // Success responses are a bare opcode.
    EapMsChapV2 ok;
    ok.opcode = kMsChapV2OpSuccess;
    Bytes okpkt = encode_eap_mschapv2(kEapCodeResponse, 5, ok);
    auto okeap = decode_eap(okpkt);
    REQUIRE(okeap.has_value());
    auto okparsed = parse_eap_mschapv2(*okeap);
    REQUIRE(okparsed.has_value());
    CHECK(okparsed->opcode == kMsChapV2OpSuccess);
    CHECK(okparsed->data.empty());
}

TEST_CASE("sa payload round trips and spi survives") {
    auto ike_prop = standard_ike_proposal();
    Bytes sa = encode_sa_payload({ike_prop});
    auto decoded = decode_sa_payload(sa);
    REQUIRE(decoded.has_value());
    REQUIRE(decoded->size() == 1);
    CHECK(proposal_matches((*decoded)[0], ike_prop));

    auto esp_prop = standard_esp_proposal(0xAABBCCDD);
    Bytes esp_sa = encode_sa_payload({esp_prop});
    auto esp_decoded = decode_sa_payload(esp_sa);
    REQUIRE(esp_decoded.has_value());
    REQUIRE(esp_decoded->size() == 1);
    CHECK((*esp_decoded)[0].spi == Bytes{0xAA, 0xBB, 0xCC, 0xDD});
    CHECK(proposal_matches((*esp_decoded)[0], esp_prop));
}

TEST_CASE("ike message encode/decode round trip") {
    crypto::SystemRng rng;
    IkeHeader hdr;
    rng.fill(hdr.spi_i);
    rng.fill(hdr.spi_r);
    hdr.exchange = kIkeExchangeAuth;
    hdr.flags = kIkeFlagResponse;
    hdr.message_id = 3;
    Bytes nonce = rng.bytes(32);
    Bytes msg = encode_ike_message(
        hdr, {{kPayloadNonce, nonce}, {kPayloadNotify, notify_payload(kNotifyAuthFailed)}});
    auto decoded = decode_ike_message(msg);
    REQUIRE(decoded.has_value());
    CHECK(decoded->header.spi_i == hdr.spi_i);
    CHECK(decoded->header.exchange == kIkeExchangeAuth);
    CHECK(decoded->header.message_id == 3);
    REQUIRE(decoded->payloads.size() == 2);
    CHECK(decoded->payloads[0].body == nonce);
    auto notify = parse_notify(decoded->payloads[1].body);
    REQUIRE(notify.has_value());
    CHECK(notify->type == kNotifyAuthFailed);

    // Truncation and a bad version must both fail.
    Bytes trunc(msg.begin(), msg.end() - 1);
    CHECK(!decode_ike_message(trunc).has_value());
    Bytes bad_ver = msg;
    bad_ver[17] = 0x10;
    CHECK(!decode_ike_message(bad_ver).has_value());
}

TEST_CASE("encrypted ike payload round trips and rejects any tamper") {
    crypto::SystemRng rng;
    Bytes sk_e = rng.bytes(16);
    Bytes sk_a = rng.bytes(32);
    IkeHeader hdr;
    rng.fill(hdr.spi_i);
    rng.fill(hdr.spi_r);
    hdr.exchange = kIkeExchangeAuth;
    hdr.flags = kIkeFlagInitiator;
    hdr.message_id = 1;
    Bytes id_body = id_payload(kIdFqdn, to_bytes("client.example.test"));
    Bytes raw = encode_ike_sk_message(hdr, {{kPayloadIdI, id_body}, {kPayloadNonce, rng.bytes(16)}},
                                      sk_e, sk_a, rng);

    auto msg = decode_ike_message(raw);
    REQUIRE(msg.has_value());
    auto inner = decode_ike_sk_message(*msg, sk_e, sk_a);
    REQUIRE(inner.has_value());
    REQUIRE(inner->size() == 2);
    CHECK((*inner)[0].type == kPayloadIdI);
    CHECK((*inner)[0].body == id_body);
    CHECK((*inner)[1].type == kPayloadNonce);

    std::mt19937 gen(11);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        Bytes copy = raw;
        copy[i] ^= std::uint8_t(1u << (gen() % 8));
        auto m = decode_ike_message(copy);
        if (!m) continue;  // header/length damage can fail earlier; also fine
        CHECK(!decode_ike_sk_message(*m, sk_e, sk_a).has_value());
    }
    // Wrong keys must fail too.
    CHECK(!decode_ike_sk_message(*msg, rng.bytes(16), sk_a).has_value());
    CHECK(!decode_ike_sk_message(*msg, sk_e, rng.bytes(32)).has_value());

    // An empty encrypted message (used for informational acks) round trips.
    Bytes empty_raw = encode_ike_sk_message(hdr, {}, sk_e, sk_a, rng);
    auto empty_msg = decode_ike_message(empty_raw);
    REQUIRE(empty_msg.has_value());
    auto empty_inner = decode_ike_sk_message(*empty_msg, sk_e, sk_a);
    REQUIRE(empty_inner.has_value());
    CHECK(empty_inner->empty());
}

TEST_CASE("key derivation is deterministic with well-formed sizes") {
    Bytes ni(32, 0x01);
    Bytes nr(32, 0x02);
    Bytes shared(256, 0x5c);
    Bytes spi_i(8, 0x03), spi_r(8, 0x04);

    Bytes seed = ikev2_skeyseed(ni, nr, shared);
    CHECK(seed.size() == 32);
    CHECK(seed == ikev2_skeyseed(ni, nr, shared));

    auto keys = derive_ikev2_keys(seed, ni, nr, spi_i, spi_r);
    CHECK(keys.sk_d.size() == 32);
    CHECK(keys.sk_ai.size() == 32);
    CHECK(keys.sk_ar.size() == 32);
    CHECK(keys.sk_ei.size() == 16);
    CHECK(keys.sk_er.size() == 16);
    CHECK(keys.sk_pi.size() == 32);
    CHECK(keys.sk_pr.size() == 32);
    CHECK(keys.sk_ai != keys.sk_ar);
    CHECK(keys.sk_ei != keys.sk_er);

    auto child = derive_child_keys(keys.sk_d, ni, nr);
    CHECK(child.enc_i.size() == 16);
    CHECK(child.auth_i.size() == 20);
    CHECK(child.enc_r.size() == 16);
    CHECK(child.auth_r.size() == 20);
    CHECK(child.enc_i != child.enc_r);

    // prf+ expands to exactly the requested length, deterministically.
    Bytes a = prf_plus_sha256(seed, ni, 100);
    CHECK(a.size() == 100);
    CHECK(a == prf_plus_sha256(seed, ni, 100));
    CHECK(Bytes(a.begin(), a.begin() + 50) == prf_plus_sha256(seed, ni, 50));
}

// --- End-to-end scenarios ----------------------------------------------------

namespace {

struct E2eResult {
    probe::Ikev2SessionResult server;
    sim::Ikev2ClientResult client;
};

E2eResult run_e2e(probe::Ikev2ProbeOptions sopts, sim::Ikev2ClientOptions copts) {
    crypto::SystemRng srng, crng;
    probe::Ikev2ProbeServer server(std::move(sopts), srng);
    server.bind();
    copts.port = server.port();

    probe::Ikev2SessionResult sres;
    std::thread t([&] { sres = server.serve_one(); });
    sim::Ikev2ClientResult cres = sim::run_ikev2_client(copts, crng);
    t.join();
    return {std::move(sres), std::move(cres)};
}

Credentials test_creds() { return {"probe-user", "correct horse battery staple"}; }

const Bytes kMarker = to_bytes("IKEV2-TUNNEL-MARKER-" + std::string(28, 'z'));

probe::Ikev2ProbeOptions base_server() {
    probe::Ikev2ProbeOptions sopts;
    sopts.credentials = test_creds();
    sopts.session_timeout = std::chrono::milliseconds(5000);
    return sopts;
}

sim::Ikev2ClientOptions base_client() {
    sim::Ikev2ClientOptions copts;
    copts.credentials = test_creds();
    copts.marker = kMarker;
    copts.timeout = std::chrono::milliseconds(5000);
    return copts;
}

}  // namespace

TEST_CASE("client that authenticates to any responder is flagged vulnerable") {
    auto copts = base_client();
    copts.verify = sim::Ikev2Verify::AcceptAny;
    auto [server, client] = run_e2e(base_server(), std::move(copts));

    // The client walked straight into the fake responder.
    CHECK(client.sa_init_completed);
    CHECK(client.cert_received);
    CHECK(client.signature_ok);
    CHECK(!client.aborted_on_verification);
    CHECK(client.eap_succeeded);
    CHECK(client.auth_completed);
    CHECK(client.child_sa_established);
    CHECK(client.marker_sent);

    // Full tunnel: the marker traversed it and the echo came back.
    REQUIRE(!server.udp_payloads.empty());
    CHECK(server.udp_payloads[0] == kMarker);
    REQUIRE(client.received_inner.size() == 1);
    auto echoed = extract_udp_payload(client.received_inner[0]);
    REQUIRE(echoed.has_value());
    CHECK(*echoed == kMarker);

    CHECK(server.client_identity == "client.example.test");
    CHECK(server.eap_response_seen);
    CHECK(server.auth_completed);
    CHECK(server.child_sa_established);

    // Verdict: vulnerable, network attacker, evidence indices valid.
    CHECK(server.finding.verdict.level == VerdictLevel::Vulnerable);
    CHECK(server.finding.vuln_class == VulnClass::Ikev2ImproperServerVerification);
    CHECK(server.finding.attacker == AttackerType::Network);
    REQUIRE(!server.finding.verdict.evidence.empty());
    for (auto idx : server.finding.verdict.evidence) {
        CHECK(idx < server.transcript.events().size());
    }

    // The captured challenge/response material must be in the transcript and
    // must actually verify against the account credentials.
    bool found_evidence = false;
    for (auto idx : server.finding.verdict.evidence) {
        const auto& ev = server.transcript.events()[idx];
        if (ev.raw.size() != 16 + 16 + 24) continue;
        ByteView raw(ev.raw);
        if (auth::verify_nt_response(raw.subspan(0, 16), raw.subspan(16, 16),
                                     test_creds().username, test_creds().password,
                                     raw.subspan(32, 24))) {
            found_evidence = true;
        }
    }
    CHECK(found_evidence);
}

TEST_CASE("client that pins the expected identity refuses the imposter") {
    auto copts = base_client();
    copts.verify = sim::Ikev2Verify::PinnedFingerprint;
    copts.pinned_fingerprint = Bytes(32, 0xAB);  // not the fake responder's
    auto [server, client] = run_e2e(base_server(), std::move(copts));

    CHECK(client.sa_init_completed);
    CHECK(client.cert_received);
    CHECK(client.signature_ok);  // the proof was fine; the identity was wrong
    CHECK(!client.identity_ok);
    CHECK(client.aborted_on_verification);
    CHECK(!client.eap_succeeded);
    CHECK(!client.marker_sent);

    CHECK(server.auth_request_seen);
    CHECK(!server.eap_response_seen);
    CHECK(server.finding.verdict.level == VerdictLevel::Secure);
}

TEST_CASE("control run against the genuine identity completes and is secure") {
    auto cert = net::generate_self_signed(
        net::CertSpec{.cn = "vpn.example.test", .dns_names = {"vpn.example.test"}});
    auto sopts = base_server();
    sopts.certificate = cert;
    sopts.cert_is_untrusted = false;

    auto copts = base_client();
    copts.verify = sim::Ikev2Verify::PinnedFingerprint;
    copts.pinned_fingerprint = crypto::sha256(cert.cert_der);
    auto [server, client] = run_e2e(std::move(sopts), std::move(copts));

    CHECK(client.identity_ok);
    CHECK(client.auth_completed);
    CHECK(client.child_sa_established);
    REQUIRE(!server.udp_payloads.empty());
    CHECK(server.udp_payloads[0] == kMarker);
    CHECK(server.finding.verdict.level == VerdictLevel::Secure);
}

TEST_CASE("session that never completes a key exchange is inconclusive") {
    Finding f = probe::judge_improper_server_verification(
        "t", true, false, false, false, false, false, std::nullopt, std::nullopt, std::nullopt);
    CHECK(f.verdict.level == VerdictLevel::Inconclusive);
    CHECK(!f.verdict.note.empty());

    // Identity revealed but no credential material: secure refusal.
    Finding g = probe::judge_improper_server_verification(
        "t", true, true, true, false, false, false, std::size_t{0}, std::nullopt, std::nullopt);
    CHECK(g.verdict.level == VerdictLevel::Secure);

    // Credential material disclosed: vulnerable even without tunnel data.
    Finding h = probe::judge_improper_server_verification(
        "t", true, true, true, true, false, false, std::size_t{0}, std::size_t{1}, std::nullopt);
    CHECK(h.verdict.level == VerdictLevel::Vulnerable);
    CHECK(h.verdict.evidence == std::vector<std::size_t>{0, 1});
}
