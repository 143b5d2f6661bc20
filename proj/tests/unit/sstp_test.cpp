#include <random>
#include <thread>

#include "doctest.h"
#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/crypto/hash.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/probe/sstp.hpp"
#include "vpnprobe/sim/sstp_client.hpp"
#include "vpnprobe/wire/sstp.hpp"

using namespace vpnprobe;
using namespace vpnprobe::wire;

TEST_CASE("sstp data packet round trip") {
    Bytes frame = to_bytes("\xff\x03\xc0\x21hello");
    Bytes raw = encode_sstp_data(frame);
    auto len = sstp_packet_length(ByteView(raw.data(), 4));
    REQUIRE(len.has_value());
    CHECK(*len == raw.size());
    auto pkt = decode_sstp(raw);
    REQUIRE(pkt.has_value());
    CHECK(!pkt->control);
    CHECK(pkt->payload == frame);
}

TEST_CASE("sstp control packet round trip with attributes") {
    SstpAttribute encap{kSstpAttrEncapsulatedProtocol, {0x00, 0x01}};
    SstpBindingRequest req;
    req.hash_bitmask = kSstpHashSha256 | kSstpHashSha1;
    for (std::size_t i = 0; i < req.nonce.size(); ++i) req.nonce[i] = std::uint8_t(i * 3);
    Bytes raw = encode_sstp_control(SstpMsgType::ConnectAck,
                                    {encap, make_binding_request_attr(req)});
    auto pkt = decode_sstp(raw);
    REQUIRE(pkt.has_value());
    CHECK(pkt->control);
    CHECK(pkt->type == SstpMsgType::ConnectAck);
    REQUIRE(pkt->attributes.size() == 2);
    CHECK(pkt->attributes[0] == encap);
    auto back = parse_binding_request_attr(pkt->attributes[1]);
    REQUIRE(back.has_value());
    CHECK(back->hash_bitmask == req.hash_bitmask);
    CHECK(back->nonce == req.nonce);
}

TEST_CASE("sstp decode rejects malformed packets") {
    Bytes ok = encode_sstp_control(SstpMsgType::EchoRequest, {});
    CHECK(decode_sstp(ok).has_value());

    Bytes bad_version = ok;
    bad_version[0] = 0x20;
    CHECK(!decode_sstp(bad_version).has_value());

    Bytes short_read(ok.begin(), ok.end() - 1);
    CHECK(!decode_sstp(short_read).has_value());

    Bytes empty;
    CHECK(!decode_sstp(empty).has_value());
    CHECK(!sstp_packet_length(empty).has_value());
}

TEST_CASE("sstp stream buffer reassembles split and coalesced packets") {
    Bytes a = encode_sstp_data(to_bytes("first frame"));
    Bytes b = encode_sstp_control(SstpMsgType::EchoRequest, {});
    Bytes c = encode_sstp_data(to_bytes("third"));
    Bytes joined = cat({a, b, c});

    SstpBuffer buf;
    // Feed in awkward 3-byte slices.
    for (std::size_t off = 0; off < joined.size(); off += 3) {
        buf.feed(ByteView(joined).subspan(off, std::min<std::size_t>(3, joined.size() - off)));
    }
    auto p1 = buf.pop();
    REQUIRE(p1.has_value());
    CHECK(p1->payload == to_bytes("first frame"));
    CHECK(buf.last_raw() == a);
    auto p2 = buf.pop();
    REQUIRE(p2.has_value());
    CHECK(p2->control);
    auto p3 = buf.pop();
    REQUIRE(p3.has_value());
    CHECK(p3->payload == to_bytes("third"));
    CHECK(!buf.pop().has_value());
    CHECK(!buf.broken());

    SstpBuffer garbage;
    garbage.feed(to_bytes("\x99\x99\x99\x99nonsense"));
    CHECK(!garbage.pop().has_value());
    CHECK(garbage.broken());
}

TEST_CASE("binding attribute round trip") {
    SstpBinding b;
    b.hash = kSstpHashSha1;
    for (std::size_t i = 0; i < 32; ++i) {
        b.nonce[i] = std::uint8_t(i);
        b.cert_hash[i] = std::uint8_t(0xA0 + i);
        b.compound_mac[i] = std::uint8_t(0x55 ^ i);
    }
    auto attr = make_binding_attr(b);
    CHECK(attr.id == kSstpAttrCryptoBinding);
    auto back = parse_binding_attr(attr);
    REQUIRE(back.has_value());
    CHECK(back->hash == b.hash);
    CHECK(back->nonce == b.nonce);
    CHECK(back->cert_hash == b.cert_hash);
    CHECK(back->compound_mac == b.compound_mac);
}

namespace {

struct BindingFixture {
    Bytes hlak;
    std::array<std::uint8_t, 32> nonce{};
    std::array<std::uint8_t, 32> cert_hash{};
};

BindingFixture make_fixture(std::mt19937& gen) {
    BindingFixture f;
    std::uniform_int_distribution<int> byte(0, 255);
    f.hlak.resize(32);
    for (auto& x : f.hlak) x = std::uint8_t(byte(gen));
    for (auto& x : f.nonce) x = std::uint8_t(byte(gen));
    for (auto& x : f.cert_hash) x = std::uint8_t(byte(gen));
    return f;
}

}  // namespace

TEST_CASE("valid crypto binding verifies under both hash choices") {
    std::mt19937 gen(7);
    for (std::uint8_t hash : {kSstpHashSha256, kSstpHashSha1}) {
        auto f = make_fixture(gen);
        Bytes msg = build_connected_message(hash, f.hlak, f.nonce, f.cert_hash);
        CHECK(verify_connected_message(msg, f.hlak, f.nonce, f.cert_hash));

        // Decoded view carries the right pieces.
        auto pkt = decode_sstp(msg);
        REQUIRE(pkt.has_value());
        REQUIRE(pkt->attributes.size() == 1);
        auto b = parse_binding_attr(pkt->attributes[0]);
        REQUIRE(b.has_value());
        CHECK(b->hash == hash);
        CHECK(b->nonce == f.nonce);
        CHECK(b->cert_hash == f.cert_hash);
    }
}

TEST_CASE("crypto binding rejects wrong keys, nonces, and certificate hashes") {
    std::mt19937 gen(11);
    auto f = make_fixture(gen);
    Bytes msg = build_connected_message(kSstpHashSha256, f.hlak, f.nonce, f.cert_hash);

    auto other = make_fixture(gen);
    CHECK(!verify_connected_message(msg, other.hlak, f.nonce, f.cert_hash));
    CHECK(!verify_connected_message(msg, f.hlak, other.nonce, f.cert_hash));
    CHECK(!verify_connected_message(msg, f.hlak, f.nonce, other.cert_hash));

    // A binding computed for one certificate must not verify against another:
    // the check is what makes an interposed TLS endpoint visible.
    Bytes honest = build_connected_message(kSstpHashSha256, f.hlak, f.nonce, other.cert_hash);
    CHECK(!verify_connected_message(honest, f.hlak, f.nonce, f.cert_hash));
}

TEST_CASE("crypto binding rejects every single-bit tamper (1000+ trials)") {
    std::mt19937 gen(42);
    std::uniform_int_distribution<int> bit(0, 7);
    int trials = 0;
    while (trials < 1024) {
        auto f = make_fixture(gen);
        const std::uint8_t hash = (trials % 2 == 0) ? kSstpHashSha256 : kSstpHashSha1;
        Bytes msg = build_connected_message(hash, f.hlak, f.nonce, f.cert_hash);
        REQUIRE(verify_connected_message(msg, f.hlak, f.nonce, f.cert_hash));

        std::uniform_int_distribution<std::size_t> pos(0, msg.size() - 1);
        Bytes tampered = msg;
        tampered[pos(gen)] ^= std::uint8_t(1u << bit(gen));
        CHECK(!verify_connected_message(tampered, f.hlak, f.nonce, f.cert_hash));
        ++trials;
    }
    CHECK(trials >= 1000);
}

TEST_CASE("compound mac key derivation is hash-specific and deterministic") {
    Bytes hlak(32, 0x5c);
    Bytes cmk256 = sstp_compute_cmk(kSstpHashSha256, hlak);
    Bytes cmk1 = sstp_compute_cmk(kSstpHashSha1, hlak);
    CHECK(cmk256.size() == 32);
    CHECK(cmk1.size() == 20);
    CHECK(cmk256 != sstp_compute_cmk(kSstpHashSha256, Bytes(32, 0x5d)));
    CHECK(sstp_compute_cmk(kSstpHashSha256, hlak) == cmk256);
}

TEST_CASE("http preamble helpers") {
    std::string req = sstp_http_request("vpn.example.test");
    CHECK(is_sstp_http_request(req));
    CHECK(!is_sstp_http_request("GET / HTTP/1.1\r\n\r\n"));
    CHECK(!is_sstp_http_request(req.substr(0, req.size() - 4)));  // incomplete
    CHECK(sstp_http_response_ok().rfind("HTTP/1.1 200", 0) == 0);
}

// ---------------------------------------------------------------------------
// End-to-end: fake server with a failing certificate vs. simulated clients.
// ---------------------------------------------------------------------------

namespace {

struct E2eResult {
    probe::SstpSessionResult server;
    sim::SstpClientResult client;
};

E2eResult run_e2e(probe::SstpProbeOptions sopts, sim::SstpClientOptions copts) {
    crypto::SystemRng srng, crng;
    probe::SstpProbeServer server(std::move(sopts), srng);
    server.bind();
    copts.port = server.port();

    probe::SstpSessionResult sres;
    std::thread t([&] { sres = server.serve_one(); });
    sim::SstpClientResult cres = sim::run_sstp_client(copts, crng);
    t.join();
    return {std::move(sres), std::move(cres)};
}

Credentials test_creds() { return {"probe-user", "correct horse battery staple"}; }

// A client that trusts only its own CA: the fake server's self-signed leaf
// must fail validation.
net::TlsClientPolicy distrusting_policy() {
    static const net::CertAuthority ca = net::CertAuthority::create("client-trust-root");
    net::TlsClientPolicy policy;
    policy.mode = net::TlsVerifyMode::CaAndHostname;
    policy.ca_pem = ca.root().cert_pem;
    policy.expect_hostname = "vpn.example.test";
    return policy;
}

sim::SstpClientOptions base_client() {
    sim::SstpClientOptions copts;
    copts.tls = distrusting_policy();
    copts.ppp.credentials = test_creds();
    copts.ppp.request_encryption = false;  // TLS is the transport cipher here
    copts.ppp.require_encryption = false;
    copts.ppp.marker = to_bytes("SSTP-MARKER-" + std::string(36, 'q'));
    return copts;
}

probe::SstpProbeOptions base_server() {
    probe::SstpProbeOptions sopts;
    sopts.ppp.credentials = test_creds();
    sopts.session_timeout = std::chrono::milliseconds(5000);
    return sopts;
}

}  // namespace

TEST_CASE("client that ignores a failing certificate is flagged vulnerable") {
    auto sopts = base_server();
    auto copts = base_client();
    copts.abort_on_cert_failure = false;  // the defect under test

    auto [server, client] = run_e2e(std::move(sopts), std::move(copts));

    CHECK(client.tls_established);
    CHECK(!client.cert_ok);
    CHECK(!client.cert_failure.empty());
    CHECK(!client.aborted_on_cert);
    CHECK(client.http_ok);
    CHECK(client.sstp_connected);
    CHECK(client.auth_succeeded);
    CHECK(client.binding_sent);
    CHECK(client.marker_sent);
    CHECK(client.outcome == sim::PppClientOutcome::EstablishedPlaintext);

    CHECK(server.tls_established);
    CHECK(server.http_upgraded);
    CHECK(server.auth_succeeded);
    CHECK(server.binding_received);
    CHECK(server.binding_valid);
    REQUIRE(!server.udp_payloads.empty());
    CHECK(server.udp_payloads[0] == to_bytes("SSTP-MARKER-" + std::string(36, 'q')));

    CHECK(server.finding.vuln_class == VulnClass::SstpIgnoredCertFailure);
    CHECK(server.finding.attacker == AttackerType::Network);
    CHECK(server.finding.verdict.level == VerdictLevel::Vulnerable);
    REQUIRE(!server.finding.verdict.evidence.empty());
    for (auto idx : server.finding.verdict.evidence) {
        CHECK(idx < server.transcript.events().size());
    }
}

TEST_CASE("client that aborts on the certificate failure is flagged secure") {
    auto sopts = base_server();
    auto copts = base_client();
    copts.abort_on_cert_failure = true;

    auto [server, client] = run_e2e(std::move(sopts), std::move(copts));

    CHECK(client.tls_established);
    CHECK(!client.cert_ok);
    CHECK(client.aborted_on_cert);
    CHECK(!client.auth_succeeded);

    CHECK(server.tls_established);
    CHECK(!server.http_upgraded);
    CHECK(!server.auth_succeeded);
    CHECK(server.finding.verdict.level == VerdictLevel::Secure);
}

TEST_CASE("client that stalls after connecting is flagged weak") {
    auto sopts = base_server();
    auto copts = base_client();
    copts.abort_on_cert_failure = false;
    copts.stop_after_connect = true;

    auto [server, client] = run_e2e(std::move(sopts), std::move(copts));

    CHECK(client.sstp_connected);
    CHECK(!client.auth_succeeded);
    CHECK(server.connect_requested);
    CHECK(!server.auth_succeeded);
    CHECK(server.finding.verdict.level == VerdictLevel::Weak);
    REQUIRE(!server.finding.verdict.evidence.empty());
    for (auto idx : server.finding.verdict.evidence) {
        CHECK(idx < server.transcript.events().size());
    }
}

TEST_CASE("trusted-certificate control run completes and stays secure") {
    auto ca = net::CertAuthority::create("control-root");
    net::CertSpec spec;
    spec.cn = "vpn.example.test";
    spec.dns_names = {"vpn.example.test"};

    auto sopts = base_server();
    sopts.certificate = ca.issue(spec);
    sopts.cert_is_untrusted = false;

    auto copts = base_client();
    copts.abort_on_cert_failure = true;  // a hardened client still completes
    copts.tls.mode = net::TlsVerifyMode::CaAndHostname;
    copts.tls.ca_pem = ca.root().cert_pem;
    copts.tls.expect_hostname = "vpn.example.test";

    auto [server, client] = run_e2e(std::move(sopts), std::move(copts));

    CHECK(client.cert_ok);
    CHECK(!client.aborted_on_cert);
    CHECK(client.auth_succeeded);
    CHECK(client.binding_sent);
    CHECK(server.auth_succeeded);
    CHECK(server.binding_valid);
    CHECK(server.finding.verdict.level == VerdictLevel::Secure);
}

TEST_CASE("sha1-only binding negotiation verifies end to end") {
    auto sopts = base_server();
    sopts.hash_bitmask = kSstpHashSha1;
    auto copts = base_client();
    copts.abort_on_cert_failure = false;

    auto [server, client] = run_e2e(std::move(sopts), std::move(copts));

    CHECK(client.binding_sent);
    CHECK(server.binding_received);
    CHECK(server.binding_valid);
    CHECK(server.finding.verdict.level == VerdictLevel::Vulnerable);
}
