#include <doctest.h>

#include <thread>

#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/probe/pptp.hpp"
#include "vpnprobe/probe/pptp_relay.hpp"
#include "vpnprobe/sim/pptp_client.hpp"
#include "vpnprobe/wire/pptp.hpp"

using namespace vpnprobe;

TEST_CASE("pptp control message codecs") {
    wire::PptpStartRequest rq;
    rq.hostname = "host-a";
    rq.vendor = "vendor-a";
    Bytes raw = wire::encode_pptp_start_request(rq);
    auto msg = wire::decode_pptp_control(raw);
    REQUIRE(msg);
    CHECK(msg->type == wire::PptpMsgType::StartRequest);
    REQUIRE(msg->start_request);
    CHECK(msg->start_request->hostname == "host-a");
    CHECK(msg->start_request->vendor == "vendor-a");
    CHECK(wire::pptp_message_length(raw) == raw.size());

    wire::PptpStartReply rp;
    rp.hostname = "srv";
    raw = wire::encode_pptp_start_reply(rp);
    msg = wire::decode_pptp_control(raw);
    REQUIRE(msg);
    REQUIRE(msg->start_reply);
    CHECK(msg->start_reply->result == 1);

    wire::PptpCallRequest ocrq;
    ocrq.call_id = 42;
    ocrq.serial = 3;
    ocrq.phone_number = "555";
    raw = wire::encode_pptp_call_request(ocrq);
    msg = wire::decode_pptp_control(raw);
    REQUIRE(msg);
    REQUIRE(msg->call_request);
    CHECK(msg->call_request->call_id == 42);
    CHECK(msg->call_request->phone_number == "555");

    wire::PptpCallReply ocrp;
    ocrp.call_id = 1;
    ocrp.peer_call_id = 42;
    raw = wire::encode_pptp_call_reply(ocrp);
    msg = wire::decode_pptp_control(raw);
    REQUIRE(msg);
    REQUIRE(msg->call_reply);
    CHECK(msg->call_reply->peer_call_id == 42);

    wire::PptpEcho echo;
    echo.identifier = 0xABCD1234;
    raw = wire::encode_pptp_echo(echo);
    msg = wire::decode_pptp_control(raw);
    REQUIRE(msg);
    REQUIRE(msg->echo);
    CHECK(msg->echo->identifier == 0xABCD1234);
    CHECK_FALSE(msg->echo->reply);

    // Wrong magic is rejected.
    Bytes bad = wire::encode_pptp_start_request(rq);
    bad[4] ^= 0xFF;
    CHECK_FALSE(wire::decode_pptp_control(bad));
    CHECK_FALSE(wire::decode_pptp_control(Bytes{0, 8, 0, 1, 0, 0, 0, 0}));
}

TEST_CASE("gre codec round trips") {
    wire::GrePacket p;
    p.call_id = 9;
    p.seq = 77;
    p.payload = {1, 2, 3, 4};
    Bytes raw = wire::encode_gre(p);
    auto back = wire::decode_gre(raw);
    REQUIRE(back);
    CHECK(back->call_id == 9);
    CHECK(back->seq == 77);
    CHECK_FALSE(back->ack);
    CHECK(back->payload == p.payload);

    p.ack = 5;
    p.seq.reset();
    back = wire::decode_gre(wire::encode_gre(p));
    REQUIRE(back);
    CHECK_FALSE(back->seq);
    CHECK(back->ack == 5);

    // Truncated payload and wrong protocol are rejected.
    Bytes bad = raw;
    bad[2] = 0x00;
    CHECK_FALSE(wire::decode_gre(bad));
    raw.pop_back();
    CHECK_FALSE(wire::decode_gre(raw));
}

TEST_CASE("pptp control buffer reassembles split messages") {
    probe::PptpControlBuffer buf;
    Bytes msg = wire::encode_pptp_start_request({});
    Bytes second = wire::encode_pptp_echo({});
    Bytes all = cat({msg, second});
    // Feed in awkward chunks.
    buf.feed(ByteView(all.data(), 3));
    CHECK_FALSE(buf.pop());
    buf.feed(ByteView(all.data() + 3, msg.size() - 3));
    auto got = buf.pop();
    REQUIRE(got);
    CHECK(got->type == wire::PptpMsgType::StartRequest);
    CHECK_FALSE(buf.pop());
    buf.feed(ByteView(all.data() + msg.size(), second.size()));
    got = buf.pop();
    REQUIRE(got);
    CHECK(got->type == wire::PptpMsgType::EchoRequest);
    CHECK_FALSE(buf.broken());
}

namespace {

struct E2eResult {
    probe::PptpSessionResult server;
    sim::PptpClientResult client;
};

E2eResult run_e2e(ppp::MppePolicy server_policy, bool client_requires_encryption,
                  const Bytes& marker) {
    probe::PptpProbeOptions so;
    so.ppp.credentials = {"probe-user", "probe-pass"};
    so.ppp.mppe = server_policy;
    so.session_timeout = std::chrono::milliseconds(6000);
    crypto::SeededRng server_rng(1000);
    probe::PptpProbeServer server(so, server_rng);
    server.bind();

    E2eResult out;
    std::thread server_thread([&] { out.server = server.serve_one(); });

    sim::PptpClientOptions co;
    co.control_port = server.control_port();
    co.data_port = server.data_port();
    co.ppp.credentials = {"probe-user", "probe-pass"};
    co.ppp.require_encryption = client_requires_encryption;
    co.ppp.marker = marker;
    co.timeout = std::chrono::milliseconds(6000);
    crypto::SeededRng client_rng(2000);
    out.client = sim::run_pptp_client(co, client_rng);

    server_thread.join();
    return out;
}

}  // namespace

TEST_CASE("pptp e2e: client that tolerates refused encryption is flagged") {
    Bytes marker = to_bytes("MARKER-" + std::string(57, 'x'));
    REQUIRE(marker.size() == 64);
    auto r = run_e2e(ppp::MppePolicy::Reject, /*client_requires_encryption=*/false, marker);

    CHECK(r.client.control_established);
    CHECK(r.client.call_established);
    CHECK(r.client.outcome == sim::PppClientOutcome::EstablishedPlaintext);
    CHECK(r.server.auth_succeeded);
    CHECK(r.server.ccp_mppe_rejected);
    REQUIRE(!r.server.plaintext_udp_payloads.empty());
    CHECK(r.server.plaintext_udp_payloads[0] == marker);

    const Finding& f = r.server.finding;
    CHECK(f.vuln_class == VulnClass::PptpOptionalEncryption);
    CHECK(f.attacker == AttackerType::Network);
    CHECK(f.verdict.level == VerdictLevel::Vulnerable);
    REQUIRE(!f.verdict.evidence.empty());
    for (std::size_t idx : f.verdict.evidence) {
        CHECK(idx < r.server.transcript.events().size());
    }
}

TEST_CASE("pptp e2e: client that refuses cleartext is judged secure") {
    Bytes marker = to_bytes(std::string(64, 'y'));
    auto r = run_e2e(ppp::MppePolicy::Reject, /*client_requires_encryption=*/true, marker);

    CHECK(r.client.outcome == sim::PppClientOutcome::AbortedEncryptionRefused);
    CHECK(r.server.plaintext_udp_payloads.empty());
    CHECK(r.server.finding.verdict.level == VerdictLevel::Secure);
}

TEST_CASE("pptp e2e: encrypted session stays clean") {
    Bytes marker = to_bytes(std::string(64, 'z'));
    auto r = run_e2e(ppp::MppePolicy::Offer, /*client_requires_encryption=*/true, marker);

    CHECK(r.client.outcome == sim::PppClientOutcome::EstablishedEncrypted);
    CHECK(r.server.mppe_active);
    CHECK(r.server.plaintext_ip_frames.empty());
    REQUIRE(!r.server.decrypted_ip_frames.empty());
    CHECK(r.server.finding.verdict.level == VerdictLevel::Secure);
}

TEST_CASE("pptp relay downgrade: marker is captured in flight") {
    Bytes marker = to_bytes("RELAY--" + std::string(57, 'm'));
    REQUIRE(marker.size() == 64);

    // A benign upstream server that would happily encrypt.
    probe::PptpProbeOptions so;
    so.ppp.credentials = {"u", "p"};
    so.ppp.mppe = ppp::MppePolicy::Offer;
    so.session_timeout = std::chrono::milliseconds(6000);
    so.stop_on_plaintext = false;  // passive endpoint; the relay decides
    crypto::SeededRng server_rng(11);
    probe::PptpProbeServer server(so, server_rng);
    server.bind();

    probe::PptpRelayOptions ro;
    ro.upstream_control_port = server.control_port();
    ro.upstream_data_port = server.data_port();
    ro.session_timeout = std::chrono::milliseconds(6000);
    probe::PptpMitmRelay relay(ro);
    relay.bind();

    probe::PptpSessionResult server_result;
    probe::PptpRelayResult relay_result;
    std::thread server_thread([&] { server_result = server.serve_one(); });
    std::thread relay_thread([&] { relay_result = relay.serve_one(); });

    sim::PptpClientOptions co;
    co.control_port = relay.control_port();
    co.data_port = relay.data_port();
    co.ppp.credentials = {"u", "p"};
    co.ppp.require_encryption = false;  // the client behaviour under test
    co.ppp.marker = marker;
    co.timeout = std::chrono::milliseconds(6000);
    crypto::SeededRng client_rng(12);
    auto client_result = sim::run_pptp_client(co, client_rng);

    relay_thread.join();
    server_thread.join();

    CHECK(client_result.outcome == sim::PppClientOutcome::EstablishedPlaintext);
    CHECK(relay_result.saw_auth_success);
    CHECK(relay_result.downgrade_injected);
    REQUIRE(!relay_result.plaintext_udp_payloads.empty());
    CHECK(relay_result.plaintext_udp_payloads[0] == marker);

    const Finding& f = relay_result.finding;
    CHECK(f.vuln_class == VulnClass::PptpOptionalEncryption);
    CHECK(f.verdict.level == VerdictLevel::Vulnerable);
    REQUIRE(!f.verdict.evidence.empty());
    for (std::size_t idx : f.verdict.evidence) {
        CHECK(idx < relay_result.transcript.events().size());
    }
}

TEST_CASE("pptp relay downgrade: strict client defeats the attack") {
    Bytes marker = to_bytes(std::string(64, 'n'));

    probe::PptpProbeOptions so;
    so.ppp.credentials = {"u", "p"};
    so.ppp.mppe = ppp::MppePolicy::Offer;
    so.session_timeout = std::chrono::milliseconds(6000);
    so.stop_on_plaintext = false;
    crypto::SeededRng server_rng(21);
    probe::PptpProbeServer server(so, server_rng);
    server.bind();

    probe::PptpRelayOptions ro;
    ro.upstream_control_port = server.control_port();
    ro.upstream_data_port = server.data_port();
    ro.session_timeout = std::chrono::milliseconds(4000);
    probe::PptpMitmRelay relay(ro);
    relay.bind();

    probe::PptpSessionResult server_result;
    probe::PptpRelayResult relay_result;
    std::thread server_thread([&] { server_result = server.serve_one(); });
    std::thread relay_thread([&] { relay_result = relay.serve_one(); });

    sim::PptpClientOptions co;
    co.control_port = relay.control_port();
    co.data_port = relay.data_port();
    co.ppp.credentials = {"u", "p"};
    co.ppp.require_encryption = true;
    co.ppp.marker = marker;
    co.timeout = std::chrono::milliseconds(4000);
    crypto::SeededRng client_rng(22);
    auto client_result = sim::run_pptp_client(co, client_rng);

    relay_thread.join();
    server_thread.join();

    CHECK(client_result.outcome == sim::PppClientOutcome::AbortedEncryptionRefused);
    CHECK(relay_result.downgrade_injected);
    CHECK(relay_result.plaintext_udp_payloads.empty());
    CHECK(relay_result.finding.verdict.level == VerdictLevel::Secure);
}
