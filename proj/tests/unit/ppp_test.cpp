#include <doctest.h>

#include <deque>

#include "mschap_vectors.h"
#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/ppp/engine.hpp"
#include "vpnprobe/ppp/mppe_stream.hpp"
#include "vpnprobe/sim/ppp_client.hpp"
#include "vpnprobe/wire/ppp.hpp"

using namespace vpnprobe;

namespace {

Bytes bv(ByteView v) { return Bytes(v.begin(), v.end()); }

// Shuttles frames between a client and a server engine until both go quiet.
struct Loopback {
    sim::PppClientEngine& client;
    ppp::PppServerEngine& server;

    void run() {
        std::deque<Bytes> to_server;
        std::deque<Bytes> to_client;
        for (const auto& f : client.start()) to_server.push_back(f);
        for (const auto& f : server.start()) to_client.push_back(f);
        int guard = 0;
        while (!to_server.empty() || !to_client.empty()) {
            REQUIRE(++guard < 500);
            if (!to_server.empty()) {
                Bytes f = to_server.front();
                to_server.pop_front();
                for (auto& r : server.on_frame(f)) to_client.push_back(std::move(r));
            }
            if (!to_client.empty()) {
                Bytes f = to_client.front();
                to_client.pop_front();
                for (auto& r : client.on_frame(f)) to_server.push_back(std::move(r));
            }
        }
    }
};

}  // namespace

TEST_CASE("ppp frame codec round trip and tolerances") {
    wire::PppFrame f{wire::kProtoLcp, {1, 2, 3}};
    Bytes raw = wire::encode_ppp_frame(f);
    REQUIRE(raw.size() == 7);
    CHECK(raw[0] == 0xFF);
    CHECK(raw[1] == 0x03);
    auto back = wire::decode_ppp_frame(raw);
    REQUIRE(back);
    CHECK(back->protocol == wire::kProtoLcp);
    CHECK(back->payload == f.payload);

    // Without the address/control prefix.
    Bytes bare(raw.begin() + 2, raw.end());
    auto b2 = wire::decode_ppp_frame(bare);
    REQUIRE(b2);
    CHECK(b2->protocol == wire::kProtoLcp);
    CHECK(b2->payload == f.payload);

    // Protocol-field-compressed IP frame (single odd byte 0x21).
    Bytes pfc{0x21, 0xAA, 0xBB};
    auto b3 = wire::decode_ppp_frame(pfc);
    REQUIRE(b3);
    CHECK(b3->protocol == wire::kProtoIpv4);
    CHECK(b3->payload == Bytes{0xAA, 0xBB});

    CHECK_FALSE(wire::decode_ppp_frame(Bytes{}));
    CHECK_FALSE(wire::decode_ppp_frame(Bytes{0xFF}));
}

TEST_CASE("ppp option and control codecs") {
    std::vector<wire::PppOption> opts{wire::make_auth_option_chap(wire::kChapAlgoMsChapV2),
                                      {wire::kLcpOptMagic, {0xDE, 0xAD, 0xBE, 0xEF}}};
    Bytes enc = wire::encode_options(opts);
    auto dec = wire::decode_options(enc);
    REQUIRE(dec);
    CHECK(*dec == opts);

    // Truncated option data is rejected.
    Bytes bad = enc;
    bad.back() = 0x00;
    bad[bad.size() - 5] = 9;  // length beyond the buffer
    CHECK_FALSE(wire::decode_options(bad));

    wire::ControlPacket pkt{static_cast<std::uint8_t>(wire::PppCode::ConfReq), 7, enc};
    Bytes traw = wire::encode_control(pkt);
    auto pback = wire::decode_control(traw);
    REQUIRE(pback);
    CHECK(pback->code == pkt.code);
    CHECK(pback->id == 7);
    CHECK(pback->data == enc);

    // Length field shorter than 4 or longer than the buffer is rejected.
    Bytes short_len = traw;
    short_len[3] = 1;
    CHECK_FALSE(wire::decode_control(short_len));
}

TEST_CASE("chap value, mschapv2 response and pap codecs") {
    Bytes challenge(16, 0xAB);
    Bytes body = wire::encode_chap_value({challenge, "probe"});
    auto cv = wire::decode_chap_value(body);
    REQUIRE(cv);
    CHECK(cv->value == challenge);
    CHECK(cv->name == "probe");

    wire::MsChapV2Response r;
    for (std::size_t i = 0; i < 16; ++i) r.peer_challenge[i] = static_cast<std::uint8_t>(i);
    for (std::size_t i = 0; i < 24; ++i) r.nt_response[i] = static_cast<std::uint8_t>(0x40 + i);
    Bytes v49 = wire::encode_mschapv2_response(r);
    REQUIRE(v49.size() == 49);
    auto rb = wire::decode_mschapv2_response(v49);
    REQUIRE(rb);
    CHECK(rb->peer_challenge == r.peer_challenge);
    CHECK(rb->nt_response == r.nt_response);
    CHECK(rb->flags == 0);
    CHECK_FALSE(wire::decode_mschapv2_response(Bytes(48, 0)));

    Bytes pap = wire::encode_pap_request({"user", "secret"});
    auto pr = wire::decode_pap_request(pap);
    REQUIRE(pr);
    CHECK(pr->username == "user");
    CHECK(pr->password == "secret");
}

TEST_CASE("ipv4/udp builder and extractor") {
    Bytes payload = to_bytes("marker-payload");
    Bytes pkt = wire::build_ipv4_udp_packet({10, 77, 0, 2}, {10, 77, 0, 1}, 40000, 40001, payload);
    REQUIRE(pkt.size() == 20 + 8 + payload.size());
    auto got = wire::extract_udp_payload(pkt);
    REQUIRE(got);
    CHECK(*got == payload);

    // Header checksum must validate: flipping a byte breaks extraction.
    Bytes bad = pkt;
    bad[12] ^= 0xFF;
    CHECK_FALSE(wire::extract_udp_payload(bad));
    CHECK_FALSE(wire::extract_udp_payload(Bytes(19, 0)));
}

TEST_CASE("mppe stream initial key matches the derivation vectors") {
    for (const auto& vec : testvec::kMsChapVectors) {
        auto keys = auth::derive_mppe_keys(vec.password, vec.nt_response, 128,
                                           /*is_server=*/true);
        ppp::MppeStream sender(keys.send_start, 128, /*stateless=*/true);
        CHECK(to_hex(sender.session_key()) == to_hex(bv(vec.send_session_128)));

        ppp::MppeStream s40(auth::derive_mppe_keys(vec.password, vec.nt_response, 40, true)
                                .send_start,
                            40, true);
        CHECK(to_hex(s40.session_key()) == to_hex(bv(vec.send_session_40)));
    }
}

TEST_CASE("mppe stream round trips") {
    const auto& vec = testvec::kMsChapVectors[0];
    auto skeys = auth::derive_mppe_keys(vec.password, vec.nt_response, 128, true);
    auto ckeys = auth::derive_mppe_keys(vec.password, vec.nt_response, 128, false);
    REQUIRE(to_hex(skeys.send_start) == to_hex(ckeys.recv_start));

    SUBCASE("stateless, in order, across a rekey-heavy span") {
        ppp::MppeStream tx(skeys.send_start, 128, true);
        ppp::MppeStream rx(ckeys.recv_start, 128, true);
        for (int i = 0; i < 300; ++i) {
            Bytes msg = to_bytes("pkt-" + std::to_string(i));
            Bytes wirebytes = tx.encrypt_payload(wire::kProtoIpv4, msg);
            auto dec = rx.decrypt_payload(wirebytes);
            REQUIRE(dec);
            CHECK(dec->inner_protocol == wire::kProtoIpv4);
            CHECK(dec->data == msg);
        }
    }

    SUBCASE("stateful, in order, across the 0xFF rekey boundary") {
        ppp::MppeStream tx(skeys.send_start, 128, false);
        ppp::MppeStream rx(ckeys.recv_start, 128, false);
        for (int i = 0; i < 600; ++i) {
            Bytes msg = to_bytes("s" + std::to_string(i));
            auto dec = rx.decrypt_payload(tx.encrypt_payload(wire::kProtoIpv4, msg));
            REQUIRE(dec);
            CHECK(dec->data == msg);
        }
    }

    SUBCASE("stateless receiver catches up after loss") {
        ppp::MppeStream tx(skeys.send_start, 128, true);
        ppp::MppeStream rx(ckeys.recv_start, 128, true);
        Bytes first = tx.encrypt_payload(wire::kProtoIpv4, to_bytes("a"));
        REQUIRE(rx.decrypt_payload(first));
        for (int i = 0; i < 5; ++i) {
            tx.encrypt_payload(wire::kProtoIpv4, to_bytes("lost"));
        }
        Bytes late = tx.encrypt_payload(wire::kProtoIpv4, to_bytes("survivor"));
        auto dec = rx.decrypt_payload(late);
        REQUIRE(dec);
        CHECK(dec->data == to_bytes("survivor"));
    }

    SUBCASE("wrap of the 12-bit coherency count") {
        ppp::MppeStream tx(skeys.send_start, 128, true);
        ppp::MppeStream rx(ckeys.recv_start, 128, true);
        for (int i = 0; i < 4100; ++i) {
            auto dec = rx.decrypt_payload(tx.encrypt_payload(wire::kProtoIpv4, to_bytes("w")));
            REQUIRE(dec);
        }
        CHECK(tx.next_count() < 4096);
    }

    SUBCASE("tampering and replay are rejected") {
        ppp::MppeStream tx(skeys.send_start, 128, true);
        ppp::MppeStream rx(ckeys.recv_start, 128, true);
        Bytes p1 = tx.encrypt_payload(wire::kProtoIpv4, to_bytes("one"));
        Bytes p2 = tx.encrypt_payload(wire::kProtoIpv4, to_bytes("two"));
        REQUIRE(rx.decrypt_payload(p1));
        REQUIRE(rx.decrypt_payload(p2));
        // Replaying an old count means stepping backwards: rejected.
        CHECK_FALSE(rx.decrypt_payload(p1));
        // A header without the encrypted bit is rejected.
        Bytes noenc = tx.encrypt_payload(wire::kProtoIpv4, to_bytes("three"));
        noenc[0] &= 0x0F;
        CHECK_FALSE(rx.decrypt_payload(noenc));
        // Garbled ciphertext no longer parses as a ppp frame.
        Bytes garbled = tx.encrypt_payload(wire::kProtoIpv4, to_bytes("four"));
        for (std::size_t i = 2; i < garbled.size(); ++i) garbled[i] ^= 0x5A;
        auto dec = rx.decrypt_payload(garbled);
        if (dec) {
            CHECK(dec->inner_protocol != wire::kProtoIpv4);
        }
        CHECK_FALSE(rx.decrypt_payload(Bytes{0x90}));
    }

    SUBCASE("stateful gap without a flush flag is rejected") {
        ppp::MppeStream tx(skeys.send_start, 128, false);
        ppp::MppeStream rx(ckeys.recv_start, 128, false);
        REQUIRE(rx.decrypt_payload(tx.encrypt_payload(wire::kProtoIpv4, to_bytes("a"))));
        tx.encrypt_payload(wire::kProtoIpv4, to_bytes("lost"));
        Bytes gap = tx.encrypt_payload(wire::kProtoIpv4, to_bytes("after-gap"));
        CHECK_FALSE(rx.decrypt_payload(gap));
    }
}

TEST_CASE("ppp loopback: encrypted link end to end") {
    crypto::SeededRng rng_c(101), rng_s(202);
    Transcript tc("client"), ts("server");
    Bytes marker = to_bytes(std::string(64, 'M'));

    sim::PppClientConfig cc;
    cc.credentials = {"alice.probe", "correct horse"};
    cc.marker = marker;
    sim::PppClientEngine client(cc, rng_c, tc);

    ppp::PppServerConfig sc;
    sc.credentials = {"alice.probe", "correct horse"};
    sc.mppe = ppp::MppePolicy::Offer;
    ppp::PppServerEngine server(sc, rng_s, ts);

    Loopback{client, server}.run();

    CHECK(server.auth_succeeded());
    CHECK(server.mppe_active());
    CHECK(client.outcome() == sim::PppClientOutcome::EstablishedEncrypted);
    CHECK(server.phase() == ppp::PppPhase::DataExchange);
    CHECK(server.plaintext_ip_frames().empty());
    REQUIRE(server.decrypted_ip_frames().size() == 1);
    auto payload = wire::extract_udp_payload(server.decrypted_ip_frames()[0]);
    REQUIRE(payload);
    CHECK(*payload == marker);

    // Server -> client direction works too.
    Bytes reply = wire::build_ipv4_udp_packet({10, 77, 0, 1}, {10, 77, 0, 2}, 40001, 40000,
                                              to_bytes("pong"));
    auto enc = server.encrypt_ip_frame(reply);
    REQUIRE(enc);
    client.on_frame(*enc);
    REQUIRE(client.received_ip_frames().size() == 1);
    CHECK(wire::extract_udp_payload(client.received_ip_frames()[0]) == Bytes(to_bytes("pong")));
}

TEST_CASE("ppp loopback: server rejects encryption") {
    Bytes marker = to_bytes(std::string(64, 'X'));

    SUBCASE("lenient client keeps going in cleartext") {
        crypto::SeededRng rng_c(1), rng_s(2);
        Transcript tc("client"), ts("server");
        sim::PppClientConfig cc;
        cc.credentials = {"u", "p"};
        cc.require_encryption = false;
        cc.marker = marker;
        sim::PppClientEngine client(cc, rng_c, tc);

        ppp::PppServerConfig sc;
        sc.credentials = {"u", "p"};
        sc.mppe = ppp::MppePolicy::Reject;
        ppp::PppServerEngine server(sc, rng_s, ts);

        Loopback{client, server}.run();

        CHECK(server.ccp_mppe_rejected());
        REQUIRE(server.ev_ccp_rejected());
        CHECK(client.outcome() == sim::PppClientOutcome::EstablishedPlaintext);
        CHECK_FALSE(client.mppe_active());
        REQUIRE(server.ev_first_plaintext_ip());
        REQUIRE(server.plaintext_ip_frames().size() == 1);
        auto payload = wire::extract_udp_payload(server.plaintext_ip_frames()[0]);
        REQUIRE(payload);
        CHECK(*payload == marker);
        // Evidence indices point at real transcript events.
        const auto& evs = ts.events();
        CHECK(*server.ev_ccp_rejected() < evs.size());
        CHECK(evs[*server.ev_first_plaintext_ip()].plaintext);
    }

    SUBCASE("strict client aborts instead") {
        crypto::SeededRng rng_c(3), rng_s(4);
        Transcript tc("client"), ts("server");
        sim::PppClientConfig cc;
        cc.credentials = {"u", "p"};
        cc.require_encryption = true;
        cc.marker = marker;
        sim::PppClientEngine client(cc, rng_c, tc);

        ppp::PppServerConfig sc;
        sc.credentials = {"u", "p"};
        sc.mppe = ppp::MppePolicy::Reject;
        ppp::PppServerEngine server(sc, rng_s, ts);

        Loopback{client, server}.run();

        CHECK(client.outcome() == sim::PppClientOutcome::AbortedEncryptionRefused);
        CHECK(server.plaintext_ip_frames().empty());
        CHECK(server.decrypted_ip_frames().empty());
        CHECK_FALSE(client.marker_sent());
    }
}

TEST_CASE("ppp loopback: pap leaks credentials to the server") {
    crypto::SeededRng rng_c(11), rng_s(12);
    Transcript tc("client"), ts("server");
    sim::PppClientConfig cc;
    cc.credentials = {"leaky", "hunter2"};
    cc.marker = to_bytes("m");
    sim::PppClientEngine client(cc, rng_c, tc);

    ppp::PppServerConfig sc;
    sc.auth = ppp::AuthProto::Pap;
    sc.credentials = {"leaky", "hunter2"};
    ppp::PppServerEngine server(sc, rng_s, ts);

    Loopback{client, server}.run();

    CHECK(server.auth_succeeded());
    REQUIRE(server.plaintext_credentials_seen());
    CHECK(server.plaintext_credentials_seen()->username == "leaky");
    CHECK(server.plaintext_credentials_seen()->password == "hunter2");
    CHECK(client.outcome() == sim::PppClientOutcome::EstablishedPlaintext);
}

TEST_CASE("ppp loopback: wrong password fails cleanly") {
    crypto::SeededRng rng_c(21), rng_s(22);
    Transcript tc("client"), ts("server");
    sim::PppClientConfig cc;
    cc.credentials = {"alice.probe", "wrong"};
    sim::PppClientEngine client(cc, rng_c, tc);

    ppp::PppServerConfig sc;
    sc.credentials = {"alice.probe", "right"};
    ppp::PppServerEngine server(sc, rng_s, ts);

    Loopback{client, server}.run();

    CHECK_FALSE(server.auth_succeeded());
    CHECK(client.outcome() == sim::PppClientOutcome::AuthFailed);
}

TEST_CASE("ppp loopback: chap-md5 authenticates without keys") {
    crypto::SeededRng rng_c(31), rng_s(32);
    Transcript tc("client"), ts("server");
    sim::PppClientConfig cc;
    cc.credentials = {"md5user", "md5pass"};
    cc.marker = to_bytes("md5-marker");
    sim::PppClientEngine client(cc, rng_c, tc);

    ppp::PppServerConfig sc;
    sc.auth = ppp::AuthProto::ChapMd5;
    sc.credentials = {"md5user", "md5pass"};
    ppp::PppServerEngine server(sc, rng_s, ts);

    Loopback{client, server}.run();

    CHECK(server.auth_succeeded());
    CHECK_FALSE(server.plaintext_credentials_seen());
    CHECK_FALSE(server.mppe_active());
    CHECK(client.outcome() == sim::PppClientOutcome::EstablishedPlaintext);
    REQUIRE(server.plaintext_ip_frames().size() == 1);
}

TEST_CASE("ppp client rejects a forged authenticator proof") {
    // A handcrafted server that answers the CHAP response with a bogus S= line.
    crypto::SeededRng rng_c(41), rng_s(42);
    Transcript tc("client"), ts("server");
    sim::PppClientConfig cc;
    cc.credentials = {"alice", "pw"};
    sim::PppClientEngine client(cc, rng_c, tc);

    auto pump = [&](const std::vector<Bytes>& frames) {
        std::vector<Bytes> replies;
        for (const auto& f : frames) {
            auto r = client.on_frame(f);
            replies.insert(replies.end(), r.begin(), r.end());
        }
        return replies;
    };

    // LCP: ack the client's request and get ours acked.
    auto client_first = client.start();
    std::vector<wire::PppOption> opts{wire::make_auth_option_chap(wire::kChapAlgoMsChapV2),
                                      {wire::kLcpOptMagic, {1, 2, 3, 4}}};
    Bytes server_req = wire::encode_ppp_frame(
        {wire::kProtoLcp,
         wire::encode_control({static_cast<std::uint8_t>(wire::PppCode::ConfReq), 1,
                               wire::encode_options(opts)})});
    auto decoded = wire::decode_ppp_frame(client_first.at(0));
    REQUIRE(decoded);
    auto creq = wire::decode_control(decoded->payload);
    REQUIRE(creq);
    Bytes ack = wire::encode_ppp_frame(
        {wire::kProtoLcp,
         wire::encode_control(
             {static_cast<std::uint8_t>(wire::PppCode::ConfAck), creq->id, creq->data})});
    pump({server_req, ack});

    // Challenge, then a Success whose proof is garbage.
    Bytes challenge_body = wire::encode_chap_value({Bytes(16, 0x77), "probe"});
    auto responses = pump({wire::encode_ppp_frame(
        {wire::kProtoChap, wire::encode_control({wire::kChapChallenge, 9, challenge_body})})});
    REQUIRE(responses.size() == 1);

    std::string bogus = "S=0000000000000000000000000000000000000000 M=OK";
    auto aborts = pump({wire::encode_ppp_frame(
        {wire::kProtoChap, wire::encode_control({wire::kChapSuccess, 9, to_bytes(bogus)})})});
    CHECK(client.outcome() == sim::PppClientOutcome::ProtocolError);
    REQUIRE(!aborts.empty());
}
