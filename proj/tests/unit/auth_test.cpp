#include <doctest.h>

#include "mschap_vectors.h"
#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/auth/mschapv2.hpp"
#include "vpnprobe/crypto/hash.hpp"

using namespace vpnprobe;
using namespace vpnprobe::auth;

namespace {

template <std::size_t N>
ByteView bv(const std::array<std::uint8_t, N>& a) {
    return ByteView(a.data(), a.size());
}

template <std::size_t N>
std::string hx(const std::array<std::uint8_t, N>& a) {
    return to_hex(bv(a));
}

}  // namespace

TEST_CASE("NT response matches frozen reference vectors") {
    for (const auto& v : testvec::kMsChapVectors) {
        CAPTURE(v.username);
        Bytes got = generate_nt_response(bv(v.auth_challenge), bv(v.peer_challenge), v.username,
                                         v.password);
        CHECK(to_hex(got) == hx(v.nt_response));
        CHECK(verify_nt_response(bv(v.auth_challenge), bv(v.peer_challenge), v.username,
                                 v.password, bv(v.nt_response)));
        CHECK(!verify_nt_response(bv(v.auth_challenge), bv(v.peer_challenge), v.username,
                                  v.password + "x", bv(v.nt_response)));
    }
}

TEST_CASE("authenticator response matches frozen reference vectors") {
    for (const auto& v : testvec::kMsChapVectors) {
        CAPTURE(v.username);
        std::string got = authenticator_response(v.password, bv(v.nt_response),
                                                 bv(v.peer_challenge), bv(v.auth_challenge),
                                                 v.username);
        CHECK(got == v.authenticator_response);
        CHECK(got.size() == 42);
    }
}

TEST_CASE("MPPE master and directional keys match frozen reference vectors") {
    for (const auto& v : testvec::kMsChapVectors) {
        CAPTURE(v.username);
        // The reference keys are stated from the tunnel server's perspective.
        for (int bits : {40, 56, 128}) {
            MppeKeySet keys = derive_mppe_keys(v.password, bv(v.nt_response), bits, true);
            CHECK(to_hex(keys.master) == hx(v.master_key));
            switch (bits) {
                case 40:
                    CHECK(to_hex(keys.send_start) == hx(v.send_start_40));
                    CHECK(to_hex(keys.recv_start) == hx(v.recv_start_40));
                    CHECK(to_hex(keys.send_session) == hx(v.send_session_40));
                    break;
                case 56:
                    CHECK(to_hex(keys.send_start) == hx(v.send_start_56));
                    CHECK(to_hex(keys.recv_start) == hx(v.recv_start_56));
                    CHECK(to_hex(keys.send_session) == hx(v.send_session_56));
                    break;
                case 128:
                    CHECK(to_hex(keys.send_start) == hx(v.send_start_128));
                    CHECK(to_hex(keys.recv_start) == hx(v.recv_start_128));
                    CHECK(to_hex(keys.send_session) == hx(v.send_session_128));
                    break;
            }
        }
    }
}

TEST_CASE("client and server MPPE keys mirror each other") {
    const auto& v = testvec::kMsChapVectors[0];
    MppeKeySet server = derive_mppe_keys(v.password, bv(v.nt_response), 128, true);
    MppeKeySet client = derive_mppe_keys(v.password, bv(v.nt_response), 128, false);
    CHECK(server.send_start == client.recv_start);
    CHECK(server.recv_start == client.send_start);
    CHECK(server.send_session == client.recv_session);
    CHECK(server.recv_session == client.send_session);
}

TEST_CASE("MPPE 40/56-bit session keys carry the reduction salt") {
    const auto& v = testvec::kMsChapVectors[1];
    MppeKeySet k40 = derive_mppe_keys(v.password, bv(v.nt_response), 40, false);
    CHECK(k40.send_session[0] == 0xD1);
    CHECK(k40.send_session[1] == 0x26);
    CHECK(k40.send_session[2] == 0x9E);
    MppeKeySet k56 = derive_mppe_keys(v.password, bv(v.nt_response), 56, false);
    CHECK(k56.send_session[0] == 0xD1);
    CHECK_THROWS(derive_mppe_keys(v.password, bv(v.nt_response), 64, false));
}

TEST_CASE("rekey differs from the initial session key and is deterministic") {
    const auto& v = testvec::kMsChapVectors[0];
    MppeKeySet keys = derive_mppe_keys(v.password, bv(v.nt_response), 128, true);
    Bytes next1 = mppe_session_key(keys.send_start, keys.send_session, 128, false);
    Bytes next2 = mppe_session_key(keys.send_start, keys.send_session, 128, false);
    CHECK(next1 == next2);
    CHECK(next1 != keys.send_session);
    CHECK(next1.size() == 16);
    // Without the RC4 self-mix this would be the plain SHA mix; they differ.
    Bytes plain_mix = get_new_key_from_sha(keys.send_start, keys.send_session, 16);
    CHECK(next1 != plain_mix);
}

TEST_CASE("higher-layer binding key is identical from both perspectives") {
    const auto& v = testvec::kMsChapVectors[0];
    Bytes hlak = sstp_hlak_from_mschap(v.password, bv(v.nt_response));
    REQUIRE(hlak.size() == 32);

    Bytes phh = hash_nt_password_hash(nt_password_hash(v.password));
    Bytes master = get_master_key(phh, bv(v.nt_response));
    // client view: receive || send
    Bytes client_view = get_asymmetric_start_key(master, 16, false, false);
    append(client_view, get_asymmetric_start_key(master, 16, true, false));
    // server view: send || receive
    Bytes server_view = get_asymmetric_start_key(master, 16, true, true);
    append(server_view, get_asymmetric_start_key(master, 16, false, true));
    CHECK(client_view == server_view);
    CHECK(hlak == client_view);
}

TEST_CASE("EAP key export layout") {
    const auto& v = testvec::kMsChapVectors[2];
    Bytes msk = eap_mschapv2_msk(v.password, bv(v.nt_response));
    REQUIRE(msk.size() == 64);
    for (std::size_t i = 32; i < 64; ++i) CHECK(msk[i] == 0);

    Bytes phh = hash_nt_password_hash(nt_password_hash(v.password));
    Bytes master = get_master_key(phh, bv(v.nt_response));
    Bytes client_send = get_asymmetric_start_key(master, 16, true, false);
    CHECK(Bytes(msk.begin(), msk.begin() + 16) == client_send);
}

TEST_CASE("CHAP-MD5 response") {
    Bytes challenge = from_hex("102030405060708090a0b0c0d0e0f000");
    Bytes got = chap_md5_response(0x01, "secret", challenge);
    Bytes input;
    input.push_back(0x01);
    append(input, std::string_view("secret"));
    append(input, challenge);
    CHECK(got == crypto::md5(input));
    CHECK(got.size() == 16);
}
