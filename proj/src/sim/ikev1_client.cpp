#include "vpnprobe/sim/ikev1_client.hpp"

#include <chrono>
#include <memory>
#include <optional>

#include "vpnprobe/crypto/dh.hpp"
#include "vpnprobe/net/socket.hpp"
#include "vpnprobe/wire/esp.hpp"
#include "vpnprobe/wire/l2tp.hpp"

namespace vpnprobe::sim {
namespace {

using Clock = std::chrono::steady_clock;

std::uint32_t spi_u32(ByteView spi) {
    if (spi.size() != 4) return 0;
    return static_cast<std::uint32_t>(spi[0]) << 24 | static_cast<std::uint32_t>(spi[1]) << 16 |
           static_cast<std::uint32_t>(spi[2]) << 8 | spi[3];
}

}  // namespace

Ikev1ClientResult run_ikev1_client(const Ikev1ClientOptions& options, crypto::Rng& rng) {
    Ikev1ClientResult r;
    r.transcript = Transcript("ikev1-gateway");
    auto socket = net::UdpSocket::bind_loopback();
    const auto deadline = Clock::now() + options.timeout;
    const bool xauth = options.mode == wire::Ikev1Mode::CiscoXauth;

    auto send_ike = [&](const Bytes& msg) {
        return socket.send_to(options.server_ip, options.port, wire::udpencap_wrap_ike(msg));
    };
    // Waits for the next key-exchange message from the gateway; flags an
    // unprotected authentication-failure notification.
    auto recv_ike = [&]() -> std::optional<wire::IsakmpMessage> {
        while (Clock::now() < deadline) {
            auto dgram = socket.recv_from(net::Millis(200));
            if (!dgram) continue;
            if (wire::udpencap_classify(dgram->payload) != wire::UdpEncap::Ike) continue;
            auto msg = wire::decode_isakmp_message(wire::udpencap_ike_body(dgram->payload));
            if (!msg) continue;
            if (msg->header.exchange == wire::kIsakmpExchangeInformational &&
                !(msg->header.flags & wire::kIsakmpFlagEncryption)) {
                auto notify = wire::find_v1_payload(msg->payloads, wire::kV1PayloadNotify);
                if (notify && notify->body.size() >= 8 &&
                    (static_cast<std::uint16_t>(notify->body[6]) << 8 | notify->body[7]) ==
                        wire::kV1NotifyAuthFailed) {
                    r.rejected_by_gateway = true;
                    r.transcript.record(Direction::ProbeToClient, "isakmp", true,
                                        "gateway reported an authentication failure");
                    return std::nullopt;
                }
                continue;
            }
            return msg;
        }
        return std::nullopt;
    };

    // --- Phase 1: Main Mode ----------------------------------------------
    std::array<std::uint8_t, 8> cky_i{}, cky_r{};
    rng.fill(cky_i);
    wire::IsakmpHeader hdr;
    hdr.cky_i = cky_i;
    hdr.exchange = wire::kIsakmpExchangeMainMode;

    Bytes sai_b =
        wire::encode_ikev1_sa_body({wire::standard_p1_proposal(
            static_cast<std::uint16_t>(options.dh_group), xauth)});
    send_ike(wire::encode_isakmp_message(hdr, {{wire::kV1PayloadSa, sai_b}}));
    r.transcript.record(Direction::ClientToProbe, "isakmp", true,
                        "proposed AES-128 with pre-shared-key authentication");

    auto m2 = recv_ike();
    if (!m2 || !wire::find_v1_payload(m2->payloads, wire::kV1PayloadSa)) return r;
    cky_r = m2->header.cky_r;
    hdr.cky_r = cky_r;

    auto dh = crypto::dh_generate(options.dh_group, rng);
    Bytes ni = rng.bytes(32);
    send_ike(wire::encode_isakmp_message(
        hdr, {{wire::kV1PayloadKe, dh.public_key}, {wire::kV1PayloadNonce, ni}}));

    auto m4 = recv_ike();
    if (!m4) return r;
    auto ke_r = wire::find_v1_payload(m4->payloads, wire::kV1PayloadKe);
    auto nonce_r = wire::find_v1_payload(m4->payloads, wire::kV1PayloadNonce);
    if (!ke_r || !nonce_r) return r;
    const Bytes& g_xr = ke_r->body;
    const Bytes& nr = nonce_r->body;
    Bytes shared = crypto::dh_shared_secret(dh, g_xr);
    if (shared.empty()) return r;

    Bytes skeyid = wire::ikev1_skeyid_psk(to_bytes(options.psk), ni, nr);
    auto keys = wire::ikev1_derive_keys(skeyid, shared,
                                        ByteView(cky_i.data(), cky_i.size()),
                                        ByteView(cky_r.data(), cky_r.size()));
    wire::Ikev1Cipher cipher(keys.enc_key, wire::ikev1_phase1_iv(dh.public_key, g_xr));

    Bytes idii_b = wire::ikev1_id_body(wire::kV1IdIpv4, Bytes{127, 0, 0, 1});
    Bytes hash_i = wire::ikev1_hash_i(skeyid, dh.public_key, g_xr,
                                      ByteView(cky_i.data(), cky_i.size()),
                                      ByteView(cky_r.data(), cky_r.size()), sai_b, idii_b);
    send_ike(cipher.seal(wire::encode_isakmp_message(
        hdr, {{wire::kV1PayloadId, idii_b}, {wire::kV1PayloadHash, hash_i}})));
    r.transcript.record(Direction::ClientToProbe, "isakmp", false,
                        "sent identity protected under the pre-shared key");

    auto m6 = recv_ike();
    if (!m6 || !(m6->header.flags & wire::kIsakmpFlagEncryption)) return r;
    auto body6 = cipher.open(m6->raw);
    if (!body6) return r;
    auto chunks6 = wire::parse_isakmp_payloads(m6->header.next_payload, *body6, true);
    if (!chunks6) return r;
    auto idr = wire::find_v1_payload(*chunks6, wire::kV1PayloadId);
    auto hash_r_in = wire::find_v1_payload(*chunks6, wire::kV1PayloadHash);
    if (!idr || !hash_r_in) return r;
    Bytes expected_hash_r = wire::ikev1_hash_r(skeyid, dh.public_key, g_xr,
                                               ByteView(cky_i.data(), cky_i.size()),
                                               ByteView(cky_r.data(), cky_r.size()), sai_b,
                                               idr->body);
    if (!ct_equal(hash_r_in->body, expected_hash_r)) {
        r.hash_mismatch = true;
        r.transcript.record(Direction::ProbeToClient, "isakmp", false,
                            "gateway identity hash did not verify; aborting");
        return r;
    }
    r.phase1_completed = true;
    r.transcript.record(Direction::Local, "isakmp", false,
                        "gateway authenticated via the shared key; channel established");

    // --- XAUTH user authentication (CiscoXauth mode) ----------------------
    std::uint32_t xauth_msgid = 0;
    // --- Quick Mode + inner tunnel (L2tp mode) -----------------------------
    std::uint32_t q_msgid = 0;
    Bytes ni_q, nr_q, my_spi, server_spi;
    wire::EspKeys esp_in, esp_out;
    std::uint32_t esp_send_seq = 0;
    bool have_esp = false;
    std::uint16_t my_tid = static_cast<std::uint16_t>(1 + rng.below(60000));
    std::uint16_t my_sid = static_cast<std::uint16_t>(1 + rng.below(60000));
    std::uint16_t peer_tid = 0, peer_sid = 0;
    std::uint16_t my_ns = 0, my_nr = 0;
    std::unique_ptr<PppClientEngine> engine;

    auto send_l2tp = [&](const Bytes& pkt) {
        Bytes seg = wire::build_udp_segment(wire::kL2tpPort, wire::kL2tpPort, pkt);
        return socket.send_to(options.server_ip, options.port,
                              wire::esp_seal(esp_out, spi_u32(server_spi), ++esp_send_seq, seg,
                                             wire::kEspNextUdp, rng));
    };

    if (xauth) {
        // The gateway drives the exchange; nothing to send until it asks.
    } else {
        q_msgid = rng.u32();
        if (q_msgid == 0) q_msgid = 1;
        my_spi = rng.bytes(4);
        if (spi_u32(my_spi) == 0) my_spi[3] = 1;
        ni_q = rng.bytes(16);
        wire::IkePayloadChunk sa_out{
            wire::kV1PayloadSa,
            wire::encode_ikev1_sa_body({wire::standard_esp_transport_proposal(my_spi)})};
        wire::IkePayloadChunk nonce_out{wire::kV1PayloadNonce, ni_q};
        Bytes hash1 = wire::ikev1_exchange_hash(keys.skeyid_a, q_msgid,
                                                wire::encode_isakmp_chain({sa_out, nonce_out}));
        wire::IsakmpHeader qhdr = hdr;
        qhdr.exchange = wire::kIsakmpExchangeQuickMode;
        qhdr.message_id = q_msgid;
        send_ike(cipher.seal(wire::encode_isakmp_message(
            qhdr, {{wire::kV1PayloadHash, hash1}, sa_out, nonce_out})));
    }

    bool done = false;
    while (!done && Clock::now() < deadline) {
        auto dgram = socket.recv_from(net::Millis(200));
        if (!dgram) continue;
        const auto kind = wire::udpencap_classify(dgram->payload);

        if (kind == wire::UdpEncap::Esp) {
            if (!have_esp) continue;
            auto esp = wire::esp_open(esp_in, dgram->payload);
            if (!esp || esp->spi != spi_u32(my_spi) || esp->next_header != wire::kEspNextUdp) {
                continue;
            }
            auto seg = wire::parse_udp_segment(esp->payload);
            if (!seg || seg->dst_port != wire::kL2tpPort) continue;
            auto pkt = wire::decode_l2tp(seg->payload);
            if (!pkt) continue;

            if (!pkt->control) {
                if (!engine) continue;
                for (const auto& reply : engine->on_frame(pkt->payload)) {
                    send_l2tp(wire::encode_l2tp_data(peer_tid, peer_sid, reply));
                }
            } else if (auto mtype = wire::l2tp_message_type(*pkt)) {
                my_nr = static_cast<std::uint16_t>(pkt->ns + 1);
                if (*mtype == wire::kL2tpMsgSccrp) {
                    if (auto tid = wire::avp_as_u16(pkt->avps, wire::kAvpAssignedTunnelId)) {
                        peer_tid = *tid;
                    }
                    send_l2tp(wire::encode_l2tp_control(
                        peer_tid, 0, my_ns, my_nr,
                        {wire::avp_u16(wire::kAvpMessageType, wire::kL2tpMsgScccn)}));
                    ++my_ns;
                    send_l2tp(wire::encode_l2tp_control(
                        peer_tid, 0, my_ns, my_nr,
                        {wire::avp_u16(wire::kAvpMessageType, wire::kL2tpMsgIcrq),
                         wire::avp_u16(wire::kAvpAssignedSessionId, my_sid),
                         wire::avp_u32(wire::kAvpCallSerial, 1)}));
                    ++my_ns;
                } else if (*mtype == wire::kL2tpMsgIcrp) {
                    if (auto sid = wire::avp_as_u16(pkt->avps, wire::kAvpAssignedSessionId)) {
                        peer_sid = *sid;
                    }
                    send_l2tp(wire::encode_l2tp_control(
                        peer_tid, peer_sid, my_ns, my_nr,
                        {wire::avp_u16(wire::kAvpMessageType, wire::kL2tpMsgIccn),
                         wire::avp_u32(wire::kAvpConnectSpeed, 100000000),
                         wire::avp_u32(wire::kAvpFramingType, 1)}));
                    ++my_ns;
                    r.l2tp_established = true;
                    r.transcript.record(Direction::Local, "l2tp", true,
                                        "tunnel session up; starting inner link");
                    engine = std::make_unique<PppClientEngine>(options.ppp, rng, r.transcript);
                    for (const auto& frame : engine->start()) {
                        send_l2tp(wire::encode_l2tp_data(peer_tid, peer_sid, frame));
                    }
                }
            }
            if (engine) {
                r.marker_sent = engine->marker_sent();
                r.ppp_outcome = engine->outcome();
                switch (engine->outcome()) {
                    case PppClientOutcome::InProgress:
                        break;
                    case PppClientOutcome::EstablishedEncrypted:
                    case PppClientOutcome::EstablishedPlaintext:
                        if (engine->marker_sent()) done = true;
                        break;
                    default:
                        done = true;
                        break;
                }
            }
            continue;
        }

        if (kind != wire::UdpEncap::Ike) continue;
        auto msg = wire::decode_isakmp_message(wire::udpencap_ike_body(dgram->payload));
        if (!msg || !(msg->header.flags & wire::kIsakmpFlagEncryption)) continue;
        auto body = cipher.open(msg->raw);
        if (!body) continue;
        auto chunks = wire::parse_isakmp_payloads(msg->header.next_payload, *body, true);
        if (!chunks || chunks->empty() || (*chunks)[0].type != wire::kV1PayloadHash) continue;
        const Bytes& hash_in = (*chunks)[0].body;
        std::vector<wire::IkePayloadChunk> rest(chunks->begin() + 1, chunks->end());

        if (xauth && msg->header.exchange == wire::kIsakmpExchangeTransaction) {
            if (xauth_msgid == 0) xauth_msgid = msg->header.message_id;
            if (msg->header.message_id != xauth_msgid) continue;
            Bytes expected = wire::ikev1_exchange_hash(keys.skeyid_a, xauth_msgid,
                                                       wire::encode_isakmp_chain(rest));
            if (!ct_equal(hash_in, expected)) continue;
            auto attr = wire::find_v1_payload(rest, wire::kV1PayloadAttr);
            if (!attr) continue;
            auto cfg = wire::parse_ikev1_config(attr->body);
            if (!cfg) continue;
            if (cfg->type == wire::kCfgRequest && !r.xauth_submitted) {
                wire::Ikev1ConfigPayload reply;
                reply.type = wire::kCfgReply;
                reply.identifier = cfg->identifier;
                reply.attrs = {
                    {wire::kXauthType, Bytes{0, 0}},
                    {wire::kXauthUserName, to_bytes(options.xauth_credentials.username)},
                    {wire::kXauthUserPassword, to_bytes(options.xauth_credentials.password)}};
                wire::IkePayloadChunk attr_out{wire::kV1PayloadAttr,
                                               wire::encode_ikev1_config(reply)};
                Bytes hash = wire::ikev1_exchange_hash(keys.skeyid_a, xauth_msgid,
                                                       wire::encode_isakmp_chain({attr_out}));
                send_ike(cipher.seal(wire::encode_isakmp_message(
                    msg->header, {{wire::kV1PayloadHash, hash}, attr_out})));
                r.xauth_submitted = true;
                r.transcript.record(Direction::ClientToProbe, "xauth", true,
                                    "submitted user credentials to the gateway");
            } else if (cfg->type == wire::kCfgSet) {
                const Bytes* status = wire::config_attr(*cfg, wire::kXauthStatus);
                if (status && status->size() == 2 && (*status)[0] == 0 && (*status)[1] == 1) {
                    r.xauth_status_ok = true;
                }
                wire::Ikev1ConfigPayload ack;
                ack.type = wire::kCfgAck;
                ack.identifier = cfg->identifier;
                wire::IkePayloadChunk attr_out{wire::kV1PayloadAttr,
                                               wire::encode_ikev1_config(ack)};
                Bytes hash = wire::ikev1_exchange_hash(keys.skeyid_a, xauth_msgid,
                                                       wire::encode_isakmp_chain({attr_out}));
                send_ike(cipher.seal(wire::encode_isakmp_message(
                    msg->header, {{wire::kV1PayloadHash, hash}, attr_out})));
                done = true;
            }
            continue;
        }

        if (!xauth && msg->header.exchange == wire::kIsakmpExchangeQuickMode &&
            msg->header.message_id == q_msgid && !r.quick_completed) {
            Bytes expected = wire::ikev1_quick_hash2(keys.skeyid_a, q_msgid, ni_q,
                                                     wire::encode_isakmp_chain(rest));
            if (!ct_equal(hash_in, expected)) continue;
            auto sa = wire::find_v1_payload(rest, wire::kV1PayloadSa);
            auto nonce = wire::find_v1_payload(rest, wire::kV1PayloadNonce);
            if (!sa || !nonce) continue;
            auto proposals = wire::decode_ikev1_sa_body(sa->body);
            if (!proposals || proposals->empty() || (*proposals)[0].spi.size() != 4) continue;
            server_spi = (*proposals)[0].spi;
            nr_q = nonce->body;
            Bytes hash3 = wire::ikev1_quick_hash3(keys.skeyid_a, q_msgid, ni_q, nr_q);
            send_ike(cipher.seal(wire::encode_isakmp_message(
                msg->header, {{wire::kV1PayloadHash, hash3}})));
            r.quick_completed = true;
            Bytes in_mat =
                wire::ikev1_keymat(keys.skeyid_d, wire::kV1ProtoEsp, my_spi, ni_q, nr_q, 36);
            Bytes out_mat =
                wire::ikev1_keymat(keys.skeyid_d, wire::kV1ProtoEsp, server_spi, ni_q, nr_q, 36);
            esp_in = {Bytes(in_mat.begin(), in_mat.begin() + 16),
                      Bytes(in_mat.begin() + 16, in_mat.end())};
            esp_out = {Bytes(out_mat.begin(), out_mat.begin() + 16),
                       Bytes(out_mat.begin() + 16, out_mat.end())};
            have_esp = true;
            r.transcript.record(Direction::Local, "isakmp", false,
                                "transport SA established; bringing up the tunnel");
            send_l2tp(wire::encode_l2tp_control(
                0, 0, my_ns, my_nr,
                {wire::avp_u16(wire::kAvpMessageType, wire::kL2tpMsgSccrq),
                 wire::avp_u16(wire::kAvpProtocolVersion, 0x0100),
                 wire::avp_u32(wire::kAvpFramingCap, 0x3),
                 wire::avp_string(wire::kAvpHostName, "client", false),
                 wire::avp_u16(wire::kAvpAssignedTunnelId, my_tid)}));
            ++my_ns;
            continue;
        }
    }

    if (engine) {
        r.marker_sent = engine->marker_sent();
        r.ppp_outcome = engine->outcome();
    }
    return r;
}

}  // namespace vpnprobe::sim
