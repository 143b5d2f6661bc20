#include "vpnprobe/probe/ikev1.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <utility>

#include "vpnprobe/crypto/dh.hpp"
#include "vpnprobe/wire/esp.hpp"
#include "vpnprobe/wire/l2tp.hpp"

namespace vpnprobe::probe {
namespace {

using Clock = std::chrono::steady_clock;

std::uint32_t spi_u32(ByteView spi) {
    if (spi.size() != 4) return 0;
    return static_cast<std::uint32_t>(spi[0]) << 24 | static_cast<std::uint32_t>(spi[1]) << 16 |
           static_cast<std::uint32_t>(spi[2]) << 8 | spi[3];
}

Bytes nonzero_spi4(crypto::Rng& rng) {
    Bytes spi = rng.bytes(4);
    if (spi_u32(spi) == 0) spi[3] = 1;
    return spi;
}

}  // namespace

Finding judge_known_psk(Ikev1Mode mode, const std::string& target, bool phase1_attempted,
                        const std::optional<PskCandidate>& matched,
                        std::optional<std::size_t> ev_match,
                        std::optional<std::size_t> ev_secondary) {
    const VulnClass cls =
        mode == Ikev1Mode::L2tp ? VulnClass::L2tpKnownPsk : VulnClass::CiscoKnownPsk;
    if (!phase1_attempted) {
        return make_finding(
            cls, target,
            verdict_inconclusive("client never attempted a pre-shared-key exchange"));
    }
    if (!matched) {
        return make_finding(cls, target,
                            verdict_inconclusive("no candidate pre-shared key matched the "
                                                 "client's authentication hash"));
    }
    if (!matched->is_public) {
        return make_finding(cls, target,
                            verdict_secure("control run: client authenticated with the "
                                           "operator-supplied private key, not a publicly "
                                           "known one"));
    }
    std::vector<std::size_t> ev;
    if (ev_match) ev.push_back(*ev_match);
    if (ev_secondary) ev.push_back(*ev_secondary);
    std::string note = "client authenticated the gateway with the publicly known pre-shared "
                       "key \"" +
                       matched->key + "\" (" + matched->label +
                       "), so anyone who looked it up can impersonate the gateway";
    if (ev_secondary) {
        note += mode == Ikev1Mode::L2tp
                    ? "; inner tunnel traffic was recovered through the impersonated gateway"
                    : "; the client then submitted its user credentials to the impersonated "
                      "gateway";
    }
    return make_finding(cls, target, verdict_vulnerable(std::move(ev), std::move(note)));
}

Ikev1ProbeServer::Ikev1ProbeServer(Ikev1ProbeOptions options, crypto::Rng& rng)
    : options_(std::move(options)), rng_(rng) {}

void Ikev1ProbeServer::bind() {
    socket_ = net::UdpSocket::bind(options_.listen_ip, options_.port);
}

Ikev1SessionResult Ikev1ProbeServer::serve_one() {
    Ikev1SessionResult r;
    r.transcript = Transcript(options_.target_label);
    const auto deadline = Clock::now() + options_.session_timeout;

    std::optional<std::size_t> ev_match, ev_secondary;

    // Phase-1 state.
    wire::Ikev1Phase1Material material;
    wire::Ikev1KeySet keys;
    wire::Ikev1Cipher cipher;
    crypto::DhKeyPair dh;
    std::array<std::uint8_t, 8> cky_i{}, cky_r{};
    std::uint16_t group = 0;
    bool have_sa = false, have_ke = false;

    // XAUTH state.
    std::uint32_t xauth_msgid = 0;
    bool xauth_status_sent = false;

    // Quick Mode / encrypted-payload state.
    std::uint32_t q_msgid = 0;
    Bytes ni_q, nr_q, client_spi, my_spi;
    wire::EspKeys esp_in, esp_out;
    std::uint32_t esp_send_seq = 0;
    bool have_esp = false;

    // Inner tunnel state.
    std::uint16_t peer_tid = 0, peer_sid = 0;
    std::uint16_t my_tid = static_cast<std::uint16_t>(1 + rng_.below(60000));
    std::uint16_t my_sid = static_cast<std::uint16_t>(1 + rng_.below(60000));
    std::uint16_t my_ns = 0, my_nr = 0;
    std::unique_ptr<ppp::PppServerEngine> engine;
    std::size_t harvested_ip = 0;

    bool done = false;
    std::string peer_ip;
    std::uint16_t peer_port = 0;

    auto send_ike = [&](const Bytes& msg) {
        return socket_.send_to(peer_ip, peer_port, wire::udpencap_wrap_ike(msg));
    };
    auto send_l2tp = [&](const Bytes& l2tp_pkt) {
        Bytes seg = wire::build_udp_segment(wire::kL2tpPort, wire::kL2tpPort, l2tp_pkt);
        return socket_.send_to(peer_ip, peer_port,
                               wire::esp_seal(esp_out, spi_u32(client_spi), ++esp_send_seq, seg,
                                              wire::kEspNextUdp, rng_));
    };
    auto send_zlb = [&]() {
        return send_l2tp(wire::encode_l2tp_control(peer_tid, 0, my_ns, my_nr, {}));
    };
    // Pull newly decrypted inner IP packets and any plaintext credentials out
    // of the link engine.
    auto harvest_inner = [&]() {
        if (!engine) return;
        const auto& plain = engine->plaintext_ip_frames();
        while (harvested_ip < plain.size()) {
            const Bytes& ip = plain[harvested_ip++];
            r.tunnel_ppp_ip_frames.push_back(ip);
            if (auto payload = wire::extract_udp_payload(ip)) {
                r.udp_payloads.push_back(*payload);
                if (!ev_secondary) {
                    ev_secondary = r.transcript.record(
                        Direction::ClientToProbe, "l2tp", true,
                        "datagram payload recovered from inner tunnel traffic", *payload);
                }
                if (options_.stop_on_marker) done = true;
            }
        }
        if (!r.inner_credentials && engine->plaintext_credentials_seen()) {
            r.inner_credentials = engine->plaintext_credentials_seen();
            if (!ev_secondary) ev_secondary = engine->ev_auth();
        }
    };

    while (!done && Clock::now() < deadline) {
        auto dgram = socket_.recv_from(net::Millis(200));
        if (!dgram) continue;
        peer_ip = dgram->ip;
        peer_port = dgram->port;

        const auto kind = wire::udpencap_classify(dgram->payload);
        if (kind == wire::UdpEncap::Invalid) continue;

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
                harvest_inner();
                continue;
            }

            auto mtype = wire::l2tp_message_type(*pkt);
            if (!mtype) {  // ZLB ack: sequence bookkeeping only
                continue;
            }
            my_nr = static_cast<std::uint16_t>(pkt->ns + 1);
            switch (*mtype) {
                case wire::kL2tpMsgSccrq: {
                    if (auto tid = wire::avp_as_u16(pkt->avps, wire::kAvpAssignedTunnelId)) {
                        peer_tid = *tid;
                    }
                    r.transcript.record(Direction::ClientToProbe, "l2tp", true,
                                        "tunnel setup requested inside the transport SA");
                    std::vector<wire::L2tpAvp> avps{
                        wire::avp_u16(wire::kAvpMessageType, wire::kL2tpMsgSccrp),
                        wire::avp_u16(wire::kAvpProtocolVersion, 0x0100),
                        wire::avp_u32(wire::kAvpFramingCap, 0x3),
                        wire::avp_string(wire::kAvpHostName, "gateway", false),
                        wire::avp_u16(wire::kAvpAssignedTunnelId, my_tid),
                    };
                    send_l2tp(wire::encode_l2tp_control(peer_tid, 0, my_ns, my_nr, avps));
                    ++my_ns;
                    break;
                }
                case wire::kL2tpMsgScccn:
                    send_zlb();
                    break;
                case wire::kL2tpMsgIcrq: {
                    if (auto sid = wire::avp_as_u16(pkt->avps, wire::kAvpAssignedSessionId)) {
                        peer_sid = *sid;
                    }
                    std::vector<wire::L2tpAvp> avps{
                        wire::avp_u16(wire::kAvpMessageType, wire::kL2tpMsgIcrp),
                        wire::avp_u16(wire::kAvpAssignedSessionId, my_sid),
                    };
                    send_l2tp(wire::encode_l2tp_control(peer_tid, peer_sid, my_ns, my_nr, avps));
                    ++my_ns;
                    break;
                }
                case wire::kL2tpMsgIccn: {
                    send_zlb();
                    r.l2tp_established = true;
                    r.transcript.record(Direction::Local, "l2tp", true,
                                        "tunnel session established; starting inner link");
                    engine = std::make_unique<ppp::PppServerEngine>(options_.ppp, rng_,
                                                                    r.transcript);
                    for (const auto& frame : engine->start()) {
                        send_l2tp(wire::encode_l2tp_data(peer_tid, peer_sid, frame));
                    }
                    break;
                }
                case wire::kL2tpMsgHello:
                    send_zlb();
                    break;
                case wire::kL2tpMsgStopccn:
                    send_zlb();
                    done = true;
                    break;
                default:
                    break;
            }
            continue;
        }

        auto msg = wire::decode_isakmp_message(wire::udpencap_ike_body(dgram->payload));
        if (!msg) continue;

        const bool encrypted = (msg->header.flags & wire::kIsakmpFlagEncryption) != 0;

        if (msg->header.exchange == wire::kIsakmpExchangeMainMode && !encrypted) {
            if (!have_sa) {
                auto sa = wire::find_v1_payload(msg->payloads, wire::kV1PayloadSa);
                if (!sa) continue;
                auto proposals = wire::decode_ikev1_sa_body(sa->body);
                if (!proposals) continue;
                auto sel = wire::select_p1_transform(*proposals,
                                                     options_.mode == Ikev1Mode::CiscoXauth);
                if (!sel) {
                    r.transcript.record(Direction::ClientToProbe, "isakmp", true,
                                        "no acceptable phase-1 proposal offered");
                    wire::IsakmpHeader hdr;
                    hdr.cky_i = msg->header.cky_i;
                    hdr.exchange = wire::kIsakmpExchangeInformational;
                    send_ike(wire::encode_isakmp_message(
                        hdr, {{wire::kV1PayloadNotify,
                               wire::ikev1_notify_body(wire::kV1ProtoIsakmp,
                                                       wire::kV1NotifyNoProposalChosen)}}));
                    done = true;
                    continue;
                }
                group = sel->second;
                cky_i = msg->header.cky_i;
                rng_.fill(cky_r);
                material.cky_i = Bytes(cky_i.begin(), cky_i.end());
                material.cky_r = Bytes(cky_r.begin(), cky_r.end());
                material.sai_b = sa->body;
                r.transcript.record(Direction::ClientToProbe, "isakmp", true,
                                    "phase-1 proposal accepted (AES-128, PSK authentication)");
                wire::IsakmpHeader hdr;
                hdr.cky_i = cky_i;
                hdr.cky_r = cky_r;
                hdr.exchange = wire::kIsakmpExchangeMainMode;
                Bytes sa_body = wire::encode_ikev1_sa_body(
                    {wire::standard_p1_proposal(group, options_.mode == Ikev1Mode::CiscoXauth)});
                send_ike(wire::encode_isakmp_message(hdr, {{wire::kV1PayloadSa, sa_body}}));
                have_sa = true;
                continue;
            }
            if (!have_ke) {
                auto ke = wire::find_v1_payload(msg->payloads, wire::kV1PayloadKe);
                auto nonce = wire::find_v1_payload(msg->payloads, wire::kV1PayloadNonce);
                if (!ke || !nonce) continue;
                dh = crypto::dh_generate(group, rng_);
                Bytes shared = crypto::dh_shared_secret(dh, ke->body);
                if (shared.empty()) {
                    r.transcript.record(Direction::ClientToProbe, "isakmp", true,
                                        "malformed key-exchange value");
                    continue;
                }
                material.g_xi = ke->body;
                material.g_xr = dh.public_key;
                material.shared = std::move(shared);
                material.ni = nonce->body;
                material.nr = rng_.bytes(32);
                r.transcript.record(Direction::ClientToProbe, "isakmp", true,
                                    "key exchange completed; awaiting identity message");
                wire::IsakmpHeader hdr;
                hdr.cky_i = cky_i;
                hdr.cky_r = cky_r;
                hdr.exchange = wire::kIsakmpExchangeMainMode;
                send_ike(wire::encode_isakmp_message(hdr, {{wire::kV1PayloadKe, material.g_xr},
                                                           {wire::kV1PayloadNonce, material.nr}}));
                have_ke = true;
                continue;
            }
            continue;
        }

        if (msg->header.exchange == wire::kIsakmpExchangeMainMode && encrypted &&
            msg->header.message_id == 0 && have_ke && !r.phase1_attempted) {
            r.phase1_attempted = true;
            std::vector<PskCandidate> candidates = options_.candidates;
            if (candidates.size() > options_.max_candidates) {
                candidates.resize(options_.max_candidates);
            }
            r.transcript.record(Direction::ClientToProbe, "isakmp", false,
                                "encrypted identity message received; trying " +
                                    std::to_string(candidates.size()) + " candidate keys");
            auto match = wire::ikev1_match_psk(msg->raw, material, candidates);
            if (!match) {
                r.transcript.record(Direction::Local, "isakmp", false,
                                    "no candidate pre-shared key matched the client's "
                                    "authentication hash");
                done = true;
                continue;
            }
            r.matched = match->candidate;
            keys = match->keys;
            Bytes key_bytes = to_bytes(match->candidate.key);
            ev_match = r.transcript.record(
                Direction::Local, "isakmp", true,
                "pre-shared key recovered by candidate matching: \"" + match->candidate.key +
                    "\" (" + match->candidate.label + ")",
                key_bytes);
            cipher = wire::Ikev1Cipher(keys.enc_key,
                                       wire::ikev1_phase1_iv(material.g_xi, material.g_xr));
            cipher.open(msg->raw);  // advance the chain past the client's message

            Bytes idir_b = wire::ikev1_id_body(wire::kV1IdIpv4, Bytes{127, 0, 0, 1});
            Bytes hash_r =
                wire::ikev1_hash_r(keys.skeyid, material.g_xi, material.g_xr, material.cky_i,
                                   material.cky_r, material.sai_b, idir_b);
            wire::IsakmpHeader hdr;
            hdr.cky_i = cky_i;
            hdr.cky_r = cky_r;
            hdr.exchange = wire::kIsakmpExchangeMainMode;
            send_ike(cipher.seal(wire::encode_isakmp_message(
                hdr, {{wire::kV1PayloadId, idir_b}, {wire::kV1PayloadHash, hash_r}})));
            r.phase1_completed = true;

            if (options_.mode == Ikev1Mode::CiscoXauth) {
                xauth_msgid = rng_.u32();
                if (xauth_msgid == 0) xauth_msgid = 1;
                wire::Ikev1ConfigPayload req;
                req.type = wire::kCfgRequest;
                req.attrs = {{wire::kXauthType, Bytes{0, 0}},
                             {wire::kXauthUserName, {}},
                             {wire::kXauthUserPassword, {}}};
                wire::IkePayloadChunk attr{wire::kV1PayloadAttr, wire::encode_ikev1_config(req)};
                Bytes hash = wire::ikev1_exchange_hash(keys.skeyid_a, xauth_msgid,
                                                       wire::encode_isakmp_chain({attr}));
                wire::IsakmpHeader thdr;
                thdr.cky_i = cky_i;
                thdr.cky_r = cky_r;
                thdr.exchange = wire::kIsakmpExchangeTransaction;
                thdr.message_id = xauth_msgid;
                send_ike(cipher.seal(wire::encode_isakmp_message(
                    thdr, {{wire::kV1PayloadHash, hash}, attr})));
                r.transcript.record(Direction::ProbeToClient, "xauth", false,
                                    "requested user credentials over the established channel");
            }
            continue;
        }

        if (!encrypted || !r.phase1_completed) continue;

        auto body = cipher.open(msg->raw);
        if (!body) continue;
        auto chunks = wire::parse_isakmp_payloads(msg->header.next_payload, *body, true);
        if (!chunks || chunks->empty() || (*chunks)[0].type != wire::kV1PayloadHash) continue;
        const Bytes& hash_in = (*chunks)[0].body;
        std::vector<wire::IkePayloadChunk> rest((*chunks).begin() + 1, (*chunks).end());

        if (msg->header.exchange == wire::kIsakmpExchangeTransaction &&
            msg->header.message_id == xauth_msgid && xauth_msgid != 0) {
            Bytes expected = wire::ikev1_exchange_hash(keys.skeyid_a, xauth_msgid,
                                                       wire::encode_isakmp_chain(rest));
            if (!ct_equal(hash_in, expected)) continue;
            auto attr = wire::find_v1_payload(rest, wire::kV1PayloadAttr);
            if (!attr) continue;
            auto cfg = wire::parse_ikev1_config(attr->body);
            if (!cfg) continue;
            if (cfg->type == wire::kCfgReply && !r.xauth_credentials) {
                const Bytes* user = wire::config_attr(*cfg, wire::kXauthUserName);
                const Bytes* pass = wire::config_attr(*cfg, wire::kXauthUserPassword);
                if (!user || !pass) continue;
                r.xauth_credentials =
                    Credentials{std::string(user->begin(), user->end()),
                                std::string(pass->begin(), pass->end())};
                Bytes raw = *user;
                raw.push_back(':');
                append(raw, *pass);
                ev_secondary = r.transcript.record(
                    Direction::ClientToProbe, "xauth", true,
                    "client submitted user credentials: " + r.xauth_credentials->username, raw);
                wire::Ikev1ConfigPayload set;
                set.type = wire::kCfgSet;
                set.attrs = {{wire::kXauthStatus, Bytes{0, 1}}};
                wire::IkePayloadChunk attr_out{wire::kV1PayloadAttr,
                                               wire::encode_ikev1_config(set)};
                Bytes hash = wire::ikev1_exchange_hash(keys.skeyid_a, xauth_msgid,
                                                       wire::encode_isakmp_chain({attr_out}));
                send_ike(cipher.seal(wire::encode_isakmp_message(
                    msg->header, {{wire::kV1PayloadHash, hash}, attr_out})));
                xauth_status_sent = true;
            } else if (cfg->type == wire::kCfgAck && xauth_status_sent) {
                r.transcript.record(Direction::ClientToProbe, "xauth", false,
                                    "client acknowledged the authentication result");
                done = true;
            }
            continue;
        }

        if (msg->header.exchange == wire::kIsakmpExchangeQuickMode) {
            if (q_msgid == 0 && !rest.empty()) {
                Bytes expected = wire::ikev1_exchange_hash(keys.skeyid_a, msg->header.message_id,
                                                           wire::encode_isakmp_chain(rest));
                if (!ct_equal(hash_in, expected)) continue;
                auto sa = wire::find_v1_payload(rest, wire::kV1PayloadSa);
                auto nonce = wire::find_v1_payload(rest, wire::kV1PayloadNonce);
                if (!sa || !nonce) continue;
                auto proposals = wire::decode_ikev1_sa_body(sa->body);
                if (!proposals || proposals->empty()) continue;
                const auto& prop = (*proposals)[0];
                if (!wire::esp_transport_transform_ok(prop) || prop.spi.size() != 4) continue;
                client_spi = prop.spi;
                ni_q = nonce->body;
                q_msgid = msg->header.message_id;
                my_spi = nonzero_spi4(rng_);
                nr_q = rng_.bytes(16);
                r.transcript.record(Direction::ClientToProbe, "isakmp", false,
                                    "transport-SA negotiation started for the inner tunnel");
                wire::IkePayloadChunk sa_out{
                    wire::kV1PayloadSa,
                    wire::encode_ikev1_sa_body({wire::standard_esp_transport_proposal(my_spi)})};
                wire::IkePayloadChunk nonce_out{wire::kV1PayloadNonce, nr_q};
                Bytes hash2 =
                    wire::ikev1_quick_hash2(keys.skeyid_a, q_msgid, ni_q,
                                            wire::encode_isakmp_chain({sa_out, nonce_out}));
                send_ike(cipher.seal(wire::encode_isakmp_message(
                    msg->header, {{wire::kV1PayloadHash, hash2}, sa_out, nonce_out})));
                continue;
            }
            if (msg->header.message_id == q_msgid && rest.empty() && !r.quick_completed) {
                Bytes expected = wire::ikev1_quick_hash3(keys.skeyid_a, q_msgid, ni_q, nr_q);
                if (!ct_equal(hash_in, expected)) continue;
                r.quick_completed = true;
                Bytes in_mat = wire::ikev1_keymat(keys.skeyid_d, wire::kV1ProtoEsp, my_spi, ni_q,
                                                  nr_q, 36);
                Bytes out_mat = wire::ikev1_keymat(keys.skeyid_d, wire::kV1ProtoEsp, client_spi,
                                                   ni_q, nr_q, 36);
                esp_in = {Bytes(in_mat.begin(), in_mat.begin() + 16),
                          Bytes(in_mat.begin() + 16, in_mat.end())};
                esp_out = {Bytes(out_mat.begin(), out_mat.begin() + 16),
                           Bytes(out_mat.begin() + 16, out_mat.end())};
                have_esp = true;
                r.transcript.record(Direction::Local, "isakmp", false,
                                    "transport SA established with keys derived from the "
                                    "matched pre-shared key");
                continue;
            }
            continue;
        }

        if (msg->header.exchange == wire::kIsakmpExchangeInformational) {
            for (const auto& chunk : rest) {
                if (chunk.type == wire::kV1PayloadDelete) {
                    r.transcript.record(Direction::ClientToProbe, "isakmp", false,
                                        "client deleted the security association");
                    done = true;
                }
            }
            continue;
        }
    }

    harvest_inner();
    r.finding = judge_known_psk(options_.mode, options_.target_label, r.phase1_attempted,
                                r.matched, ev_match, ev_secondary);
    return r;
}

}  // namespace vpnprobe::probe
