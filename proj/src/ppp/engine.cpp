#include "vpnprobe/ppp/engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "vpnprobe/auth/mschapv2.hpp"
#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::ppp {

namespace {

std::string proto_name(std::uint16_t proto) {
    switch (proto) {
        case wire::kProtoLcp: return "lcp";
        case wire::kProtoPap: return "pap";
        case wire::kProtoChap: return "chap";
        case wire::kProtoIpcp: return "ipcp";
        case wire::kProtoCcp: return "ccp";
        case wire::kProtoIpv4: return "ipv4";
        case wire::kProtoMppe: return "mppe";
        default: return "proto-" + to_hex(Bytes{static_cast<std::uint8_t>(proto >> 8),
                                                static_cast<std::uint8_t>(proto & 0xFF)});
    }
}

std::string code_name(std::uint8_t code) {
    switch (static_cast<wire::PppCode>(code)) {
        case wire::PppCode::ConfReq: return "conf-req";
        case wire::PppCode::ConfAck: return "conf-ack";
        case wire::PppCode::ConfNak: return "conf-nak";
        case wire::PppCode::ConfRej: return "conf-rej";
        case wire::PppCode::TermReq: return "term-req";
        case wire::PppCode::TermAck: return "term-ack";
        case wire::PppCode::CodeRej: return "code-rej";
        case wire::PppCode::ProtoRej: return "proto-rej";
        case wire::PppCode::EchoReq: return "echo-req";
        case wire::PppCode::EchoRep: return "echo-rep";
        case wire::PppCode::DiscardReq: return "discard-req";
    }
    return "code-" + std::to_string(code);
}

std::uint32_t mppe_bit_for(int bits) {
    switch (bits) {
        case 40: return wire::kMppeBit40;
        case 56: return wire::kMppeBit56;
        case 128: return wire::kMppeBit128;
        default: throw std::invalid_argument("unsupported mppe key length");
    }
}

constexpr auto kCode = [](wire::PppCode c) { return static_cast<std::uint8_t>(c); };

}  // namespace

std::string_view to_string(PppPhase p) {
    switch (p) {
        case PppPhase::LinkEstablish: return "link-establish";
        case PppPhase::Authentication: return "authentication";
        case PppPhase::Negotiation: return "negotiation";
        case PppPhase::DataExchange: return "data-exchange";
        case PppPhase::Terminated: return "terminated";
    }
    return "unknown";
}

PppServerEngine::PppServerEngine(PppServerConfig config, crypto::Rng& rng, Transcript& transcript)
    : config_(std::move(config)), rng_(rng), transcript_(transcript) {}

Bytes PppServerEngine::frame_control(std::uint16_t proto, std::uint8_t code, std::uint8_t id,
                                     ByteView data) {
    wire::ControlPacket pkt{code, id, Bytes(data.begin(), data.end())};
    Bytes raw = wire::encode_ppp_frame({proto, wire::encode_control(pkt)});
    transcript_.record(Direction::ProbeToClient, "ppp", false,
                       proto_name(proto) + " " + code_name(code) + " id=" + std::to_string(id),
                       raw);
    return raw;
}

std::vector<Bytes> PppServerEngine::start() {
    std::vector<Bytes> out;
    std::vector<wire::PppOption> opts;
    switch (config_.auth) {
        case AuthProto::None: break;
        case AuthProto::Pap: opts.push_back(wire::make_auth_option_pap()); break;
        case AuthProto::ChapMd5:
            opts.push_back(wire::make_auth_option_chap(wire::kChapAlgoMd5));
            break;
        case AuthProto::MsChapV2:
            opts.push_back(wire::make_auth_option_chap(wire::kChapAlgoMsChapV2));
            break;
    }
    opts.push_back({wire::kLcpOptMagic, rng_.bytes(4)});
    out.push_back(frame_control(wire::kProtoLcp, kCode(wire::PppCode::ConfReq), next_id_++,
                                wire::encode_options(opts)));
    return out;
}

std::vector<Bytes> PppServerEngine::on_frame(ByteView raw_frame) {
    if (phase_ == PppPhase::Terminated) {
        return {};
    }
    auto frame = wire::decode_ppp_frame(raw_frame);
    if (!frame) {
        transcript_.record(Direction::ClientToProbe, "ppp", false, "undecodable ppp frame",
                           Bytes(raw_frame.begin(), raw_frame.end()));
        return {};
    }
    const std::uint16_t proto = frame->protocol;
    if (proto == wire::kProtoIpv4 || proto == wire::kProtoMppe) {
        handle_data(proto, frame->payload);
        return {};
    }
    auto pkt = wire::decode_control(frame->payload);
    if (!pkt) {
        transcript_.record(Direction::ClientToProbe, "ppp", false,
                           "undecodable " + proto_name(proto) + " control packet",
                           Bytes(raw_frame.begin(), raw_frame.end()));
        return {};
    }
    transcript_.record(Direction::ClientToProbe, "ppp", false,
                       proto_name(proto) + " " + code_name(pkt->code) +
                           " id=" + std::to_string(pkt->id),
                       Bytes(raw_frame.begin(), raw_frame.end()));
    switch (proto) {
        case wire::kProtoLcp: return handle_lcp(*pkt);
        case wire::kProtoPap: return handle_pap(*pkt);
        case wire::kProtoChap: return handle_chap(*pkt);
        case wire::kProtoCcp: return handle_ccp(*pkt);
        case wire::kProtoIpcp: return handle_ipcp(*pkt);
        default: {
            // Unknown network-control protocol: reject it.
            Bytes body;
            put_u16(body, proto);
            append(body, frame->payload);
            return {frame_control(wire::kProtoLcp, kCode(wire::PppCode::ProtoRej), next_id_++,
                                  body)};
        }
    }
}

std::vector<Bytes> PppServerEngine::handle_lcp(const wire::ControlPacket& pkt) {
    std::vector<Bytes> out;
    switch (static_cast<wire::PppCode>(pkt.code)) {
        case wire::PppCode::ConfReq:
            out.push_back(
                frame_control(wire::kProtoLcp, kCode(wire::PppCode::ConfAck), pkt.id, pkt.data));
            lcp_client_acked_ = true;
            break;
        case wire::PppCode::ConfAck:
            lcp_server_acked_ = true;
            break;
        case wire::PppCode::ConfNak:
        case wire::PppCode::ConfRej:
            // The client refused our LCP options (most likely the auth
            // protocol).  Nothing sensible to fall back to here.
            transcript_.record(Direction::Local, "ppp", false,
                               "peer refused lcp options; terminating");
            out.push_back(frame_control(wire::kProtoLcp, kCode(wire::PppCode::TermReq), next_id_++,
                                        {}));
            phase_ = PppPhase::Terminated;
            return out;
        case wire::PppCode::EchoReq:
            out.push_back(
                frame_control(wire::kProtoLcp, kCode(wire::PppCode::EchoRep), pkt.id, pkt.data));
            return out;
        case wire::PppCode::TermReq:
            out.push_back(
                frame_control(wire::kProtoLcp, kCode(wire::PppCode::TermAck), pkt.id, {}));
            phase_ = PppPhase::Terminated;
            return out;
        case wire::PppCode::TermAck:
            phase_ = PppPhase::Terminated;
            return out;
        default:
            return out;
    }
    if (lcp_client_acked_ && lcp_server_acked_ && phase_ == PppPhase::LinkEstablish) {
        auto more = maybe_enter_authentication();
        out.insert(out.end(), more.begin(), more.end());
    }
    return out;
}

std::vector<Bytes> PppServerEngine::maybe_enter_authentication() {
    phase_ = PppPhase::Authentication;
    transcript_.record(Direction::Local, "ppp", false, "link established; entering authentication");
    switch (config_.auth) {
        case AuthProto::None:
            auth_succeeded_ = true;
            return enter_negotiation();
        case AuthProto::Pap:
            return {};  // wait for Authenticate-Request
        case AuthProto::ChapMd5:
        case AuthProto::MsChapV2: {
            chap_challenge_ = rng_.bytes(16);
            chap_id_ = next_id_++;
            Bytes body = wire::encode_chap_value({chap_challenge_, config_.name});
            return {frame_control(wire::kProtoChap, wire::kChapChallenge, chap_id_, body)};
        }
    }
    return {};
}

std::vector<Bytes> PppServerEngine::handle_pap(const wire::ControlPacket& pkt) {
    if (pkt.code != wire::kPapAuthReq || config_.auth != AuthProto::Pap) {
        return {};
    }
    auto req = wire::decode_pap_request(pkt.data);
    if (!req) {
        return {};
    }
    plaintext_credentials_ = Credentials{req->username, req->password};
    ev_auth_ = transcript_.record(Direction::ClientToProbe, "ppp", true,
                                  "pap authenticate-request username=" + req->username +
                                      " (password crossed the link in cleartext)");
    const bool ok = req->username == config_.credentials.username &&
                    req->password == config_.credentials.password;
    Bytes body;
    const std::string msg = ok ? "Welcome" : "Authentication failed";
    body.push_back(static_cast<std::uint8_t>(msg.size()));
    append(body, to_bytes(msg));
    std::vector<Bytes> out{frame_control(
        wire::kProtoPap, ok ? wire::kPapAuthAck : wire::kPapAuthNak, pkt.id, body)};
    if (ok) {
        auth_succeeded_ = true;
        auto more = enter_negotiation();
        out.insert(out.end(), more.begin(), more.end());
    }
    return out;
}

std::vector<Bytes> PppServerEngine::handle_chap(const wire::ControlPacket& pkt) {
    if (pkt.code != wire::kChapResponse || phase_ != PppPhase::Authentication) {
        return {};
    }
    if (pkt.id != chap_id_) {
        transcript_.record(Direction::Local, "ppp", false, "chap response with stale id; ignored");
        return {};
    }
    auto cv = wire::decode_chap_value(pkt.data);
    if (!cv) {
        return {};
    }
    bool ok = false;
    std::string success_msg;
    if (config_.auth == AuthProto::ChapMd5) {
        ok = cv->value.size() == 16 &&
             ct_equal(cv->value,
                      auth::chap_md5_response(pkt.id, config_.credentials.password,
                                              chap_challenge_)) &&
             cv->name == config_.credentials.username;
        success_msg = "Welcome";
    } else if (config_.auth == AuthProto::MsChapV2) {
        auto resp = wire::decode_mschapv2_response(cv->value);
        if (resp && cv->name == config_.credentials.username) {
            ok = auth::verify_nt_response(chap_challenge_, resp->peer_challenge, cv->name,
                                          config_.credentials.password, resp->nt_response);
        }
        if (ok) {
            success_msg = auth::authenticator_response(config_.credentials.password,
                                                       resp->nt_response, resp->peer_challenge,
                                                       chap_challenge_, cv->name) +
                          " M=OK";
            keys_ = auth::derive_mppe_keys(config_.credentials.password, resp->nt_response,
                                           config_.mppe_bits, /*is_server=*/true);
            nt_response_ = Bytes(resp->nt_response.begin(), resp->nt_response.end());
        }
    } else {
        return {};
    }
    if (!ok) {
        ev_auth_ = transcript_.record(Direction::Local, "ppp", false,
                                      "chap authentication failed for name=" + cv->name);
        std::string fail = "E=691 R=0 C=" + to_hex(chap_challenge_) + " V=3 M=Authentication failed";
        return {frame_control(wire::kProtoChap, wire::kChapFailure, pkt.id, to_bytes(fail))};
    }
    auth_succeeded_ = true;
    ev_auth_ = transcript_.record(Direction::Local, "ppp", false,
                                  "chap authentication succeeded for name=" + cv->name);
    std::vector<Bytes> out{
        frame_control(wire::kProtoChap, wire::kChapSuccess, pkt.id, to_bytes(success_msg))};
    auto more = enter_negotiation();
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

std::vector<Bytes> PppServerEngine::enter_negotiation() {
    phase_ = PppPhase::Negotiation;
    transcript_.record(Direction::Local, "ppp", false,
                       "authentication done; negotiating network protocols");
    std::vector<Bytes> out;
    if (config_.mppe != MppePolicy::Reject && keys_) {
        const std::uint32_t field =
            (config_.stateless ? wire::kMppeBitStateless : 0) | mppe_bit_for(config_.mppe_bits);
        ccp_server_req_sent_ = true;
        out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfReq), next_id_++,
                                    wire::encode_options({wire::make_mppe_option(field)})));
    }
    ipcp_server_req_sent_ = true;
    out.push_back(frame_control(wire::kProtoIpcp, kCode(wire::PppCode::ConfReq), next_id_++,
                                wire::encode_options({wire::make_ip_option(config_.server_ip)})));
    return out;
}

std::vector<Bytes> PppServerEngine::handle_ccp(const wire::ControlPacket& pkt) {
    std::vector<Bytes> out;
    switch (static_cast<wire::PppCode>(pkt.code)) {
        case wire::PppCode::ConfReq: {
            auto opts = wire::decode_options(pkt.data);
            if (!opts) {
                return out;
            }
            const wire::PppOption* mppe = nullptr;
            for (const auto& o : *opts) {
                if (o.type == wire::kCcpOptMppe) {
                    mppe = &o;
                }
            }
            if (!mppe) {
                // Peer wants the link without encryption.
                if (config_.mppe == MppePolicy::Require) {
                    transcript_.record(Direction::Local, "ppp", false,
                                       "peer declined encryption; refusing cleartext link");
                    out.push_back(frame_control(wire::kProtoLcp, kCode(wire::PppCode::TermReq),
                                                next_id_++, {}));
                    phase_ = PppPhase::Terminated;
                } else {
                    out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfAck),
                                                pkt.id, pkt.data));
                    ccp_client_done_ = true;
                }
                return out;
            }
            if (config_.mppe == MppePolicy::Reject || !keys_) {
                ccp_mppe_rejected_ = true;
                ev_ccp_rejected_ = transcript_.record(
                    Direction::Local, "ppp", false,
                    "refusing the peer's link-encryption offer (conf-rej of mppe)");
                out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfRej), pkt.id,
                                            wire::encode_options({*mppe})));
                return out;
            }
            auto field = wire::mppe_bits_from_option(*mppe);
            const std::uint32_t desired = (config_.stateless ? wire::kMppeBitStateless : 0) |
                                          mppe_bit_for(config_.mppe_bits);
            if (field && *field == desired) {
                negotiated_mppe_field_ = *field;
                ccp_client_done_ = true;
                out.push_back(
                    frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfAck), pkt.id,
                                  pkt.data));
                if (ccp_client_done_ && (ccp_server_done_ || !ccp_server_req_sent_)) {
                    activate_mppe();
                }
            } else {
                out.push_back(frame_control(
                    wire::kProtoCcp, kCode(wire::PppCode::ConfNak), pkt.id,
                    wire::encode_options({wire::make_mppe_option(desired)})));
            }
            return out;
        }
        case wire::PppCode::ConfAck:
            ccp_server_done_ = true;
            if (ccp_client_done_ && !mppe_active()) {
                activate_mppe();
            }
            return out;
        case wire::PppCode::ConfRej:
        case wire::PppCode::ConfNak:
            // The peer refuses to receive encrypted data from us.
            transcript_.record(Direction::Local, "ppp", false,
                               "peer refused our link-encryption offer");
            if (config_.mppe == MppePolicy::Require) {
                out.push_back(
                    frame_control(wire::kProtoLcp, kCode(wire::PppCode::TermReq), next_id_++, {}));
                phase_ = PppPhase::Terminated;
            } else {
                ccp_server_req_sent_ = false;  // drop the offer; continue without
            }
            return out;
        default:
            return out;
    }
}

void PppServerEngine::activate_mppe() {
    if (!keys_ || mppe_active()) {
        return;
    }
    const bool stateless = (negotiated_mppe_field_ & wire::kMppeBitStateless) != 0;
    send_stream_ = std::make_unique<MppeStream>(keys_->send_start, keys_->bits, stateless);
    recv_stream_ = std::make_unique<MppeStream>(keys_->recv_start, keys_->bits, stateless);
    ev_mppe_active_ = transcript_.record(
        Direction::Local, "ppp", false,
        "link encryption active (" + std::to_string(keys_->bits) + "-bit, " +
            (stateless ? "stateless" : "stateful") + ")");
}

std::vector<Bytes> PppServerEngine::handle_ipcp(const wire::ControlPacket& pkt) {
    std::vector<Bytes> out;
    switch (static_cast<wire::PppCode>(pkt.code)) {
        case wire::PppCode::ConfReq: {
            auto opts = wire::decode_options(pkt.data);
            if (!opts) {
                return out;
            }
            const wire::PppOption* ip = nullptr;
            for (const auto& o : *opts) {
                if (o.type == wire::kIpcpOptAddress && o.data.size() == 4) {
                    ip = &o;
                }
            }
            const Bytes want(config_.client_ip.begin(), config_.client_ip.end());
            if (ip && ip->data != want) {
                out.push_back(frame_control(wire::kProtoIpcp, kCode(wire::PppCode::ConfNak),
                                            pkt.id,
                                            wire::encode_options(
                                                {wire::make_ip_option(config_.client_ip)})));
            } else {
                out.push_back(frame_control(wire::kProtoIpcp, kCode(wire::PppCode::ConfAck),
                                            pkt.id, pkt.data));
                ipcp_client_done_ = true;
            }
            break;
        }
        case wire::PppCode::ConfAck:
            ipcp_server_done_ = true;
            break;
        case wire::PppCode::ConfNak:
        case wire::PppCode::ConfRej:
            transcript_.record(Direction::Local, "ppp", false, "peer refused our address");
            break;
        default:
            break;
    }
    maybe_enter_data_exchange();
    return out;
}

void PppServerEngine::maybe_enter_data_exchange() {
    if (phase_ == PppPhase::Negotiation && ipcp_client_done_ && ipcp_server_done_) {
        phase_ = PppPhase::DataExchange;
        transcript_.record(Direction::Local, "ppp", false, "addresses agreed; data phase open");
    }
}

void PppServerEngine::handle_data(std::uint16_t proto, ByteView payload) {
    if (proto == wire::kProtoIpv4) {
        plaintext_ip_.emplace_back(payload.begin(), payload.end());
        const std::size_t idx = transcript_.record(
            Direction::ClientToProbe, "ppp", true,
            "cleartext ipv4 datagram in tunnel (" + std::to_string(payload.size()) + " bytes)",
            Bytes(payload.begin(), payload.end()));
        if (!ev_first_plaintext_ip_) {
            ev_first_plaintext_ip_ = idx;
        }
        return;
    }
    // proto == kProtoMppe
    if (!recv_stream_) {
        transcript_.record(Direction::ClientToProbe, "ppp", false,
                           "encrypted datagram but no key material was negotiated",
                           Bytes(payload.begin(), payload.end()));
        return;
    }
    auto dec = recv_stream_->decrypt_payload(payload);
    if (!dec) {
        transcript_.record(Direction::ClientToProbe, "ppp", false,
                           "mppe datagram failed integrity/coherency checks");
        return;
    }
    if (dec->inner_protocol == wire::kProtoIpv4) {
        decrypted_ip_.push_back(dec->data);
        transcript_.record(Direction::ClientToProbe, "ppp", false,
                           "encrypted ipv4 datagram (" + std::to_string(dec->data.size()) +
                               " bytes after decryption)",
                           dec->data);
    }
}

std::optional<Bytes> PppServerEngine::encrypt_ip_frame(ByteView ip_packet) {
    if (!send_stream_) {
        return std::nullopt;
    }
    Bytes payload = send_stream_->encrypt_payload(wire::kProtoIpv4, ip_packet);
    Bytes raw = wire::encode_ppp_frame({wire::kProtoMppe, payload});
    transcript_.record(Direction::ProbeToClient, "ppp", false, "encrypted ipv4 datagram sent",
                       raw);
    return raw;
}

}  // namespace vpnprobe::ppp
