#include "vpnprobe/sim/ppp_client.hpp"

#include <algorithm>

#include "vpnprobe/auth/mschapv2.hpp"
#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::sim {

namespace {

constexpr auto kCode = [](wire::PppCode c) { return static_cast<std::uint8_t>(c); };

std::uint32_t mppe_bit_for(int bits) {
    switch (bits) {
        case 40: return wire::kMppeBit40;
        case 56: return wire::kMppeBit56;
        case 128: return wire::kMppeBit128;
        default: throw std::invalid_argument("unsupported mppe key length");
    }
}

std::optional<int> bits_from_field(std::uint32_t field) {
    const std::uint32_t strength = field & (wire::kMppeBit40 | wire::kMppeBit56 |
                                            wire::kMppeBit128);
    switch (strength) {
        case wire::kMppeBit40: return 40;
        case wire::kMppeBit56: return 56;
        case wire::kMppeBit128: return 128;
        default: return std::nullopt;  // zero or multiple strength bits
    }
}

}  // namespace

std::string_view to_string(PppClientOutcome o) {
    switch (o) {
        case PppClientOutcome::InProgress: return "in-progress";
        case PppClientOutcome::EstablishedEncrypted: return "established-encrypted";
        case PppClientOutcome::EstablishedPlaintext: return "established-plaintext";
        case PppClientOutcome::AbortedEncryptionRefused: return "aborted-encryption-refused";
        case PppClientOutcome::AuthFailed: return "auth-failed";
        case PppClientOutcome::TerminatedByPeer: return "terminated-by-peer";
        case PppClientOutcome::ProtocolError: return "protocol-error";
    }
    return "unknown";
}

PppClientEngine::PppClientEngine(PppClientConfig config, crypto::Rng& rng, Transcript& transcript)
    : config_(std::move(config)), rng_(rng), transcript_(transcript) {}

Bytes PppClientEngine::frame_control(std::uint16_t proto, std::uint8_t code, std::uint8_t id,
                                     ByteView data) {
    wire::ControlPacket pkt{code, id, Bytes(data.begin(), data.end())};
    Bytes raw = wire::encode_ppp_frame({proto, wire::encode_control(pkt)});
    transcript_.record(Direction::ClientToProbe, "ppp-client", false,
                       "sent proto=" + std::to_string(proto) + " code=" + std::to_string(code),
                       raw);
    return raw;
}

std::vector<Bytes> PppClientEngine::start() {
    std::vector<wire::PppOption> opts;
    opts.push_back({wire::kLcpOptMagic, rng_.bytes(4)});
    return {frame_control(wire::kProtoLcp, kCode(wire::PppCode::ConfReq), next_id_++,
                          wire::encode_options(opts))};
}

std::vector<Bytes> PppClientEngine::on_frame(ByteView raw_frame) {
    if (outcome_ != PppClientOutcome::InProgress &&
        outcome_ != PppClientOutcome::EstablishedEncrypted &&
        outcome_ != PppClientOutcome::EstablishedPlaintext) {
        return {};
    }
    auto frame = wire::decode_ppp_frame(raw_frame);
    if (!frame) {
        return {};
    }
    const std::uint16_t proto = frame->protocol;
    if (proto == wire::kProtoIpv4 || proto == wire::kProtoMppe) {
        handle_data(proto, frame->payload);
        return {};
    }
    auto pkt = wire::decode_control(frame->payload);
    if (!pkt) {
        return {};
    }
    switch (proto) {
        case wire::kProtoLcp: return handle_lcp(*pkt);
        case wire::kProtoPap: return handle_pap(*pkt);
        case wire::kProtoChap: return handle_chap(*pkt);
        case wire::kProtoCcp: return handle_ccp(*pkt);
        case wire::kProtoIpcp: return handle_ipcp(*pkt);
        default: return {};
    }
}

Bytes PppClientEngine::terminate(PppClientOutcome why, const std::string& note) {
    outcome_ = why;
    transcript_.record(Direction::Local, "ppp-client", false, note);
    return frame_control(wire::kProtoLcp, kCode(wire::PppCode::TermReq), next_id_++, {});
}

std::vector<Bytes> PppClientEngine::handle_lcp(const wire::ControlPacket& pkt) {
    std::vector<Bytes> out;
    switch (static_cast<wire::PppCode>(pkt.code)) {
        case wire::PppCode::ConfReq: {
            auto opts = wire::decode_options(pkt.data);
            if (!opts) {
                return out;
            }
            for (const auto& o : *opts) {
                if (o.type == wire::kLcpOptAuthProto && o.data.size() >= 2) {
                    server_auth_proto_ = static_cast<std::uint16_t>((o.data[0] << 8) | o.data[1]);
                    server_chap_algo_ = o.data.size() >= 3 ? o.data[2] : 0;
                }
            }
            out.push_back(
                frame_control(wire::kProtoLcp, kCode(wire::PppCode::ConfAck), pkt.id, pkt.data));
            lcp_peer_done_ = true;
            break;
        }
        case wire::PppCode::ConfAck:
            lcp_local_done_ = true;
            break;
        case wire::PppCode::EchoReq:
            out.push_back(
                frame_control(wire::kProtoLcp, kCode(wire::PppCode::EchoRep), pkt.id, pkt.data));
            return out;
        case wire::PppCode::TermReq:
            out.push_back(
                frame_control(wire::kProtoLcp, kCode(wire::PppCode::TermAck), pkt.id, {}));
            if (outcome_ == PppClientOutcome::InProgress) {
                outcome_ = PppClientOutcome::TerminatedByPeer;
            }
            return out;
        case wire::PppCode::TermAck:
            return out;
        default:
            return out;
    }
    if (lcp_local_done_ && lcp_peer_done_ && !link_up_handled_) {
        link_up_handled_ = true;
        auto more = after_link_up();
        out.insert(out.end(), more.begin(), more.end());
    }
    return out;
}

std::vector<Bytes> PppClientEngine::after_link_up() {
    if (!server_auth_proto_) {
        // No authentication requested; go straight to network negotiation.
        return after_auth_success();
    }
    if (*server_auth_proto_ == wire::kProtoPap) {
        transcript_.record(Direction::Local, "ppp-client", true,
                           "sending credentials with cleartext authentication");
        Bytes body = wire::encode_pap_request(
            {config_.credentials.username, config_.credentials.password});
        return {frame_control(wire::kProtoPap, wire::kPapAuthReq, next_id_++, body)};
    }
    // CHAP: wait for the server's challenge.
    return {};
}

std::vector<Bytes> PppClientEngine::handle_pap(const wire::ControlPacket& pkt) {
    if (pkt.code == wire::kPapAuthAck) {
        auth_succeeded_ = true;
        return after_auth_success();
    }
    if (pkt.code == wire::kPapAuthNak) {
        outcome_ = PppClientOutcome::AuthFailed;
        transcript_.record(Direction::Local, "ppp-client", false, "authentication rejected");
    }
    return {};
}

std::vector<Bytes> PppClientEngine::handle_chap(const wire::ControlPacket& pkt) {
    switch (pkt.code) {
        case wire::kChapChallenge: {
            auto cv = wire::decode_chap_value(pkt.data);
            if (!cv) {
                return {};
            }
            chap_challenge_ = cv->value;
            if (server_chap_algo_ == wire::kChapAlgoMd5) {
                Bytes resp = auth::chap_md5_response(pkt.id, config_.credentials.password,
                                                     chap_challenge_);
                Bytes body = wire::encode_chap_value({resp, config_.credentials.username});
                return {frame_control(wire::kProtoChap, wire::kChapResponse, pkt.id, body)};
            }
            // MS-CHAPv2
            peer_challenge_ = rng_.bytes(16);
            nt_response_ = auth::generate_nt_response(chap_challenge_, peer_challenge_,
                                                      config_.credentials.username,
                                                      config_.credentials.password);
            expected_authenticator_ = auth::authenticator_response(
                config_.credentials.password, nt_response_, peer_challenge_, chap_challenge_,
                config_.credentials.username);
            wire::MsChapV2Response resp;
            std::copy(peer_challenge_.begin(), peer_challenge_.end(),
                      resp.peer_challenge.begin());
            std::copy(nt_response_.begin(), nt_response_.end(), resp.nt_response.begin());
            Bytes body = wire::encode_chap_value(
                {wire::encode_mschapv2_response(resp), config_.credentials.username});
            return {frame_control(wire::kProtoChap, wire::kChapResponse, pkt.id, body)};
        }
        case wire::kChapSuccess: {
            if (server_chap_algo_ == wire::kChapAlgoMsChapV2) {
                const std::string msg(pkt.data.begin(), pkt.data.end());
                if (config_.verify_authenticator &&
                    msg.substr(0, expected_authenticator_.size()) != expected_authenticator_) {
                    return {terminate(PppClientOutcome::ProtocolError,
                                      "server authenticator proof mismatch; aborting")};
                }
                keys_ = auth::derive_mppe_keys(config_.credentials.password, nt_response_,
                                               config_.mppe_bits, /*is_server=*/false);
            }
            auth_succeeded_ = true;
            return after_auth_success();
        }
        case wire::kChapFailure:
            outcome_ = PppClientOutcome::AuthFailed;
            transcript_.record(Direction::Local, "ppp-client", false, "authentication rejected");
            return {};
        default:
            return {};
    }
}

std::vector<Bytes> PppClientEngine::after_auth_success() {
    std::vector<Bytes> out;
    if (config_.request_encryption && keys_) {
        const std::uint32_t field =
            (config_.stateless ? wire::kMppeBitStateless : 0) | mppe_bit_for(config_.mppe_bits);
        ccp_sent_ = true;
        out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfReq), next_id_++,
                                    wire::encode_options({wire::make_mppe_option(field)})));
    }
    out.push_back(frame_control(wire::kProtoIpcp, kCode(wire::PppCode::ConfReq), next_id_++,
                                wire::encode_options({wire::make_ip_option({0, 0, 0, 0})})));
    return out;
}

std::vector<Bytes> PppClientEngine::handle_ccp(const wire::ControlPacket& pkt) {
    std::vector<Bytes> out;
    switch (static_cast<wire::PppCode>(pkt.code)) {
        case wire::PppCode::ConfReq: {
            // The server offers to encrypt traffic it sends us.
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
                out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfAck),
                                            pkt.id, pkt.data));
                ccp_peer_done_ = true;
                return out;
            }
            if (!config_.request_encryption || !keys_) {
                out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfRej),
                                            pkt.id, wire::encode_options({*mppe})));
                return out;
            }
            auto field = wire::mppe_bits_from_option(*mppe);
            const std::uint32_t desired = (config_.stateless ? wire::kMppeBitStateless : 0) |
                                          mppe_bit_for(config_.mppe_bits);
            if (field && *field == desired) {
                negotiated_mppe_field_ = *field;
                ccp_peer_done_ = true;
                out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfAck),
                                            pkt.id, pkt.data));
                if (ccp_local_done_) {
                    activate_mppe();
                }
            } else {
                out.push_back(
                    frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfNak), pkt.id,
                                  wire::encode_options({wire::make_mppe_option(desired)})));
            }
            return out;
        }
        case wire::PppCode::ConfAck:
            ccp_local_done_ = true;
            negotiated_mppe_field_ = (config_.stateless ? wire::kMppeBitStateless : 0) |
                                     mppe_bit_for(config_.mppe_bits);
            if (ccp_peer_done_ || !keys_) {
                activate_mppe();
            }
            return out;
        case wire::PppCode::ConfNak: {
            if (++ccp_nak_rounds_ > 2) {
                out.push_back(terminate(PppClientOutcome::ProtocolError,
                                        "encryption negotiation did not converge"));
                return out;
            }
            auto opts = wire::decode_options(pkt.data);
            std::optional<std::uint32_t> suggested;
            if (opts) {
                for (const auto& o : *opts) {
                    if (o.type == wire::kCcpOptMppe) {
                        suggested = wire::mppe_bits_from_option(o);
                    }
                }
            }
            auto bits = suggested ? bits_from_field(*suggested) : std::nullopt;
            if (!bits) {
                out.push_back(terminate(PppClientOutcome::ProtocolError,
                                        "peer suggested unusable encryption parameters"));
                return out;
            }
            config_.mppe_bits = *bits;
            config_.stateless = (*suggested & wire::kMppeBitStateless) != 0;
            keys_ = auth::derive_mppe_keys(config_.credentials.password, nt_response_,
                                           config_.mppe_bits, /*is_server=*/false);
            out.push_back(frame_control(wire::kProtoCcp, kCode(wire::PppCode::ConfReq),
                                        next_id_++,
                                        wire::encode_options(
                                            {wire::make_mppe_option(*suggested)})));
            return out;
        }
        case wire::PppCode::ConfRej: {
            // The server refuses to let us encrypt.  This is the moment the
            // client under test decides between safety and connectivity.
            ccp_rejected_by_server_ = true;
            if (config_.require_encryption) {
                out.push_back(terminate(PppClientOutcome::AbortedEncryptionRefused,
                                        "peer refused link encryption; refusing to continue"));
            } else {
                transcript_.record(Direction::Local, "ppp-client", true,
                                   "peer refused link encryption; continuing in cleartext");
                keys_.reset();
                auto more = maybe_send_marker();
                out.insert(out.end(), more.begin(), more.end());
            }
            return out;
        }
        default:
            return out;
    }
}

void PppClientEngine::activate_mppe() {
    if (!keys_ || send_stream_) {
        return;
    }
    const bool stateless = (negotiated_mppe_field_ & wire::kMppeBitStateless) != 0;
    send_stream_ = std::make_unique<ppp::MppeStream>(keys_->send_start, keys_->bits, stateless);
    recv_stream_ = std::make_unique<ppp::MppeStream>(keys_->recv_start, keys_->bits, stateless);
    transcript_.record(Direction::Local, "ppp-client", false, "link encryption active");
}

std::vector<Bytes> PppClientEngine::handle_ipcp(const wire::ControlPacket& pkt) {
    std::vector<Bytes> out;
    switch (static_cast<wire::PppCode>(pkt.code)) {
        case wire::PppCode::ConfReq: {
            auto opts = wire::decode_options(pkt.data);
            if (!opts) {
                return out;
            }
            for (const auto& o : *opts) {
                if (o.type == wire::kIpcpOptAddress && o.data.size() == 4) {
                    std::copy(o.data.begin(), o.data.end(), server_ip_.begin());
                }
            }
            out.push_back(
                frame_control(wire::kProtoIpcp, kCode(wire::PppCode::ConfAck), pkt.id, pkt.data));
            ipcp_peer_done_ = true;
            break;
        }
        case wire::PppCode::ConfNak: {
            auto opts = wire::decode_options(pkt.data);
            if (!opts) {
                return out;
            }
            for (const auto& o : *opts) {
                if (o.type == wire::kIpcpOptAddress && o.data.size() == 4) {
                    std::array<std::uint8_t, 4> ip{};
                    std::copy(o.data.begin(), o.data.end(), ip.begin());
                    assigned_ip_ = ip;
                }
            }
            if (assigned_ip_) {
                out.push_back(frame_control(wire::kProtoIpcp, kCode(wire::PppCode::ConfReq),
                                            next_id_++,
                                            wire::encode_options(
                                                {wire::make_ip_option(*assigned_ip_)})));
            }
            return out;
        }
        case wire::PppCode::ConfAck:
            ipcp_local_done_ = true;
            if (!assigned_ip_) {
                assigned_ip_ = std::array<std::uint8_t, 4>{0, 0, 0, 0};
            }
            break;
        default:
            return out;
    }
    auto more = maybe_send_marker();
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

std::vector<Bytes> PppClientEngine::maybe_send_marker() {
    if (marker_sent_ || !ipcp_local_done_ || !ipcp_peer_done_) {
        return {};
    }
    // If we asked for encryption and the answer is still pending, wait.
    if (ccp_sent_ && !ccp_local_done_ && !ccp_rejected_by_server_) {
        return {};
    }
    marker_sent_ = true;
    Bytes ip = wire::build_ipv4_udp_packet(assigned_ip_.value_or(std::array<std::uint8_t, 4>{}),
                                           server_ip_, config_.marker_src_port,
                                           config_.marker_dst_port, config_.marker);
    std::vector<Bytes> out;
    if (mppe_active()) {
        marker_sent_encrypted_ = true;
        outcome_ = PppClientOutcome::EstablishedEncrypted;
        Bytes payload = send_stream_->encrypt_payload(wire::kProtoIpv4, ip);
        transcript_.record(Direction::ClientToProbe, "ppp-client", false,
                           "marker datagram sent through the encrypted link");
        out.push_back(wire::encode_ppp_frame({wire::kProtoMppe, payload}));
    } else {
        outcome_ = PppClientOutcome::EstablishedPlaintext;
        transcript_.record(Direction::ClientToProbe, "ppp-client", true,
                           "marker datagram sent in cleartext", ip);
        out.push_back(wire::encode_ppp_frame({wire::kProtoIpv4, ip}));
    }
    return out;
}

void PppClientEngine::handle_data(std::uint16_t proto, ByteView payload) {
    if (proto == wire::kProtoIpv4) {
        received_ip_.emplace_back(payload.begin(), payload.end());
        transcript_.record(Direction::ProbeToClient, "ppp-client", true,
                           "received cleartext ipv4 datagram",
                           Bytes(payload.begin(), payload.end()));
        return;
    }
    if (!recv_stream_) {
        return;
    }
    auto dec = recv_stream_->decrypt_payload(payload);
    if (dec && dec->inner_protocol == wire::kProtoIpv4) {
        received_ip_.push_back(dec->data);
        transcript_.record(Direction::ProbeToClient, "ppp-client", false,
                           "received encrypted ipv4 datagram");
    }
}

}  // namespace vpnprobe::sim
