#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"
#include "vpnprobe/crypto/rng.hpp"
#include "vpnprobe/ppp/mppe_stream.hpp"
#include "vpnprobe/wire/ppp.hpp"

namespace vpnprobe::ppp {

enum class PppPhase {
    LinkEstablish,
    Authentication,
    Negotiation,
    DataExchange,
    Terminated,
};

std::string_view to_string(PppPhase p);

enum class AuthProto { None, Pap, ChapMd5, MsChapV2 };

// What the fake server does when the peer wants (or refuses) link
// encryption.
enum class MppePolicy {
    Offer,    // negotiate MPPE normally
    Require,  // tear the link down if the peer won't encrypt
    Reject,   // refuse MPPE outright: the downgrade lever
};

struct PppServerConfig {
    AuthProto auth = AuthProto::MsChapV2;
    Credentials credentials;  // the account the fake server accepts
    MppePolicy mppe = MppePolicy::Offer;
    int mppe_bits = 128;
    bool stateless = true;
    std::array<std::uint8_t, 4> client_ip{10, 77, 0, 2};
    std::array<std::uint8_t, 4> server_ip{10, 77, 0, 1};
    std::string name = "probe";  // CHAP name
};

// Transport-agnostic server side of a PPP link: feed it raw PPP frames,
// collect raw PPP frames to send back.  Every state transition and data
// observation lands in the transcript.
class PppServerEngine {
public:
    PppServerEngine(PppServerConfig config, crypto::Rng& rng, Transcript& transcript);

    // Frames the server wants to send to open the conversation.
    std::vector<Bytes> start();
    // Handles one inbound frame; returns frames to send in response.
    std::vector<Bytes> on_frame(ByteView raw_frame);

    PppPhase phase() const { return phase_; }
    bool auth_succeeded() const { return auth_succeeded_; }
    // Challenge-response material from a successful authentication; empty
    // otherwise.  Needed by encapsulations that bind outer channels to the
    // inner auth (see the HTTPS tunnel's binding check).
    const Bytes& nt_response() const { return nt_response_; }
    const std::optional<Credentials>& plaintext_credentials_seen() const {
        return plaintext_credentials_;
    }
    bool mppe_active() const { return send_stream_ != nullptr; }
    bool ccp_mppe_rejected() const { return ccp_mppe_rejected_; }
    const std::vector<Bytes>& plaintext_ip_frames() const { return plaintext_ip_; }
    const std::vector<Bytes>& decrypted_ip_frames() const { return decrypted_ip_; }

    // Transcript indices of the load-bearing events, for verdict evidence.
    std::optional<std::size_t> ev_ccp_rejected() const { return ev_ccp_rejected_; }
    std::optional<std::size_t> ev_first_plaintext_ip() const { return ev_first_plaintext_ip_; }
    std::optional<std::size_t> ev_auth() const { return ev_auth_; }
    std::optional<std::size_t> ev_mppe_active() const { return ev_mppe_active_; }

    // Encrypt+frame an IP packet for the data phase (nullopt when MPPE off).
    std::optional<Bytes> encrypt_ip_frame(ByteView ip_packet);

private:
    std::vector<Bytes> handle_lcp(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_pap(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_chap(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_ccp(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_ipcp(const wire::ControlPacket& pkt);
    void handle_data(std::uint16_t proto, ByteView payload);

    std::vector<Bytes> maybe_enter_authentication();
    void maybe_enter_data_exchange();
    std::vector<Bytes> enter_negotiation();
    void activate_mppe();

    Bytes frame_control(std::uint16_t proto, std::uint8_t code, std::uint8_t id, ByteView data);

    PppServerConfig config_;
    crypto::Rng& rng_;
    Transcript& transcript_;

    PppPhase phase_ = PppPhase::LinkEstablish;
    std::uint8_t next_id_ = 1;

    bool lcp_client_acked_ = false;  // we acked the client's ConfReq
    bool lcp_server_acked_ = false;  // the client acked ours
    bool auth_succeeded_ = false;
    std::optional<Credentials> plaintext_credentials_;

    Bytes chap_challenge_;
    std::uint8_t chap_id_ = 0;
    Bytes nt_response_;

    bool ccp_client_done_ = false;
    bool ccp_server_done_ = false;
    bool ccp_server_req_sent_ = false;
    bool ccp_mppe_rejected_ = false;
    std::uint32_t negotiated_mppe_field_ = 0;

    bool ipcp_client_done_ = false;
    bool ipcp_server_done_ = false;
    bool ipcp_server_req_sent_ = false;

    std::optional<auth::MppeKeySet> keys_;
    std::unique_ptr<MppeStream> send_stream_;
    std::unique_ptr<MppeStream> recv_stream_;

    std::vector<Bytes> plaintext_ip_;
    std::vector<Bytes> decrypted_ip_;

    std::optional<std::size_t> ev_ccp_rejected_;
    std::optional<std::size_t> ev_first_plaintext_ip_;
    std::optional<std::size_t> ev_auth_;
    std::optional<std::size_t> ev_mppe_active_;
};

}  // namespace vpnprobe::ppp
