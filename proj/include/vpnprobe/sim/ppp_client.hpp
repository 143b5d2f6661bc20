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

namespace vpnprobe::sim {

enum class PppClientOutcome {
    InProgress,
    EstablishedEncrypted,
    EstablishedPlaintext,
    AbortedEncryptionRefused,  // we required encryption and the peer refused
    AuthFailed,
    TerminatedByPeer,
    ProtocolError,
};

std::string_view to_string(PppClientOutcome o);

struct PppClientConfig {
    Credentials credentials;
    // request_encryption: offer link encryption at all.
    // require_encryption: tear the link down if the offer is refused —
    // false models the client behaviour under test, which silently keeps
    // going in cleartext.
    bool request_encryption = true;
    bool require_encryption = true;
    int mppe_bits = 128;
    bool stateless = true;
    bool verify_authenticator = true;  // check the server proof in CHAP Success
    Bytes marker;                      // datagram payload to push once the link is up
    std::uint16_t marker_src_port = 40000;
    std::uint16_t marker_dst_port = 40001;
};

// Deliberately independent of the server engine: its own state machine over
// the shared codecs, so the two sides can't accidentally agree by sharing
// logic.
class PppClientEngine {
public:
    PppClientEngine(PppClientConfig config, crypto::Rng& rng, Transcript& transcript);

    std::vector<Bytes> start();
    std::vector<Bytes> on_frame(ByteView raw_frame);

    PppClientOutcome outcome() const { return outcome_; }
    bool auth_succeeded() const { return auth_succeeded_; }
    const Bytes& nt_response() const { return nt_response_; }
    bool mppe_active() const { return send_stream_ != nullptr; }
    bool marker_sent() const { return marker_sent_; }
    bool marker_sent_encrypted() const { return marker_sent_encrypted_; }
    const std::vector<Bytes>& received_ip_frames() const { return received_ip_; }
    const std::optional<std::array<std::uint8_t, 4>>& assigned_ip() const { return assigned_ip_; }

private:
    std::vector<Bytes> handle_lcp(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_pap(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_chap(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_ccp(const wire::ControlPacket& pkt);
    std::vector<Bytes> handle_ipcp(const wire::ControlPacket& pkt);
    void handle_data(std::uint16_t proto, ByteView payload);

    std::vector<Bytes> after_link_up();
    std::vector<Bytes> after_auth_success();
    std::vector<Bytes> maybe_send_marker();
    void activate_mppe();
    Bytes terminate(PppClientOutcome why, const std::string& note);

    Bytes frame_control(std::uint16_t proto, std::uint8_t code, std::uint8_t id, ByteView data);

    PppClientConfig config_;
    crypto::Rng& rng_;
    Transcript& transcript_;

    PppClientOutcome outcome_ = PppClientOutcome::InProgress;
    std::uint8_t next_id_ = 1;

    bool lcp_local_done_ = false;
    bool lcp_peer_done_ = false;
    bool link_up_handled_ = false;
    bool auth_succeeded_ = false;

    // Learned from the server's LCP Configure-Request.
    std::optional<std::uint16_t> server_auth_proto_;
    std::uint8_t server_chap_algo_ = 0;

    Bytes chap_challenge_;
    Bytes peer_challenge_;
    Bytes nt_response_;
    std::string expected_authenticator_;

    std::optional<auth::MppeKeySet> keys_;
    bool ccp_local_done_ = false;
    bool ccp_peer_done_ = false;
    bool ccp_sent_ = false;
    bool ccp_rejected_by_server_ = false;
    std::uint32_t negotiated_mppe_field_ = 0;
    int ccp_nak_rounds_ = 0;

    bool ipcp_local_done_ = false;
    bool ipcp_peer_done_ = false;
    std::optional<std::array<std::uint8_t, 4>> assigned_ip_;
    std::array<std::uint8_t, 4> server_ip_{10, 77, 0, 1};

    std::unique_ptr<ppp::MppeStream> send_stream_;
    std::unique_ptr<ppp::MppeStream> recv_stream_;

    bool marker_sent_ = false;
    bool marker_sent_encrypted_ = false;
    std::vector<Bytes> received_ip_;
};

}  // namespace vpnprobe::sim
