#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/core/psk.hpp"
#include "vpnprobe/wire/ike.hpp"  // IkePayloadChunk is shared between versions

namespace vpnprobe::wire {

// Legacy IKE (ISAKMP) framing: Main Mode with pre-shared keys, Quick Mode
// for the IPsec transport SA, and the Transaction exchange used for
// XAUTH user authentication.  Everything after the fixed header of an
// encrypted message is one CBC blob keyed by material derived from the PSK
// — which is what makes candidate-key matching against a captured exchange
// possible in the first place.

inline constexpr std::uint8_t kIsakmpVersion = 0x10;

// Which service shape runs above the IPsec SA: a tunnel endpoint carrying
// layer-two frames + PPP, or an enterprise-style gateway with XAUTH user
// authentication after phase 1.
enum class Ikev1Mode { L2tp, CiscoXauth };

inline constexpr std::uint8_t kIsakmpExchangeMainMode = 2;  // identity protection
inline constexpr std::uint8_t kIsakmpExchangeInformational = 5;
inline constexpr std::uint8_t kIsakmpExchangeTransaction = 6;  // config mode / XAUTH
inline constexpr std::uint8_t kIsakmpExchangeQuickMode = 32;

inline constexpr std::uint8_t kIsakmpFlagEncryption = 0x01;

// Payload type identifiers (version 1 numbering).
inline constexpr std::uint8_t kV1PayloadSa = 1;
inline constexpr std::uint8_t kV1PayloadProposal = 2;
inline constexpr std::uint8_t kV1PayloadTransform = 3;
inline constexpr std::uint8_t kV1PayloadKe = 4;
inline constexpr std::uint8_t kV1PayloadId = 5;
inline constexpr std::uint8_t kV1PayloadCert = 6;
inline constexpr std::uint8_t kV1PayloadCertReq = 7;
inline constexpr std::uint8_t kV1PayloadHash = 8;
inline constexpr std::uint8_t kV1PayloadSig = 9;
inline constexpr std::uint8_t kV1PayloadNonce = 10;
inline constexpr std::uint8_t kV1PayloadNotify = 11;
inline constexpr std::uint8_t kV1PayloadDelete = 12;
inline constexpr std::uint8_t kV1PayloadVendor = 13;
inline constexpr std::uint8_t kV1PayloadAttr = 14;  // config mode attributes

// Phase 1 (ISAKMP SA) transform attributes.
inline constexpr std::uint16_t kP1AttrEncryption = 1;
inline constexpr std::uint16_t kP1AttrHash = 2;
inline constexpr std::uint16_t kP1AttrAuthMethod = 3;
inline constexpr std::uint16_t kP1AttrGroup = 4;
inline constexpr std::uint16_t kP1AttrLifeType = 11;
inline constexpr std::uint16_t kP1AttrLifeDuration = 12;
inline constexpr std::uint16_t kP1AttrKeyLength = 14;

inline constexpr std::uint32_t kP1EncrAesCbc = 7;
inline constexpr std::uint32_t kP1Encr3Des = 5;
inline constexpr std::uint32_t kP1HashSha1 = 2;
inline constexpr std::uint32_t kP1AuthPsk = 1;
inline constexpr std::uint32_t kP1AuthXauthInitPsk = 65001;

// Phase 2 (IPsec ESP) transform attributes.
inline constexpr std::uint16_t kP2AttrLifeType = 1;
inline constexpr std::uint16_t kP2AttrLifeDuration = 2;
inline constexpr std::uint16_t kP2AttrEncapMode = 4;
inline constexpr std::uint16_t kP2AttrAuthAlg = 5;
inline constexpr std::uint16_t kP2AttrKeyLength = 6;

inline constexpr std::uint32_t kP2EncapTransport = 2;
inline constexpr std::uint32_t kP2AuthHmacSha1 = 2;
inline constexpr std::uint8_t kP2TransformEspAes = 12;
inline constexpr std::uint8_t kV1ProtoIsakmp = 1;
inline constexpr std::uint8_t kV1ProtoEsp = 3;

inline constexpr std::uint8_t kV1TransformKeyIke = 1;

// ID payload types.
inline constexpr std::uint8_t kV1IdIpv4 = 1;
inline constexpr std::uint8_t kV1IdFqdn = 2;
inline constexpr std::uint8_t kV1IdUserFqdn = 3;
inline constexpr std::uint8_t kV1IdKeyId = 11;

// Notification types.
inline constexpr std::uint16_t kV1NotifyNoProposalChosen = 14;
inline constexpr std::uint16_t kV1NotifyAuthFailed = 24;

// Config-mode (Transaction exchange) message types and XAUTH attributes.
inline constexpr std::uint8_t kCfgRequest = 1;
inline constexpr std::uint8_t kCfgReply = 2;
inline constexpr std::uint8_t kCfgSet = 3;
inline constexpr std::uint8_t kCfgAck = 4;
inline constexpr std::uint16_t kXauthType = 16520;
inline constexpr std::uint16_t kXauthUserName = 16521;
inline constexpr std::uint16_t kXauthUserPassword = 16522;
inline constexpr std::uint16_t kXauthStatus = 16527;

struct IsakmpHeader {
    std::array<std::uint8_t, 8> cky_i{};
    std::array<std::uint8_t, 8> cky_r{};
    std::uint8_t next_payload = 0;
    std::uint8_t version = kIsakmpVersion;
    std::uint8_t exchange = 0;
    std::uint8_t flags = 0;
    std::uint32_t message_id = 0;
    std::uint32_t length = 0;  // filled by the encoder
};

struct IsakmpMessage {
    IsakmpHeader header;
    std::vector<IkePayloadChunk> payloads;  // empty when the encryption flag is set
    Bytes raw;
};

// Serializes header + payload chain; patches length.
Bytes encode_isakmp_message(IsakmpHeader header, const std::vector<IkePayloadChunk>& payloads);
// Serializes only a payload chain (used for the "rest of message" inputs of
// the hash computations).
Bytes encode_isakmp_chain(const std::vector<IkePayloadChunk>& payloads);
// Parses a full message.  Encrypted messages decode with empty `payloads`;
// decrypt the body first (Ikev1Cipher) to get at the chain.
std::optional<IsakmpMessage> decode_isakmp_message(ByteView raw);
// Parses a payload chain.  CBC padding after the final payload is tolerated
// when `tolerate_padding` (at most one block's worth).
std::optional<std::vector<IkePayloadChunk>> parse_isakmp_payloads(std::uint8_t first_type,
                                                                  ByteView body,
                                                                  bool tolerate_padding);
const IkePayloadChunk* find_v1_payload(const std::vector<IkePayloadChunk>& payloads,
                                       std::uint8_t type);

// --- SA payload --------------------------------------------------------------

struct Ikev1Transform {
    std::uint8_t number = 1;
    std::uint8_t id = 0;
    std::vector<std::pair<std::uint16_t, std::uint32_t>> attrs;
};
struct Ikev1Proposal {
    std::uint8_t number = 1;
    std::uint8_t protocol = kV1ProtoIsakmp;
    Bytes spi;
    std::vector<Ikev1Transform> transforms;
};

// Body includes DOI (IPsec) and situation words.
Bytes encode_ikev1_sa_body(const std::vector<Ikev1Proposal>& proposals);
std::optional<std::vector<Ikev1Proposal>> decode_ikev1_sa_body(ByteView body);

std::optional<std::uint32_t> transform_attr(const Ikev1Transform& t, std::uint16_t attr);
// Phase-1 proposal: AES-128-CBC / SHA-1 / group `group` / PSK (or the XAUTH
// pre-shared variant).
Ikev1Proposal standard_p1_proposal(std::uint16_t group, bool xauth);
// Finds a phase-1 transform compatible with what this harness implements and
// returns (transform, group).  Accepts groups 2 and 14.
std::optional<std::pair<Ikev1Transform, std::uint16_t>> select_p1_transform(
    const std::vector<Ikev1Proposal>& offered, bool allow_xauth);
// Phase-2 proposal: ESP AES-128 / HMAC-SHA1 / transport mode.
Ikev1Proposal standard_esp_transport_proposal(ByteView spi4);
bool esp_transport_transform_ok(const Ikev1Proposal& offered);

// --- Other payloads -----------------------------------------------------------

Bytes ikev1_id_body(std::uint8_t type, ByteView data, std::uint8_t protocol = 17,
                    std::uint16_t port = 500);
struct Ikev1Id {
    std::uint8_t type = 0;
    std::uint8_t protocol = 0;
    std::uint16_t port = 0;
    Bytes data;
};
std::optional<Ikev1Id> parse_ikev1_id(ByteView body);

Bytes ikev1_notify_body(std::uint8_t protocol, std::uint16_t type, ByteView data = {});

struct Ikev1ConfigPayload {
    std::uint8_t type = 0;
    std::uint16_t identifier = 0;
    std::vector<std::pair<std::uint16_t, Bytes>> attrs;
};
Bytes encode_ikev1_config(const Ikev1ConfigPayload& cfg);
std::optional<Ikev1ConfigPayload> parse_ikev1_config(ByteView body);
const Bytes* config_attr(const Ikev1ConfigPayload& cfg, std::uint16_t type);

// --- Key derivation (PSK authentication, HMAC-SHA1 PRF) -----------------------

struct Ikev1KeySet {
    Bytes skeyid;
    Bytes skeyid_d;
    Bytes skeyid_a;
    Bytes skeyid_e;
    Bytes enc_key;  // AES-128 key: leading bytes of skeyid_e
};

Bytes ikev1_skeyid_psk(ByteView psk, ByteView ni_b, ByteView nr_b);
Ikev1KeySet ikev1_derive_keys(ByteView skeyid, ByteView shared, ByteView cky_i, ByteView cky_r);
Bytes ikev1_hash_i(ByteView skeyid, ByteView g_xi, ByteView g_xr, ByteView cky_i, ByteView cky_r,
                   ByteView sai_b, ByteView idii_b);
Bytes ikev1_hash_r(ByteView skeyid, ByteView g_xi, ByteView g_xr, ByteView cky_i, ByteView cky_r,
                   ByteView sai_b, ByteView idir_b);
Bytes ikev1_phase1_iv(ByteView g_xi, ByteView g_xr);

// Hash payloads protecting Quick Mode and Transaction exchanges:
// prf(SKEYID_a, M-ID | <message bytes after the hash payload>), with the
// variants Quick Mode prescribes for its second and third messages.
Bytes ikev1_exchange_hash(ByteView skeyid_a, std::uint32_t message_id, ByteView after_hash);
Bytes ikev1_quick_hash2(ByteView skeyid_a, std::uint32_t message_id, ByteView ni_b,
                        ByteView after_hash);
Bytes ikev1_quick_hash3(ByteView skeyid_a, std::uint32_t message_id, ByteView ni_b, ByteView nr_b);

// Phase-2 key material for one SA direction (keyed by that direction's SPI):
// iterated prf(SKEYID_d, protocol | SPI | Ni_b | Nr_b).
Bytes ikev1_keymat(ByteView skeyid_d, std::uint8_t protocol, ByteView spi, ByteView ni_b,
                   ByteView nr_b, std::size_t len);

// --- Message encryption --------------------------------------------------------

// Stateless single-shot decrypt of an encrypted message body (candidate-key
// trials must not disturb the live chaining state).
std::optional<Bytes> ikev1_decrypt_body(ByteView key, ByteView iv, ByteView raw);

// CBC chaining state per RFC-style IV rules: phase 1 chains from
// hash(g^xi|g^xr); each other message id starts from
// hash(<last phase-1 block> | message id) and chains within the exchange.
// seal() takes a fully encoded plaintext message and returns the encrypted
// wire form; open() returns the decrypted payload-chain bytes (parse with
// parse_isakmp_payloads, padding tolerated).  Both advance the shared
// per-exchange chain.
class Ikev1Cipher {
public:
    Ikev1Cipher() = default;
    Ikev1Cipher(Bytes enc_key, Bytes phase1_iv);

    Bytes seal(ByteView plain_msg);
    std::optional<Bytes> open(ByteView raw);

private:
    Bytes& iv_for(const IsakmpHeader& header);

    Bytes key_;
    Bytes phase1_iv_;
    Bytes last_phase1_block_;
    std::map<std::uint32_t, Bytes> iv_;
};

// --- Candidate PSK matching -----------------------------------------------------

// Everything captured from an unauthenticated Main Mode run that is needed
// to test pre-shared key candidates offline.
struct Ikev1Phase1Material {
    Bytes cky_i, cky_r;
    Bytes sai_b;        // initiator's SA payload body
    Bytes g_xi, g_xr;   // public key-exchange values
    Bytes shared;       // g^xy
    Bytes ni, nr;       // nonce payload bodies
};

struct Ikev1PskMatch {
    PskCandidate candidate;
    Ikev1KeySet keys;
    Bytes idii_b;  // initiator's ID payload body from the decrypted message
    Bytes hash_i;  // the verified hash
};

// Tries each candidate against the captured fifth Main Mode message: derive
// the key set from the candidate, decrypt, and verify the initiator's hash.
// A candidate matches iff it equals the initiator's actual key (the hash is
// a PRF over the DH secret keyed by PSK-derived material).
std::optional<Ikev1PskMatch> ikev1_match_psk(ByteView m5_raw, const Ikev1Phase1Material& material,
                                             const std::vector<PskCandidate>& candidates);

}  // namespace vpnprobe::wire
