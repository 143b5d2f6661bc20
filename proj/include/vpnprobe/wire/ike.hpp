#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/crypto/rng.hpp"

namespace vpnprobe::wire {

// IKEv2 message framing and the payload subset the harness speaks:
// SA/KE/Nonce for the initial exchange, SK-encrypted ID/CERT/AUTH/EAP/TS
// for authentication, Notify/Delete for errors.

inline constexpr std::uint8_t kIkeV2Version = 0x20;

inline constexpr std::uint8_t kIkeExchangeSaInit = 34;
inline constexpr std::uint8_t kIkeExchangeAuth = 35;
inline constexpr std::uint8_t kIkeExchangeCreateChildSa = 36;
inline constexpr std::uint8_t kIkeExchangeInformational = 37;

inline constexpr std::uint8_t kIkeFlagInitiator = 0x08;
inline constexpr std::uint8_t kIkeFlagResponse = 0x20;

// Payload type identifiers.
inline constexpr std::uint8_t kPayloadNone = 0;
inline constexpr std::uint8_t kPayloadSa = 33;
inline constexpr std::uint8_t kPayloadKe = 34;
inline constexpr std::uint8_t kPayloadIdI = 35;
inline constexpr std::uint8_t kPayloadIdR = 36;
inline constexpr std::uint8_t kPayloadCert = 37;
inline constexpr std::uint8_t kPayloadCertReq = 38;
inline constexpr std::uint8_t kPayloadAuth = 39;
inline constexpr std::uint8_t kPayloadNonce = 40;
inline constexpr std::uint8_t kPayloadNotify = 41;
inline constexpr std::uint8_t kPayloadDelete = 42;
inline constexpr std::uint8_t kPayloadVendor = 43;
inline constexpr std::uint8_t kPayloadTsI = 44;
inline constexpr std::uint8_t kPayloadTsR = 45;
inline constexpr std::uint8_t kPayloadSk = 46;
inline constexpr std::uint8_t kPayloadCp = 47;
inline constexpr std::uint8_t kPayloadEap = 48;

// Transform types and the algorithm ids we negotiate.
inline constexpr std::uint8_t kXfEncr = 1;
inline constexpr std::uint8_t kXfPrf = 2;
inline constexpr std::uint8_t kXfInteg = 3;
inline constexpr std::uint8_t kXfDh = 4;
inline constexpr std::uint8_t kXfEsn = 5;

inline constexpr std::uint16_t kEncrAesCbc = 12;
inline constexpr std::uint16_t kPrfHmacSha256 = 5;
inline constexpr std::uint16_t kIntegHmacSha256_128 = 12;
inline constexpr std::uint16_t kIntegHmacSha1_96 = 2;
inline constexpr std::uint16_t kDhGroup14 = 14;
inline constexpr std::uint16_t kEsnNone = 0;

inline constexpr std::uint8_t kSaProtoIke = 1;
inline constexpr std::uint8_t kSaProtoEsp = 3;

inline constexpr std::uint8_t kIdFqdn = 2;
inline constexpr std::uint8_t kIdKeyId = 11;

inline constexpr std::uint8_t kCertX509Signature = 4;

inline constexpr std::uint8_t kAuthMethodSignature = 14;  // digital signature
inline constexpr std::uint8_t kAuthMethodPsk = 2;

inline constexpr std::uint16_t kNotifyAuthFailed = 24;

struct IkeHeader {
    std::array<std::uint8_t, 8> spi_i{};
    std::array<std::uint8_t, 8> spi_r{};
    std::uint8_t next_payload = kPayloadNone;
    std::uint8_t version = kIkeV2Version;
    std::uint8_t exchange = 0;
    std::uint8_t flags = 0;
    std::uint32_t message_id = 0;
    std::uint32_t length = 0;  // filled by the encoder
};

struct IkePayloadChunk {
    std::uint8_t type = 0;
    Bytes body;

    bool operator==(const IkePayloadChunk&) const = default;
};

Bytes encode_ike_message(IkeHeader header, const std::vector<IkePayloadChunk>& payloads);

struct IkeMessage {
    IkeHeader header;
    std::vector<IkePayloadChunk> payloads;
    Bytes raw;  // complete message bytes (needed for signed-octets)
};
std::optional<IkeMessage> decode_ike_message(ByteView raw);
const IkePayloadChunk* find_payload(const IkeMessage& msg, std::uint8_t type);

// --- SA payload ------------------------------------------------------------

struct IkeTransform {
    std::uint8_t type = 0;
    std::uint16_t id = 0;
    std::optional<std::uint16_t> keylen;  // attribute 14 (key length, bits)

    bool operator==(const IkeTransform&) const = default;
};

struct IkeProposal {
    std::uint8_t number = 1;
    std::uint8_t protocol = kSaProtoIke;
    Bytes spi;  // empty for the initial IKE SA, 4 bytes for ESP
    std::vector<IkeTransform> transforms;

    bool operator==(const IkeProposal&) const = default;
};

Bytes encode_sa_payload(const std::vector<IkeProposal>& proposals);
std::optional<std::vector<IkeProposal>> decode_sa_payload(ByteView body);
// First transform of the given type, if any.
std::optional<IkeTransform> proposal_transform(const IkeProposal& p, std::uint8_t type);

// The harness's fixed cipher suites.
IkeProposal standard_ike_proposal();                 // AES-CBC-128 / HMAC-SHA256 PRF+integ / group 14
IkeProposal standard_esp_proposal(std::uint32_t spi);  // AES-CBC-128 / HMAC-SHA1-96
bool proposal_matches(const IkeProposal& offered, const IkeProposal& wanted);

// --- Fixed-layout payload bodies --------------------------------------------

Bytes ke_payload(std::uint16_t group, ByteView public_value);
struct KePayload {
    std::uint16_t group = 0;
    Bytes data;
};
std::optional<KePayload> parse_ke(ByteView body);

Bytes id_payload(std::uint8_t id_type, ByteView data);
struct IdPayload {
    std::uint8_t type = 0;
    Bytes data;
};
std::optional<IdPayload> parse_id(ByteView body);

Bytes auth_payload(std::uint8_t method, ByteView data);
struct AuthPayload {
    std::uint8_t method = 0;
    Bytes data;
};
std::optional<AuthPayload> parse_auth(ByteView body);

Bytes cert_payload(ByteView der);
std::optional<Bytes> parse_cert(ByteView body);  // X.509 signature encoding only

Bytes notify_payload(std::uint16_t type, ByteView data = {});
struct NotifyPayload {
    std::uint8_t protocol = 0;
    std::uint16_t type = 0;
    Bytes spi;
    Bytes data;
};
std::optional<NotifyPayload> parse_notify(ByteView body);

// Single IPv4 range selector covering everything, or a specific range.
Bytes ts_payload_any_v4();
Bytes ts_payload_v4(const std::array<std::uint8_t, 4>& start, const std::array<std::uint8_t, 4>& end);

// --- Encrypted (SK) handling -------------------------------------------------

// Builds the complete message: header + SK payload wrapping `inner`,
// AES-128-CBC under sk_e, HMAC-SHA2-256-128 trailer under sk_a.
Bytes encode_ike_sk_message(IkeHeader header, const std::vector<IkePayloadChunk>& inner,
                            ByteView sk_e, ByteView sk_a, crypto::Rng& rng);
// Verifies and decrypts msg's SK payload into the inner payload chunks.
std::optional<std::vector<IkePayloadChunk>> decode_ike_sk_message(const IkeMessage& msg,
                                                                  ByteView sk_e, ByteView sk_a);

// --- Key derivation -----------------------------------------------------------

// prf+ expansion with HMAC-SHA2-256.
Bytes prf_plus_sha256(ByteView key, ByteView seed, std::size_t len);

struct Ikev2Keys {
    Bytes sk_d, sk_ai, sk_ar, sk_ei, sk_er, sk_pi, sk_pr;
};
Bytes ikev2_skeyseed(ByteView ni, ByteView nr, ByteView shared_secret);
Ikev2Keys derive_ikev2_keys(ByteView skeyseed, ByteView ni, ByteView nr, ByteView spi_i,
                            ByteView spi_r);

// Child-SA key material: encryption and integrity keys for both directions.
struct ChildSaKeys {
    Bytes enc_i, auth_i;  // initiator -> responder
    Bytes enc_r, auth_r;  // responder -> initiator
};
ChildSaKeys derive_child_keys(ByteView sk_d, ByteView ni, ByteView nr);

// Octets a party signs/MACs to authenticate itself: its own real first
// message, the peer's nonce, and prf(SK_p, its ID payload body).
Bytes ikev2_signed_octets(ByteView own_first_message, ByteView peer_nonce, ByteView sk_p,
                          ByteView id_payload_body);
// AUTH value when the inner EAP method exports a key.
Bytes ikev2_auth_from_msk(ByteView msk, ByteView signed_octets);

}  // namespace vpnprobe::wire
