#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::wire {

// Minimal EAP framing plus the MS-CHAPv2 method (type 26).

inline constexpr std::uint8_t kEapCodeRequest = 1;
inline constexpr std::uint8_t kEapCodeResponse = 2;
inline constexpr std::uint8_t kEapCodeSuccess = 3;
inline constexpr std::uint8_t kEapCodeFailure = 4;

inline constexpr std::uint8_t kEapTypeIdentity = 1;
inline constexpr std::uint8_t kEapTypeMsChapV2 = 26;

inline constexpr std::uint8_t kMsChapV2OpChallenge = 1;
inline constexpr std::uint8_t kMsChapV2OpResponse = 2;
inline constexpr std::uint8_t kMsChapV2OpSuccess = 3;
inline constexpr std::uint8_t kMsChapV2OpFailure = 4;

struct EapPacket {
    std::uint8_t code = 0;
    std::uint8_t identifier = 0;
    // Request/Response only:
    std::uint8_t type = 0;
    Bytes type_data;
};

Bytes encode_eap(const EapPacket& pkt);
std::optional<EapPacket> decode_eap(ByteView raw);

// MS-CHAPv2 method payload (the EAP type_data): opcode, method identifier,
// embedded length, opcode-specific data.
struct EapMsChapV2 {
    std::uint8_t opcode = 0;
    std::uint8_t mschap_id = 0;
    Bytes data;  // challenge/response structure or textual message
};

Bytes encode_eap_mschapv2(std::uint8_t eap_code, std::uint8_t eap_id, const EapMsChapV2& m);
std::optional<EapMsChapV2> parse_eap_mschapv2(const EapPacket& pkt);

// Opcode-specific bodies.
Bytes mschapv2_challenge_body(ByteView challenge16, std::string_view name);
struct MsChapV2ChallengeBody {
    std::array<std::uint8_t, 16> challenge{};
    std::string name;
};
std::optional<MsChapV2ChallengeBody> parse_mschapv2_challenge_body(ByteView data);

Bytes mschapv2_response_body(ByteView peer_challenge16, ByteView nt_response24,
                             std::string_view name);
struct MsChapV2ResponseBody {
    std::array<std::uint8_t, 16> peer_challenge{};
    std::array<std::uint8_t, 24> nt_response{};
    std::uint8_t flags = 0;
    std::string name;
};
std::optional<MsChapV2ResponseBody> parse_mschapv2_response_body(ByteView data);

}  // namespace vpnprobe::wire
