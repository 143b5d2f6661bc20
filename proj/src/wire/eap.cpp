#include "vpnprobe/wire/eap.hpp"

namespace vpnprobe::wire {

Bytes encode_eap(const EapPacket& pkt) {
    Bytes out;
    out.push_back(pkt.code);
    out.push_back(pkt.identifier);
    const bool has_type = pkt.code == kEapCodeRequest || pkt.code == kEapCodeResponse;
    std::size_t len = 4 + (has_type ? 1 + pkt.type_data.size() : 0);
    put_u16(out, static_cast<std::uint16_t>(len));
    if (has_type) {
        out.push_back(pkt.type);
        append(out, pkt.type_data);
    }
    return out;
}

std::optional<EapPacket> decode_eap(ByteView raw) {
    if (raw.size() < 4) return std::nullopt;
    EapPacket pkt;
    pkt.code = raw[0];
    pkt.identifier = raw[1];
    std::uint16_t len = get_u16(raw, 2);
    if (len < 4 || len > raw.size()) return std::nullopt;
    if (pkt.code == kEapCodeRequest || pkt.code == kEapCodeResponse) {
        if (len < 5) return std::nullopt;
        pkt.type = raw[4];
        pkt.type_data = slice(raw, 5, len - 5);
    }
    return pkt;
}

Bytes encode_eap_mschapv2(std::uint8_t eap_code, std::uint8_t eap_id, const EapMsChapV2& m) {
    EapPacket pkt;
    pkt.code = eap_code;
    pkt.identifier = eap_id;
    pkt.type = kEapTypeMsChapV2;
    pkt.type_data.push_back(m.opcode);
    // Success/Failure responses are bare opcodes.
    if (!(eap_code == kEapCodeResponse &&
          (m.opcode == kMsChapV2OpSuccess || m.opcode == kMsChapV2OpFailure))) {
        pkt.type_data.push_back(m.mschap_id);
        // MS-Length: opcode through end of data.
        put_u16(pkt.type_data, static_cast<std::uint16_t>(4 + m.data.size()));
        append(pkt.type_data, m.data);
    }
    return encode_eap(pkt);
}

std::optional<EapMsChapV2> parse_eap_mschapv2(const EapPacket& pkt) {
    if (pkt.type != kEapTypeMsChapV2 || pkt.type_data.empty()) return std::nullopt;
    EapMsChapV2 m;
    m.opcode = pkt.type_data[0];
    if (pkt.type_data.size() == 1) {
        return m;  // bare Success/Failure response
    }
    if (pkt.type_data.size() < 4) return std::nullopt;
    m.mschap_id = pkt.type_data[1];
    std::uint16_t ms_len = get_u16(pkt.type_data, 2);
    if (ms_len < 4 || ms_len > pkt.type_data.size()) return std::nullopt;
    m.data = slice(pkt.type_data, 4, ms_len - 4);
    return m;
}

Bytes mschapv2_challenge_body(ByteView challenge16, std::string_view name) {
    Bytes out;
    out.push_back(16);
    append(out, challenge16);
    append(out, name);
    return out;
}

std::optional<MsChapV2ChallengeBody> parse_mschapv2_challenge_body(ByteView data) {
    if (data.size() < 17 || data[0] != 16) return std::nullopt;
    MsChapV2ChallengeBody body;
    std::copy(data.begin() + 1, data.begin() + 17, body.challenge.begin());
    body.name.assign(data.begin() + 17, data.end());
    return body;
}

Bytes mschapv2_response_body(ByteView peer_challenge16, ByteView nt_response24,
                             std::string_view name) {
    Bytes out;
    out.push_back(49);
    append(out, peer_challenge16);
    out.insert(out.end(), 8, 0);  // reserved
    append(out, nt_response24);
    out.push_back(0);  // flags
    append(out, name);
    return out;
}

std::optional<MsChapV2ResponseBody> parse_mschapv2_response_body(ByteView data) {
    if (data.size() < 50 || data[0] != 49) return std::nullopt;
    MsChapV2ResponseBody body;
    std::copy(data.begin() + 1, data.begin() + 17, body.peer_challenge.begin());
    std::copy(data.begin() + 25, data.begin() + 49, body.nt_response.begin());
    body.flags = data[49];
    body.name.assign(data.begin() + 50, data.end());
    return body;
}

}  // namespace vpnprobe::wire
