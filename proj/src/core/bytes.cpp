#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe {

std::string to_hex(ByteView data) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
    Bytes out;
    out.reserve(hex.size() / 2);
    int hi = -1;
    for (char c : hex) {
        if (c == ' ' || c == ':' || c == '\n' || c == '\t') continue;
        int v = hex_nibble(c);
        if (v < 0) throw std::invalid_argument("invalid hex character");
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
            hi = -1;
        }
    }
    if (hi >= 0) throw std::invalid_argument("odd-length hex string");
    return out;
}

Bytes utf8_to_utf16le(std::string_view utf8) {
    Bytes out;
    std::size_t i = 0;
    auto emit = [&out](std::uint32_t cp) {
        if (cp >= 0x10000) {
            cp -= 0x10000;
            std::uint16_t hi = static_cast<std::uint16_t>(0xD800 + (cp >> 10));
            std::uint16_t lo = static_cast<std::uint16_t>(0xDC00 + (cp & 0x3FF));
            out.push_back(static_cast<std::uint8_t>(hi));
            out.push_back(static_cast<std::uint8_t>(hi >> 8));
            out.push_back(static_cast<std::uint8_t>(lo));
            out.push_back(static_cast<std::uint8_t>(lo >> 8));
        } else {
            out.push_back(static_cast<std::uint8_t>(cp));
            out.push_back(static_cast<std::uint8_t>(cp >> 8));
        }
    };
    while (i < utf8.size()) {
        std::uint8_t b0 = static_cast<std::uint8_t>(utf8[i]);
        std::uint32_t cp;
        std::size_t len;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            throw std::invalid_argument("invalid UTF-8 lead byte");
        }
        if (i + len > utf8.size()) throw std::invalid_argument("truncated UTF-8 sequence");
        for (std::size_t k = 1; k < len; ++k) {
            std::uint8_t bc = static_cast<std::uint8_t>(utf8[i + k]);
            if ((bc & 0xC0) != 0x80) throw std::invalid_argument("invalid UTF-8 continuation");
            cp = cp << 6 | (bc & 0x3F);
        }
        emit(cp);
        i += len;
    }
    return out;
}

bool ct_equal(ByteView a, ByteView b) {
    if (a.size() != b.size()) return false;
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff |= a[i] ^ b[i];
    return diff == 0;
}

}  // namespace vpnprobe
