#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vpnprobe {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string_copy(ByteView b) {
    return std::string(b.begin(), b.end());
}

inline void append(Bytes& out, ByteView more) {
    out.insert(out.end(), more.begin(), more.end());
}

inline void append(Bytes& out, std::string_view more) {
    out.insert(out.end(), more.begin(), more.end());
}

inline Bytes cat(std::initializer_list<ByteView> parts) {
    Bytes out;
    for (const auto& p : parts) append(out, p);
    return out;
}

// Big-endian (network order) loads/stores.
inline void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u64(Bytes& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
    put_u32(out, static_cast<std::uint32_t>(v));
}

inline std::uint16_t get_u16(ByteView in, std::size_t off) {
    if (off + 2 > in.size()) throw std::out_of_range("get_u16 past end");
    return static_cast<std::uint16_t>(in[off] << 8 | in[off + 1]);
}

inline std::uint32_t get_u32(ByteView in, std::size_t off) {
    if (off + 4 > in.size()) throw std::out_of_range("get_u32 past end");
    return static_cast<std::uint32_t>(in[off]) << 24 | static_cast<std::uint32_t>(in[off + 1]) << 16 |
           static_cast<std::uint32_t>(in[off + 2]) << 8 | static_cast<std::uint32_t>(in[off + 3]);
}

inline std::uint64_t get_u64(ByteView in, std::size_t off) {
    return static_cast<std::uint64_t>(get_u32(in, off)) << 32 | get_u32(in, off + 4);
}

inline Bytes slice(ByteView in, std::size_t off, std::size_t len) {
    if (off + len > in.size()) throw std::out_of_range("slice past end");
    return Bytes(in.begin() + off, in.begin() + off + len);
}

// UTF-8 -> UTF-16LE conversion (MS-CHAP password hashing input).
Bytes utf8_to_utf16le(std::string_view utf8);

// Timing-safe comparison for MAC/response checks.
bool ct_equal(ByteView a, ByteView b);

}  // namespace vpnprobe
