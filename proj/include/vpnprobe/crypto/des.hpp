#pragma once

#include <array>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::crypto {

// Single-block DES implemented locally (OpenSSL 3 relegates DES-ECB to the
// legacy provider).  Only what the CHAP response computation needs.

// key8: 8 bytes including parity positions (parity itself is ignored).
std::array<std::uint8_t, 8> des_encrypt_block(ByteView key8, ByteView block8);
std::array<std::uint8_t, 8> des_decrypt_block(ByteView key8, ByteView block8);

// Spreads a packed 56-bit key over 8 bytes, bit 0 of each output byte left
// as the (unused) parity position.
std::array<std::uint8_t, 8> des_expand_key_56(ByteView key7);

}  // namespace vpnprobe::crypto
