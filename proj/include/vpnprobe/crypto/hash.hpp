#pragma once

#include <array>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::crypto {

Bytes sha1(ByteView data);
Bytes sha256(ByteView data);
Bytes md5(ByteView data);

// MD4 implemented locally: OpenSSL 3 ships it only in the legacy provider,
// and the MS-CHAP paths need it unconditionally.
std::array<std::uint8_t, 16> md4(ByteView data);

Bytes hmac_sha1(ByteView key, ByteView data);
Bytes hmac_sha256(ByteView key, ByteView data);
Bytes hmac_md5(ByteView key, ByteView data);

}  // namespace vpnprobe::crypto
