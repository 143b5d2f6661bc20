#pragma once

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::crypto {

// AES-128-CBC without padding: callers (ESP, IKE encrypted payloads) manage
// their own padding schemes.  Input length must be a multiple of 16.
Bytes aes128_cbc_encrypt(ByteView key, ByteView iv, ByteView plaintext);
Bytes aes128_cbc_decrypt(ByteView key, ByteView iv, ByteView ciphertext);

}  // namespace vpnprobe::crypto
