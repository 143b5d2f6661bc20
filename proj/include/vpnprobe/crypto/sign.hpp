#pragma once

#include <string>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::crypto {

// SHA-256 digital signature with a PEM private key (RSA or EC), and
// verification against the public key inside an X.509 certificate (DER).
Bytes pkey_sign_sha256(const std::string& key_pem, ByteView data);
bool cert_verify_sha256(ByteView cert_der, ByteView data, ByteView signature);

}  // namespace vpnprobe::crypto
