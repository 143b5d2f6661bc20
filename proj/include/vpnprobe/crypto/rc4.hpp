#pragma once

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::crypto {

// RC4 stream cipher, implemented locally (legacy-provider-only in OpenSSL 3).
// Used for MPPE and for the session-key RC4 self-mixing step on rekey.
class Rc4 {
public:
    explicit Rc4(ByteView key) { reset(key); }

    void reset(ByteView key) {
        if (key.empty() || key.size() > 256) throw std::invalid_argument("bad RC4 key length");
        for (int k = 0; k < 256; ++k) s_[k] = static_cast<std::uint8_t>(k);
        std::uint8_t j = 0;
        for (int k = 0; k < 256; ++k) {
            j = static_cast<std::uint8_t>(j + s_[k] + key[k % key.size()]);
            std::swap(s_[k], s_[j]);
        }
        i_ = j_ = 0;
    }

    void process(std::span<std::uint8_t> data) {
        for (auto& b : data) {
            i_ = static_cast<std::uint8_t>(i_ + 1);
            j_ = static_cast<std::uint8_t>(j_ + s_[i_]);
            std::swap(s_[i_], s_[j_]);
            b ^= s_[static_cast<std::uint8_t>(s_[i_] + s_[j_])];
        }
    }

    Bytes process_copy(ByteView data) {
        Bytes out(data.begin(), data.end());
        process(out);
        return out;
    }

private:
    std::uint8_t s_[256];
    std::uint8_t i_ = 0, j_ = 0;
};

}  // namespace vpnprobe::crypto
