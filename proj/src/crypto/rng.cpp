#include "vpnprobe/crypto/rng.hpp"

#include <openssl/rand.h>

#include "vpnprobe/crypto/hash.hpp"

namespace vpnprobe::crypto {

void SystemRng::fill(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        throw std::runtime_error("RAND_bytes failed");
}

void SeededRng::fill(std::span<std::uint8_t> out) {
    std::size_t produced = 0;
    while (produced < out.size()) {
        if (buffer_pos_ >= buffer_.size()) {
            Bytes block;
            for (int i = 0; i < 8; ++i) block.push_back(static_cast<std::uint8_t>(seed_ >> (8 * i)));
            for (int i = 0; i < 8; ++i)
                block.push_back(static_cast<std::uint8_t>(counter_ >> (8 * i)));
            ++counter_;
            buffer_ = sha256(block);
            buffer_pos_ = 0;
        }
        std::size_t n = std::min(out.size() - produced, buffer_.size() - buffer_pos_);
        std::copy_n(buffer_.begin() + static_cast<std::ptrdiff_t>(buffer_pos_), n,
                    out.begin() + static_cast<std::ptrdiff_t>(produced));
        buffer_pos_ += n;
        produced += n;
    }
}

std::unique_ptr<Rng> make_rng(std::optional<std::uint64_t> seed) {
    if (seed) return std::make_unique<SeededRng>(*seed);
    return std::make_unique<SystemRng>();
}

}  // namespace vpnprobe::crypto
