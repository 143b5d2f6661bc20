#pragma once

#include <memory>
#include <optional>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::crypto {

// Randomness source for nonces, challenges and DH exponents.  Production
// uses OS entropy; tests inject a seeded deterministic generator so probe
// runs replay bit-for-bit.
class Rng {
public:
    virtual ~Rng() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    Bytes bytes(std::size_t n) {
        Bytes b(n);
        fill(b);
        return b;
    }

    std::uint32_t u32() {
        std::uint8_t b[4];
        fill(b);
        return static_cast<std::uint32_t>(b[0]) << 24 | static_cast<std::uint32_t>(b[1]) << 16 |
               static_cast<std::uint32_t>(b[2]) << 8 | b[3];
    }

    std::uint64_t u64() { return static_cast<std::uint64_t>(u32()) << 32 | u32(); }

    // Uniform value in [0, bound) via rejection sampling.
    std::uint32_t below(std::uint32_t bound) {
        if (bound == 0) throw std::invalid_argument("below(0)");
        std::uint32_t limit = 0xFFFFFFFFu - 0xFFFFFFFFu % bound;
        std::uint32_t v;
        do {
            v = u32();
        } while (v >= limit);
        return v % bound;
    }
};

class SystemRng final : public Rng {
public:
    void fill(std::span<std::uint8_t> out) override;
};

// SHA-256 counter generator: block(i) = SHA-256(seed_le || i_le).  Stable
// across platforms so seeded runs reproduce everywhere.
class SeededRng final : public Rng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed) {}
    void fill(std::span<std::uint8_t> out) override;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    Bytes buffer_;
    std::size_t buffer_pos_ = 0;
};

std::unique_ptr<Rng> make_rng(std::optional<std::uint64_t> seed);

}  // namespace vpnprobe::crypto
