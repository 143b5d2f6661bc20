#pragma once

#include <optional>

#include "vpnprobe/core/bytes.hpp"
#include "vpnprobe/crypto/rc4.hpp"

namespace vpnprobe::ppp {

// One direction of an MPPE-protected link.  The peer's stream is constructed
// from the same start key (the sender's send key == receiver's receive key).
//
// Payload layout (PPP protocol 0x00FD): 2-byte header (flag bits in the top
// nibble, 12-bit coherency count) followed by the RC4 ciphertext of the
// original protocol field plus data.
class MppeStream {
public:
    static constexpr std::uint16_t kFlagFlushed = 0x8000;    // "A"
    static constexpr std::uint16_t kFlagEncrypted = 0x1000;  // "D"
    static constexpr std::uint16_t kCountMask = 0x0FFF;

    MppeStream(Bytes start_key, int bits, bool stateless);

    // Wraps a cleartext PPP protocol+payload into an MPPE payload.
    Bytes encrypt_payload(std::uint16_t inner_protocol, ByteView data);

    struct Decrypted {
        std::uint16_t inner_protocol = 0;
        Bytes data;
        bool flushed = false;
    };
    // Unwraps a received MPPE payload; nullopt on malformed input or
    // coherency failure.
    std::optional<Decrypted> decrypt_payload(ByteView mppe_payload);

    const Bytes& session_key() const { return session_key_; }
    std::uint16_t next_count() const { return count_; }

private:
    void rekey();
    void reset_cipher() { cipher_.reset(session_key_); }

    Bytes start_key_;
    Bytes session_key_;
    int bits_;
    bool stateless_;
    bool first_ = true;        // next packet is the very first on this stream
    std::uint16_t count_ = 0;  // next coherency count to send / expect
    crypto::Rc4 cipher_;
};

}  // namespace vpnprobe::ppp
