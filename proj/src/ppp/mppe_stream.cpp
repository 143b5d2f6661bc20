#include "vpnprobe/ppp/mppe_stream.hpp"

#include "vpnprobe/auth/mppe.hpp"
#include "vpnprobe/wire/ppp.hpp"

namespace vpnprobe::ppp {

MppeStream::MppeStream(Bytes start_key, int bits, bool stateless)
    : start_key_(std::move(start_key)),
      session_key_(auth::mppe_session_key(start_key_, start_key_, bits, true)),
      bits_(bits),
      stateless_(stateless),
      cipher_(session_key_) {}

void MppeStream::rekey() {
    session_key_ = auth::mppe_session_key(start_key_, session_key_, bits_, false);
    reset_cipher();
}

Bytes MppeStream::encrypt_payload(std::uint16_t inner_protocol, ByteView data) {
    bool flushed = false;
    if (first_) {
        // The very first packet uses the initial session key unchanged.
        first_ = false;
        flushed = true;
    } else if (stateless_) {
        rekey();
        flushed = true;
    } else if ((count_ & 0xFF) == 0xFF) {
        rekey();
        flushed = true;
    }

    Bytes clear;
    put_u16(clear, inner_protocol);
    append(clear, data);
    cipher_.process(clear);

    Bytes out;
    std::uint16_t header = static_cast<std::uint16_t>(
        (count_ & kCountMask) | kFlagEncrypted | (flushed ? kFlagFlushed : 0));
    put_u16(out, header);
    append(out, clear);
    count_ = (count_ + 1) & kCountMask;
    return out;
}

std::optional<MppeStream::Decrypted> MppeStream::decrypt_payload(ByteView mppe_payload) {
    if (mppe_payload.size() < 4) return std::nullopt;
    std::uint16_t header = get_u16(mppe_payload, 0);
    if (!(header & kFlagEncrypted)) return std::nullopt;
    std::uint16_t received = header & kCountMask;

    if (first_) {
        if (received != 0) return std::nullopt;  // peers start their count at zero
        first_ = false;
    } else {
        // Counts more than half the window ahead are treated as stale
        // (replayed or badly reordered) rather than as a huge forward jump.
        const std::uint16_t diff = static_cast<std::uint16_t>((received - count_) & kCountMask);
        if (diff >= (kCountMask + 1) / 2) return std::nullopt;
        // A stateful cipher cannot resynchronize after loss without a flush
        // from the sender.  Reject before touching any key state.
        if (!stateless_ && diff != 0 && !(header & kFlagFlushed)) return std::nullopt;
        // Walk the key schedule forward through every skipped count up to and
        // including the received one, mirroring what the sender did.
        std::uint16_t c = count_;
        while (true) {
            if (stateless_ || (c & 0xFF) == 0xFF) {
                rekey();
            }
            if (c == received) break;
            c = (c + 1) & kCountMask;
        }
        if (!stateless_ && (header & kFlagFlushed)) reset_cipher();
    }

    Bytes clear(mppe_payload.begin() + 2, mppe_payload.end());
    cipher_.process(clear);
    count_ = (received + 1) & kCountMask;

    auto frame = wire::decode_ppp_frame(clear);
    if (!frame) return std::nullopt;
    Decrypted out;
    out.inner_protocol = frame->protocol;
    out.data = std::move(frame->payload);
    out.flushed = header & kFlagFlushed;
    return out;
}

}  // namespace vpnprobe::ppp
