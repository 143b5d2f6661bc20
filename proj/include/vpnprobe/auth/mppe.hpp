#pragma once

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::auth {

// MPPE key derivation from the MS-CHAPv2 exchange.

// SHA1(PasswordHashHash || NTResponse || magic)[0..15]
Bytes get_master_key(ByteView password_hash_hash16, ByteView nt_response24);

// Directional start key.  The magic constant depends on whether the key is
// the send or receive key *from the caller's perspective*: the client's send
// key equals the server's receive key and vice versa.
Bytes get_asymmetric_start_key(ByteView master_key16, std::size_t key_len, bool is_send,
                               bool is_server);

// SHA1(start || 40*0x00 || session || 40*0xF2)[0..len-1]
Bytes get_new_key_from_sha(ByteView start_key, ByteView session_key, std::size_t key_len);

// Derives the next session key.  The very first session key is the plain
// SHA mix of the start key with itself; every later rekey additionally
// self-encrypts the interim key with RC4 before salting.  40- and 56-bit
// keys get their leading bytes forced to the published salt values.
Bytes mppe_session_key(ByteView start_key, ByteView previous_session_key, int bits, bool initial);

struct MppeKeySet {
    int bits = 128;          // 40, 56 or 128
    Bytes master;            // 16 bytes
    Bytes send_start;        // callers' perspective (see is_server below)
    Bytes recv_start;
    Bytes send_session;      // initial session keys, salt applied
    Bytes recv_session;
};

// Full derivation for one side of the link.
MppeKeySet derive_mppe_keys(std::string_view password_utf8, ByteView nt_response24, int bits,
                            bool is_server);

// Higher-layer key material used by the HTTPS-tunnel binding check:
// 32 bytes that both sides compute identically (each side concatenates the
// two directional 16-byte start keys so that the byte order agrees).
Bytes sstp_hlak_from_mschap(std::string_view password_utf8, ByteView nt_response24);

// 64-byte master session key exported by the EAP encapsulation of this auth
// method: client-send start key || client-receive start key || 32 zero bytes.
Bytes eap_mschapv2_msk(std::string_view password_utf8, ByteView nt_response24);

}  // namespace vpnprobe::auth
