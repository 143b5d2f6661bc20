#include "vpnprobe/auth/mppe.hpp"

#include "vpnprobe/auth/mschapv2.hpp"
#include "vpnprobe/crypto/hash.hpp"
#include "vpnprobe/crypto/rc4.hpp"

namespace vpnprobe::auth {

namespace {

constexpr std::string_view kMasterMagic = "This is the MPPE Master Key";
constexpr std::string_view kMagicSendClient =
    "On the client side, this is the send key; on the server side, it is the receive key.";
constexpr std::string_view kMagicSendServer =
    "On the client side, this is the receive key; on the server side, it is the send key.";

const Bytes kShaPad1(40, 0x00);
const Bytes kShaPad2(40, 0xF2);

std::size_t session_key_len(int bits) {
    switch (bits) {
        case 40:
        case 56:
            return 8;
        case 128:
            return 16;
        default:
            throw std::invalid_argument("MPPE key length must be 40, 56 or 128 bits");
    }
}

void apply_salt(Bytes& key, int bits) {
    if (bits == 40) {
        key[0] = 0xD1;
        key[1] = 0x26;
        key[2] = 0x9E;
    } else if (bits == 56) {
        key[0] = 0xD1;
    }
}

}  // namespace

Bytes get_master_key(ByteView password_hash_hash16, ByteView nt_response24) {
    if (password_hash_hash16.size() != 16 || nt_response24.size() != 24)
        throw std::invalid_argument("bad master key inputs");
    Bytes input;
    append(input, password_hash_hash16);
    append(input, nt_response24);
    append(input, kMasterMagic);
    Bytes digest = crypto::sha1(input);
    digest.resize(16);
    return digest;
}

Bytes get_asymmetric_start_key(ByteView master_key16, std::size_t key_len, bool is_send,
                               bool is_server) {
    if (master_key16.size() != 16) throw std::invalid_argument("master key must be 16 bytes");
    if (key_len == 0 || key_len > 20) throw std::invalid_argument("bad start key length");
    std::string_view magic = (is_send == is_server) ? kMagicSendServer : kMagicSendClient;
    Bytes input;
    append(input, master_key16);
    append(input, kShaPad1);
    append(input, magic);
    append(input, kShaPad2);
    Bytes digest = crypto::sha1(input);
    digest.resize(key_len);
    return digest;
}

Bytes get_new_key_from_sha(ByteView start_key, ByteView session_key, std::size_t key_len) {
    if (start_key.size() < key_len || session_key.size() < key_len)
        throw std::invalid_argument("key material shorter than requested length");
    Bytes input;
    append(input, start_key.subspan(0, key_len));
    append(input, kShaPad1);
    append(input, session_key.subspan(0, key_len));
    append(input, kShaPad2);
    Bytes digest = crypto::sha1(input);
    digest.resize(key_len);
    return digest;
}

Bytes mppe_session_key(ByteView start_key, ByteView previous_session_key, int bits, bool initial) {
    std::size_t len = session_key_len(bits);
    Bytes key = get_new_key_from_sha(start_key, previous_session_key, len);
    if (!initial) {
        // Rekeys mix the interim key with itself under RC4; the very first
        // session key skips this step.
        crypto::Rc4 rc4{key};
        rc4.process(key);
    }
    apply_salt(key, bits);
    return key;
}

MppeKeySet derive_mppe_keys(std::string_view password_utf8, ByteView nt_response24, int bits,
                            bool is_server) {
    std::size_t len = session_key_len(bits);
    MppeKeySet keys;
    keys.bits = bits;
    Bytes phh = hash_nt_password_hash(nt_password_hash(password_utf8));
    keys.master = get_master_key(phh, nt_response24);
    keys.send_start = get_asymmetric_start_key(keys.master, len, true, is_server);
    keys.recv_start = get_asymmetric_start_key(keys.master, len, false, is_server);
    keys.send_session = mppe_session_key(keys.send_start, keys.send_start, bits, true);
    keys.recv_session = mppe_session_key(keys.recv_start, keys.recv_start, bits, true);
    return keys;
}

Bytes sstp_hlak_from_mschap(std::string_view password_utf8, ByteView nt_response24) {
    Bytes phh = hash_nt_password_hash(nt_password_hash(password_utf8));
    Bytes master = get_master_key(phh, nt_response24);
    // client-receive == server-send key first, then client-send ==
    // server-receive: both peers produce identical bytes from their own view.
    Bytes hlak = get_asymmetric_start_key(master, 16, false, false);
    append(hlak, get_asymmetric_start_key(master, 16, true, false));
    return hlak;
}

Bytes eap_mschapv2_msk(std::string_view password_utf8, ByteView nt_response24) {
    Bytes phh = hash_nt_password_hash(nt_password_hash(password_utf8));
    Bytes master = get_master_key(phh, nt_response24);
    Bytes msk = get_asymmetric_start_key(master, 16, true, false);
    append(msk, get_asymmetric_start_key(master, 16, false, false));
    msk.resize(64, 0x00);
    return msk;
}

}  // namespace vpnprobe::auth
