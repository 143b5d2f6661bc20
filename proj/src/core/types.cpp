#include "vpnprobe/core/types.hpp"

#include <array>

namespace vpnprobe {

AttackerType attacker_of(VulnClass c) {
    switch (c) {
        case VulnClass::OpenVpnCredentialLeakage:
        case VulnClass::SoftEtherWrongVpnServer:
            return AttackerType::Local;
        default:
            return AttackerType::Network;
    }
}

Verdict verdict_vulnerable(std::vector<std::size_t> evidence, std::string note) {
    if (evidence.empty())
        throw std::invalid_argument("Vulnerable verdict requires at least one evidence reference");
    return Verdict{VerdictLevel::Vulnerable, std::move(evidence), std::move(note)};
}

Verdict verdict_weak(std::vector<std::size_t> evidence, std::string note) {
    if (evidence.empty())
        throw std::invalid_argument("Weak verdict requires at least one evidence reference");
    return Verdict{VerdictLevel::Weak, std::move(evidence), std::move(note)};
}

Verdict verdict_secure(std::string note) {
    return Verdict{VerdictLevel::Secure, {}, std::move(note)};
}

Verdict verdict_inconclusive(std::string reason) {
    if (reason.empty())
        throw std::invalid_argument("Inconclusive verdict requires a reason");
    return Verdict{VerdictLevel::Inconclusive, {}, std::move(reason)};
}

Finding make_finding(VulnClass c, std::string target, Verdict v) {
    Finding f;
    f.vuln_class = c;
    f.attacker = attacker_of(c);
    f.verdict = std::move(v);
    f.target = std::move(target);
    f.remediation = std::string(remediation_for(c));
    return f;
}

std::string_view remediation_for(VulnClass c) {
    switch (c) {
        case VulnClass::PptpOptionalEncryption:
            return "Require MPPE for every PPTP session and tear the tunnel down when the "
                   "peer rejects it during CCP; better, retire PPTP entirely.";
        case VulnClass::SstpIgnoredCertFailure:
            return "Abort the SSTP HTTPS handshake on any certificate validation failure "
                   "and verify the higher-layer crypto binding before passing traffic.";
        case VulnClass::Ikev2ImproperServerVerification:
            return "Validate the IKEv2 server certificate against a pinned identity or a "
                   "trusted CA and match the presented identity to the expected gateway name.";
        case VulnClass::OpenVpnCredentialLeakage:
            return "Keep credentials out of world-readable files and sockets: restrict the "
                   "management interface with authentication and store secrets with "
                   "per-user ACLs.";
        case VulnClass::SoftEtherNoServerVerification:
            return "Enable server certificate verification in the client configuration and "
                   "pin the expected server certificate or CA.";
        case VulnClass::SoftEtherWrongVpnServer:
            return "Protect the client management channel with a strong password bound to "
                   "the local user and refuse unauthenticated reconfiguration.";
        case VulnClass::L2tpKnownPsk:
            return "Replace default or published IPsec pre-shared keys with a per-deployment "
                   "random secret, or move to certificate authentication.";
        case VulnClass::CiscoKnownPsk:
            return "Stop shipping a fixed group PSK with the client profile; use per-user "
                   "certificates or unique secrets so a network peer cannot impersonate the "
                   "gateway.";
        case VulnClass::WeakFallback:
            return "Do not fall back to weaker tunnel protocols when the preferred one is "
                   "blocked; fail closed or let the user opt in explicitly per protocol.";
    }
    return "";
}

std::string_view to_string(ProtocolId p) {
    switch (p) {
        case ProtocolId::Pptp: return "pptp";
        case ProtocolId::Sstp: return "sstp";
        case ProtocolId::L2tpIpsec: return "l2tp-ipsec";
        case ProtocolId::CiscoIpsec: return "cisco-ipsec";
        case ProtocolId::Ikev2: return "ikev2";
        case ProtocolId::OpenVpn: return "openvpn";
        case ProtocolId::SoftEther: return "softether";
    }
    return "";
}

std::string_view to_string(VulnClass c) {
    switch (c) {
        case VulnClass::PptpOptionalEncryption: return "pptp-optional-encryption";
        case VulnClass::SstpIgnoredCertFailure: return "sstp-ignored-cert-failure";
        case VulnClass::Ikev2ImproperServerVerification: return "ikev2-improper-server-verification";
        case VulnClass::OpenVpnCredentialLeakage: return "openvpn-credential-leakage";
        case VulnClass::SoftEtherNoServerVerification: return "softether-no-server-verification";
        case VulnClass::SoftEtherWrongVpnServer: return "softether-wrong-vpn-server";
        case VulnClass::L2tpKnownPsk: return "l2tp-known-psk";
        case VulnClass::CiscoKnownPsk: return "cisco-known-psk";
        case VulnClass::WeakFallback: return "weak-fallback";
    }
    return "";
}

std::string_view to_string(AttackerType a) {
    return a == AttackerType::Network ? "network" : "local";
}

std::string_view to_string(VerdictLevel v) {
    switch (v) {
        case VerdictLevel::Vulnerable: return "vulnerable";
        case VerdictLevel::Weak: return "weak";
        case VerdictLevel::Secure: return "secure";
        case VerdictLevel::Inconclusive: return "inconclusive";
    }
    return "";
}

namespace {

template <typename E, int N>
std::optional<E> from_string_impl(std::string_view s) {
    for (int i = 0; i < N; ++i) {
        auto e = static_cast<E>(i);
        if (to_string(e) == s) return e;
    }
    return std::nullopt;
}

}  // namespace

std::optional<ProtocolId> protocol_from_string(std::string_view s) {
    return from_string_impl<ProtocolId, kProtocolCount>(s);
}

std::optional<VulnClass> vuln_class_from_string(std::string_view s) {
    return from_string_impl<VulnClass, kVulnClassCount>(s);
}

std::optional<AttackerType> attacker_from_string(std::string_view s) {
    return from_string_impl<AttackerType, 2>(s);
}

std::optional<VerdictLevel> verdict_level_from_string(std::string_view s) {
    return from_string_impl<VerdictLevel, 4>(s);
}

}  // namespace vpnprobe
