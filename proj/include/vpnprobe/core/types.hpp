#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vpnprobe {

// Tunnel protocols the harness can stand up fake servers / relays for.
enum class ProtocolId {
    Pptp,
    Sstp,
    L2tpIpsec,
    CiscoIpsec,
    Ikev2,
    OpenVpn,
    SoftEther,
};

inline constexpr int kProtocolCount = 7;

// Client-side vulnerability classes the probes can decide.
enum class VulnClass {
    PptpOptionalEncryption,
    SstpIgnoredCertFailure,
    Ikev2ImproperServerVerification,
    OpenVpnCredentialLeakage,
    SoftEtherNoServerVerification,
    SoftEtherWrongVpnServer,
    L2tpKnownPsk,
    CiscoKnownPsk,
    WeakFallback,
};

inline constexpr int kVulnClassCount = 9;

// Who has to sit where to exploit a class: on the victim's network path, or
// as an unprivileged local process on the victim host.
enum class AttackerType {
    Network,
    Local,
};

AttackerType attacker_of(VulnClass c);

enum class VerdictLevel {
    Vulnerable,
    Weak,
    Secure,
    Inconclusive,
};

// Outcome of a single probe run.  `evidence` holds indices into the session
// transcript that justify the level; Vulnerable/Weak verdicts must carry at
// least one such index, Inconclusive must carry a reason in `note`.
struct Verdict {
    VerdictLevel level = VerdictLevel::Inconclusive;
    std::vector<std::size_t> evidence;
    std::string note;

    bool operator==(const Verdict&) const = default;
};

Verdict verdict_vulnerable(std::vector<std::size_t> evidence, std::string note = "");
Verdict verdict_weak(std::vector<std::size_t> evidence, std::string note = "");
Verdict verdict_secure(std::string note = "");
Verdict verdict_inconclusive(std::string reason);

struct Finding {
    VulnClass vuln_class{};
    AttackerType attacker{};   // always attacker_of(vuln_class)
    Verdict verdict;
    std::string target;        // label of the client/config under test
    std::string remediation;   // actionable advice, defaulted per class

    bool operator==(const Finding&) const = default;
};

// Builds a Finding with the attacker type and default remediation filled in.
Finding make_finding(VulnClass c, std::string target, Verdict v);

// Default remediation text per class.
std::string_view remediation_for(VulnClass c);

// Stable textual names (kebab-case) used in reports and on the CLI.
std::string_view to_string(ProtocolId p);
std::string_view to_string(VulnClass c);
std::string_view to_string(AttackerType a);
std::string_view to_string(VerdictLevel v);

std::optional<ProtocolId> protocol_from_string(std::string_view s);
std::optional<VulnClass> vuln_class_from_string(std::string_view s);
std::optional<AttackerType> attacker_from_string(std::string_view s);
std::optional<VerdictLevel> verdict_level_from_string(std::string_view s);

// Test credentials a probe hands to a simulated client, or expects to see
// presented by a real one.
struct Credentials {
    std::string username;
    std::string password;  // UTF-8; MS-CHAP paths convert to UTF-16LE

    bool operator==(const Credentials&) const = default;
};

}  // namespace vpnprobe
