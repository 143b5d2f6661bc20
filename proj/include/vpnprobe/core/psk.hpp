#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vpnprobe {

// One candidate pre-shared key.  `is_public` marks keys drawn from the
// bundled publicly-known list; operator-supplied control keys (used to prove
// a hardened client CAN complete the exchange with its private key) carry
// is_public=false and never produce a Vulnerable verdict.
struct PskCandidate {
    std::string label;  // source, e.g. "public-default"
    std::string key;
    bool is_public = true;

    bool operator==(const PskCandidate&) const = default;
};

// Parses a candidate list: one key per line, `#` comments and blank lines
// skipped, optional "label: key" prefix (first colon splits).  Duplicate
// keys are removed, keeping the first occurrence.
std::vector<PskCandidate> parse_psk_candidates(std::string_view text,
                                               std::string_view default_label = "public-default");

// Loads and parses a candidate file; empty list if unreadable.
std::vector<PskCandidate> load_psk_file(const std::string& path);

}  // namespace vpnprobe
