#pragma once

#include <string>
#include <vector>

#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"

namespace vpnprobe {

struct TargetReport {
    std::string label;
    std::vector<Finding> findings;

    bool operator==(const TargetReport&) const = default;
};

struct Report {
    std::string version = "1";
    std::string generated_at;  // ISO 8601 UTC, e.g. 2026-08-16T10:00:00Z
    std::vector<TargetReport> targets;

    bool operator==(const Report&) const = default;
};

// Current wall clock rendered as ISO 8601 UTC.
std::string iso8601_utc_now();

// Groups findings by target (targets sorted by label, findings by class).
// A duplicate (target, class) pair is rejected: one probe run yields at most
// one verdict per class per target.
Report make_report(const std::vector<Finding>& findings, std::string generated_at = "");

// Canonical JSON: keys sorted, two-space indent, trailing newline.  Feeding
// the output back through parse_report_json and rendering again reproduces
// the exact same bytes.
std::string render_report_json(const Report& report);
Report parse_report_json(const std::string& json_text);

// Terminal summary: one row per target, one column per vulnerability class
// (enum order).  Cell values: x-mark = Vulnerable or Weak, check = Secure,
// dash = not probed or Inconclusive.
std::string render_report_matrix(const Report& report);

// Transcript export for offline analysis (raw bytes hex-encoded).
std::string transcript_to_json(const Transcript& transcript);

}  // namespace vpnprobe
