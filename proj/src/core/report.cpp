#include "vpnprobe/core/report.hpp"

#include <algorithm>
#include <array>
#include <ctime>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vpnprobe {

using nlohmann::json;

std::string iso8601_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Report make_report(const std::vector<Finding>& findings, std::string generated_at) {
    Report report;
    report.generated_at = generated_at.empty() ? iso8601_utc_now() : std::move(generated_at);

    std::map<std::string, std::vector<Finding>> by_target;
    std::set<std::pair<std::string, VulnClass>> seen;
    for (const Finding& f : findings) {
        if (!seen.insert({f.target, f.vuln_class}).second)
            throw std::invalid_argument("duplicate finding for target '" + f.target + "' class '" +
                                        std::string(to_string(f.vuln_class)) + "'");
        by_target[f.target].push_back(f);
    }
    for (auto& [label, fs] : by_target) {
        std::sort(fs.begin(), fs.end(), [](const Finding& a, const Finding& b) {
            return static_cast<int>(a.vuln_class) < static_cast<int>(b.vuln_class);
        });
        report.targets.push_back(TargetReport{label, std::move(fs)});
    }
    return report;
}

namespace {

json finding_to_json(const Finding& f) {
    json evidence = json::array();
    for (std::size_t idx : f.verdict.evidence) evidence.push_back(idx);
    return json{
        {"vuln_class", std::string(to_string(f.vuln_class))},
        {"attacker", std::string(to_string(f.attacker))},
        {"verdict", std::string(to_string(f.verdict.level))},
        {"note", f.verdict.note},
        {"evidence", std::move(evidence)},
        {"remediation", f.remediation},
    };
}

Finding finding_from_json(const json& j, const std::string& target) {
    auto cls = vuln_class_from_string(j.at("vuln_class").get<std::string>());
    if (!cls) throw std::invalid_argument("unknown vuln_class: " + j.at("vuln_class").dump());
    auto attacker = attacker_from_string(j.at("attacker").get<std::string>());
    if (!attacker || *attacker != attacker_of(*cls))
        throw std::invalid_argument("attacker type does not match class " +
                                    std::string(to_string(*cls)));
    auto level = verdict_level_from_string(j.at("verdict").get<std::string>());
    if (!level) throw std::invalid_argument("unknown verdict: " + j.at("verdict").dump());

    Finding f;
    f.vuln_class = *cls;
    f.attacker = *attacker;
    f.verdict.level = *level;
    f.verdict.note = j.at("note").get<std::string>();
    for (const auto& e : j.at("evidence")) f.verdict.evidence.push_back(e.get<std::size_t>());
    f.target = target;
    f.remediation = j.at("remediation").get<std::string>();
    return f;
}

}  // namespace

std::string render_report_json(const Report& report) {
    json targets = json::array();
    for (const TargetReport& t : report.targets) {
        json findings = json::array();
        for (const Finding& f : t.findings) findings.push_back(finding_to_json(f));
        targets.push_back(json{{"label", t.label}, {"findings", std::move(findings)}});
    }
    json doc{
        {"version", report.version},
        {"generated_at", report.generated_at},
        {"targets", std::move(targets)},
    };
    return doc.dump(2) + "\n";
}

Report parse_report_json(const std::string& json_text) {
    json doc = json::parse(json_text);
    Report report;
    report.version = doc.at("version").get<std::string>();
    report.generated_at = doc.at("generated_at").get<std::string>();
    for (const auto& jt : doc.at("targets")) {
        TargetReport t;
        t.label = jt.at("label").get<std::string>();
        for (const auto& jf : jt.at("findings")) t.findings.push_back(finding_from_json(jf, t.label));
        report.targets.push_back(std::move(t));
    }
    return report;
}

std::string render_report_matrix(const Report& report) {
    std::ostringstream out;
    out << "target |";
    for (int i = 0; i < kVulnClassCount; ++i)
        out << ' ' << to_string(static_cast<VulnClass>(i));
    out << '\n';

    for (const TargetReport& t : report.targets) {
        std::array<const char*, kVulnClassCount> cells;
        cells.fill("–");  // en dash: not probed
        for (const Finding& f : t.findings) {
            const char* cell = "–";
            switch (f.verdict.level) {
                case VerdictLevel::Vulnerable:
                case VerdictLevel::Weak:
                    cell = "✗";  // ballot x
                    break;
                case VerdictLevel::Secure:
                    cell = "✓";  // check mark
                    break;
                case VerdictLevel::Inconclusive:
                    cell = "–";
                    break;
            }
            cells[static_cast<int>(f.vuln_class)] = cell;
        }
        out << t.label << " |";
        for (const char* c : cells) out << ' ' << c;
        out << '\n';
    }
    return out.str();
}

namespace {

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

}  // namespace

std::string transcript_to_json(const Transcript& transcript) {
    json events = json::array();
    for (const TranscriptEvent& ev : transcript.events()) {
        json je{
            {"timestamp_ns", ev.timestamp_ns},
            {"direction", std::string(to_string(ev.direction))},
            {"layer", ev.layer},
            {"plaintext", ev.plaintext},
            {"summary", ev.summary},
        };
        if (!ev.raw.empty()) je["raw_hex"] = to_hex(ev.raw);
        events.push_back(std::move(je));
    }
    json doc{
        {"label", transcript.label()},
        {"wall_clock_start_ms", transcript.wall_clock_start_ms()},
        {"events", std::move(events)},
    };
    return doc.dump(2) + "\n";
}

}  // namespace vpnprobe
