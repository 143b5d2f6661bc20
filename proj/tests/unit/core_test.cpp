#include <doctest.h>

#include <atomic>
#include <thread>

#include "vpnprobe/core/report.hpp"
#include "vpnprobe/core/transcript.hpp"
#include "vpnprobe/core/types.hpp"

using namespace vpnprobe;

TEST_CASE("attacker type per vulnerability class") {
    CHECK(attacker_of(VulnClass::PptpOptionalEncryption) == AttackerType::Network);
    CHECK(attacker_of(VulnClass::SstpIgnoredCertFailure) == AttackerType::Network);
    CHECK(attacker_of(VulnClass::Ikev2ImproperServerVerification) == AttackerType::Network);
    CHECK(attacker_of(VulnClass::OpenVpnCredentialLeakage) == AttackerType::Local);
    CHECK(attacker_of(VulnClass::SoftEtherNoServerVerification) == AttackerType::Network);
    CHECK(attacker_of(VulnClass::SoftEtherWrongVpnServer) == AttackerType::Local);
    CHECK(attacker_of(VulnClass::L2tpKnownPsk) == AttackerType::Network);
    CHECK(attacker_of(VulnClass::CiscoKnownPsk) == AttackerType::Network);
    CHECK(attacker_of(VulnClass::WeakFallback) == AttackerType::Network);
}

TEST_CASE("enum names round-trip") {
    for (int i = 0; i < kVulnClassCount; ++i) {
        auto c = static_cast<VulnClass>(i);
        auto back = vuln_class_from_string(to_string(c));
        REQUIRE(back.has_value());
        CHECK(*back == c);
    }
    for (int i = 0; i < kProtocolCount; ++i) {
        auto p = static_cast<ProtocolId>(i);
        auto back = protocol_from_string(to_string(p));
        REQUIRE(back.has_value());
        CHECK(*back == p);
    }
    CHECK(!vuln_class_from_string("nonsense").has_value());
}

TEST_CASE("verdict invariants") {
    CHECK_THROWS_AS(verdict_vulnerable({}), std::invalid_argument);
    CHECK_THROWS_AS(verdict_weak({}), std::invalid_argument);
    CHECK_THROWS_AS(verdict_inconclusive(""), std::invalid_argument);
    Verdict v = verdict_vulnerable({3, 7}, "saw plaintext");
    CHECK(v.level == VerdictLevel::Vulnerable);
    CHECK(v.evidence == std::vector<std::size_t>{3, 7});
}

TEST_CASE("make_finding fills attacker and remediation") {
    Finding f = make_finding(VulnClass::OpenVpnCredentialLeakage, "client-a", verdict_secure());
    CHECK(f.attacker == AttackerType::Local);
    CHECK(!f.remediation.empty());
    CHECK(f.target == "client-a");
}

TEST_CASE("transcript rejects out-of-order timestamps") {
    Transcript t("session");
    TranscriptEvent e1;
    e1.timestamp_ns = 100;
    e1.summary = "first";
    t.record(e1);
    TranscriptEvent e2;
    e2.timestamp_ns = 99;
    e2.summary = "stale";
    CHECK_THROWS_AS(t.record(e2), TranscriptOrderError);
    e2.timestamp_ns = 100;  // equal is fine
    CHECK(t.record(e2) == 1);
    CHECK(t.events().size() == 2);
}

TEST_CASE("transcript convenience recorder stamps monotonic times") {
    Transcript t("s");
    for (int i = 0; i < 100; ++i)
        t.record(Direction::ClientToProbe, "tcp", false, "ev" + std::to_string(i));
    REQUIRE(t.events().size() == 100);
    for (std::size_t i = 1; i < 100; ++i)
        CHECK(t.events()[i].timestamp_ns >= t.events()[i - 1].timestamp_ns);
    CHECK(t.wall_clock_start_ms() > 0);
}

TEST_CASE("hub serializes concurrent sessions and preserves per-session order") {
    TranscriptHub hub;
    constexpr int kSessions = 4;
    constexpr int kEvents = 250;
    std::vector<std::thread> workers;
    for (int s = 0; s < kSessions; ++s) {
        workers.emplace_back([&hub, s] {
            std::string label = "session-" + std::to_string(s);
            for (int i = 0; i < kEvents; ++i)
                hub.record(label, Direction::ClientToProbe, "tcp", false,
                           "ev-" + std::to_string(i));
        });
    }
    for (auto& w : workers) w.join();

    CHECK(hub.total_events() == kSessions * kEvents);
    REQUIRE(hub.session_labels().size() == kSessions);

    // Replay sequentially and compare the summary order per session.
    for (int s = 0; s < kSessions; ++s) {
        std::string label = "session-" + std::to_string(s);
        Transcript expected(label);
        for (int i = 0; i < kEvents; ++i)
            expected.record(Direction::ClientToProbe, "tcp", false, "ev-" + std::to_string(i));
        Transcript got = hub.session(label);
        REQUIRE(got.events().size() == static_cast<std::size_t>(kEvents));
        for (int i = 0; i < kEvents; ++i) {
            CHECK(got.events()[i].summary == expected.events()[i].summary);
            if (i > 0) CHECK(got.events()[i].timestamp_ns >= got.events()[i - 1].timestamp_ns);
        }
    }
}

TEST_CASE("finding collector accepts concurrent submissions") {
    FindingCollector collector;
    std::vector<std::thread> workers;
    for (int t = 0; t < 8; ++t) {
        workers.emplace_back([&collector, t] {
            for (int i = 0; i < 50; ++i)
                collector.submit(make_finding(VulnClass::WeakFallback,
                                              "t" + std::to_string(t) + "-" + std::to_string(i),
                                              verdict_secure()));
        });
    }
    for (auto& w : workers) w.join();
    CHECK(collector.size() == 400);
}

TEST_CASE("report JSON round-trip is byte identical") {
    std::vector<Finding> findings;
    findings.push_back(make_finding(VulnClass::PptpOptionalEncryption, "client-x",
                                    verdict_vulnerable({0, 4}, "plaintext after CCP reject")));
    findings.push_back(
        make_finding(VulnClass::SstpIgnoredCertFailure, "client-x", verdict_secure()));
    findings.push_back(make_finding(VulnClass::L2tpKnownPsk, "client-y",
                                    verdict_inconclusive("no tunnel attempt observed")));
    Report report = make_report(findings, "2026-08-16T10:00:00Z");

    std::string text = render_report_json(report);
    Report parsed = parse_report_json(text);
    CHECK(parsed == report);
    std::string text2 = render_report_json(parsed);
    CHECK(text2 == text);
}

TEST_CASE("report rejects duplicate target/class pairs") {
    std::vector<Finding> findings;
    findings.push_back(make_finding(VulnClass::WeakFallback, "client-x", verdict_secure()));
    findings.push_back(
        make_finding(VulnClass::WeakFallback, "client-x", verdict_inconclusive("again")));
    CHECK_THROWS_AS(make_report(findings, "2026-08-16T10:00:00Z"), std::invalid_argument);
}

TEST_CASE("report JSON validates enum fields") {
    std::vector<Finding> findings{
        make_finding(VulnClass::CiscoKnownPsk, "c", verdict_secure())};
    std::string text = render_report_json(make_report(findings, "2026-08-16T10:00:00Z"));
    auto broken = text;
    auto pos = broken.find("cisco-known-psk");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 15, "cisco-kn0wn-psk");
    CHECK_THROWS(parse_report_json(broken));
}

TEST_CASE("matrix rendering") {
    SUBCASE("empty report renders the header row only") {
        Report empty = make_report({}, "2026-08-16T10:00:00Z");
        std::string m = render_report_matrix(empty);
        CHECK(m.find("target |") == 0);
        CHECK(m.find('\n') == m.size() - 1);  // single line
        CHECK(m.find("pptp-optional-encryption") != std::string::npos);
    }

    SUBCASE("single vulnerable finding marks one cell") {
        std::vector<Finding> findings{make_finding(VulnClass::PptpOptionalEncryption, "client-x",
                                                   verdict_vulnerable({1}, "plaintext"))};
        std::string m = render_report_matrix(make_report(findings, "2026-08-16T10:00:00Z"));
        CHECK(m.find("client-x | ✗ – – – – – – – –") !=
              std::string::npos);
    }

    SUBCASE("weak renders as x-mark, secure as check, inconclusive as dash") {
        std::vector<Finding> findings{
            make_finding(VulnClass::PptpOptionalEncryption, "c", verdict_weak({0}, "weak")),
            make_finding(VulnClass::SstpIgnoredCertFailure, "c", verdict_secure()),
            make_finding(VulnClass::Ikev2ImproperServerVerification, "c",
                         verdict_inconclusive("handshake did not finish")),
        };
        std::string m = render_report_matrix(make_report(findings, "2026-08-16T10:00:00Z"));
        CHECK(m.find("c | ✗ ✓ – – – – – – –") !=
              std::string::npos);
    }
}

TEST_CASE("transcript JSON export carries events and hex payloads") {
    Transcript t("sess");
    t.record(Direction::ProbeToClient, "ppp", true, "lcp conf-req", {0x01, 0x02, 0xFF});
    std::string json = transcript_to_json(t);
    CHECK(json.find("\"label\": \"sess\"") != std::string::npos);
    CHECK(json.find("0102ff") != std::string::npos);
    CHECK(json.find("probe-to-client") != std::string::npos);
}
