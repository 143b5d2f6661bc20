#include "vpnprobe/core/transcript.hpp"

#include <chrono>

namespace vpnprobe {

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::ClientToProbe: return "client-to-probe";
        case Direction::ProbeToClient: return "probe-to-client";
        case Direction::ProbeToUpstream: return "probe-to-upstream";
        case Direction::UpstreamToProbe: return "upstream-to-probe";
        case Direction::Local: return "local";
    }
    return "";
}

std::optional<Direction> direction_from_string(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(Direction::Local); ++i) {
        auto d = static_cast<Direction>(i);
        if (to_string(d) == s) return d;
    }
    return std::nullopt;
}

Transcript::Transcript(std::string label) : label_(std::move(label)) {
    wall_clock_start_ms_ = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
}

std::int64_t Transcript::monotonic_now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::size_t Transcript::record(TranscriptEvent ev) {
    if (!events_.empty() && ev.timestamp_ns < events_.back().timestamp_ns)
        throw TranscriptOrderError("event timestamp precedes the previous event in session '" +
                                   label_ + "'");
    events_.push_back(std::move(ev));
    return events_.size() - 1;
}

std::size_t Transcript::record(Direction d, std::string layer, bool plaintext,
                               std::string summary, std::vector<std::uint8_t> raw) {
    TranscriptEvent ev;
    ev.timestamp_ns = monotonic_now_ns();
    // The steady clock can tick coarser than the append rate; clamp so the
    // convenience path never trips the ordering check.
    if (!events_.empty() && ev.timestamp_ns < events_.back().timestamp_ns)
        ev.timestamp_ns = events_.back().timestamp_ns;
    ev.direction = d;
    ev.layer = std::move(layer);
    ev.plaintext = plaintext;
    ev.summary = std::move(summary);
    ev.raw = std::move(raw);
    return record(std::move(ev));
}

std::size_t TranscriptHub::record(const std::string& session, TranscriptEvent ev) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session);
    if (it == sessions_.end()) it = sessions_.emplace(session, Transcript(session)).first;
    return it->second.record(std::move(ev));
}

std::size_t TranscriptHub::record(const std::string& session, Direction d, std::string layer,
                                  bool plaintext, std::string summary,
                                  std::vector<std::uint8_t> raw) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session);
    if (it == sessions_.end()) it = sessions_.emplace(session, Transcript(session)).first;
    return it->second.record(d, std::move(layer), plaintext, std::move(summary), std::move(raw));
}

std::vector<std::string> TranscriptHub::session_labels() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    out.reserve(sessions_.size());
    for (const auto& [label, _] : sessions_) out.push_back(label);
    return out;
}

Transcript TranscriptHub::session(const std::string& label) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(label);
    if (it == sessions_.end()) throw std::out_of_range("no such session: " + label);
    return it->second;
}

std::size_t TranscriptHub::total_events() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [_, t] : sessions_) n += t.events().size();
    return n;
}

void FindingCollector::submit(Finding f) {
    std::lock_guard lock(mutex_);
    findings_.push_back(std::move(f));
}

std::vector<Finding> FindingCollector::snapshot() const {
    std::lock_guard lock(mutex_);
    return findings_;
}

std::size_t FindingCollector::size() const {
    std::lock_guard lock(mutex_);
    return findings_.size();
}

}  // namespace vpnprobe
