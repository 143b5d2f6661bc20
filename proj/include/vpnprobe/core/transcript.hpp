#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpnprobe/core/types.hpp"

namespace vpnprobe {

// Direction of an observed exchange relative to the probe/relay.
enum class Direction {
    ClientToProbe,
    ProbeToClient,
    ProbeToUpstream,
    UpstreamToProbe,
    Local,  // host-local observation (files, sockets, process args)
};

std::string_view to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view s);

struct TranscriptEvent {
    std::int64_t timestamp_ns = 0;  // monotonic within a session
    Direction direction = Direction::Local;
    std::string layer;              // e.g. "tcp", "tls", "ppp", "gre", "ike", "mgmt", "file"
    bool plaintext = false;         // true when payload crossed the wire unprotected
    std::string summary;
    std::vector<std::uint8_t> raw;  // optional raw bytes

    bool operator==(const TranscriptEvent&) const = default;
};

struct TranscriptOrderError : std::logic_error {
    using std::logic_error::logic_error;
};

// Ordered event log for one probe session.  Timestamps must be
// non-decreasing; a stale timestamp is rejected rather than silently
// reordered so that evidence indices stay trustworthy.
class Transcript {
public:
    Transcript() = default;
    explicit Transcript(std::string label);

    // Appends a fully formed event; returns its index.
    std::size_t record(TranscriptEvent ev);

    // Convenience: stamps the event with the current monotonic clock.
    std::size_t record(Direction d, std::string layer, bool plaintext, std::string summary,
                       std::vector<std::uint8_t> raw = {});

    const std::vector<TranscriptEvent>& events() const { return events_; }
    const std::string& label() const { return label_; }

    // Wall-clock session start (Unix milliseconds); metadata only, event
    // timestamps come from the monotonic clock.
    std::int64_t wall_clock_start_ms() const { return wall_clock_start_ms_; }

    static std::int64_t monotonic_now_ns();

private:
    std::string label_;
    std::int64_t wall_clock_start_ms_ = 0;
    std::vector<TranscriptEvent> events_;
};

// Serializes appends from concurrently running probe sessions into
// per-session transcripts.
class TranscriptHub {
public:
    std::size_t record(const std::string& session, TranscriptEvent ev);
    std::size_t record(const std::string& session, Direction d, std::string layer, bool plaintext,
                       std::string summary, std::vector<std::uint8_t> raw = {});

    std::vector<std::string> session_labels() const;
    // Snapshot copy of one session's transcript.
    Transcript session(const std::string& label) const;
    std::size_t total_events() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, Transcript> sessions_;
};

// Thread-safe sink for findings produced by concurrently running probes.
class FindingCollector {
public:
    void submit(Finding f);
    std::vector<Finding> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<Finding> findings_;
};

}  // namespace vpnprobe
