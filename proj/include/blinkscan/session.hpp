#pragma once

// Live session engine.
//
// The engine owns one TrialRunner and turns inbound events (client blinks,
// sensor samples, raw frame bytes, time advances) into StateUpdate,
// TargetSet and MetricsReport messages. run_session() pumps a transport into
// it; the other entry points drive it headless.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "blinkscan/blinksense.hpp"
#include "blinkscan/linkframe.hpp"
#include "blinkscan/messages.hpp"
#include "blinkscan/published_tables.hpp"
#include "blinkscan/scanmetrics.hpp"
#include "blinkscan/simharness.hpp"
#include "blinkscan/transport.hpp"

namespace blinkscan::sessiond {

class ConfigInvalid : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class InputSource {
    ClientBlinks,  // BlinkIn messages
    LiveFrames,    // SampleIn messages carrying samples or raw frame bytes
    Trace,         // a trace file, headless
    Capture,       // a .blk capture file, headless
};

std::string_view to_string(InputSource s);
std::optional<InputSource> parse_input_source(std::string_view s);

struct SessionConfig {
    blockscan::ScanConfig scan;
    blinksense::SignalThresholds thresholds;
    simharness::ScoringRules rules;
    InputSource input = InputSource::ClientBlinks;
    /// Required for Trace and Capture input.
    std::optional<std::filesystem::path> input_path;
    std::vector<simharness::TrialSpec> tasks;
    /// Virtual time takes timestamps from the messages; wall-clock time
    /// stamps events on arrival and advances highlights by itself.
    bool virtual_time = true;
    /// Per-task log written at session end.
    std::optional<std::filesystem::path> task_log;

    /// Throws ConfigInvalid.
    void validate() const;
};

struct SessionReport {
    std::vector<simharness::TrialResult> trials;
    std::vector<int> task_ids;
    scanmetrics::TrialOutcome total;
    /// Absent when nothing was attempted.
    std::optional<scanmetrics::MetricsSummary> summary;
    std::size_t open_trials = 0;
    /// True when the session ended before every task closed.
    bool partial = false;
    std::int64_t end_ms = 0;

    std::vector<scanmetrics::TaskLogRow> task_log() const;
    /// MetricsReport payload.
    Json to_json(bool final_report = true) const;
};

class Engine {
public:
    using Sink = std::function<void(const Message&)>;

    Engine(SessionConfig cfg, Sink sink);

    /// Emits SessionControl "started", then TargetSet and StateUpdate for the
    /// first task.
    void start();

    /// Handles one client-to-engine message. In wall-clock mode `arrival_ms`
    /// replaces message timestamps.
    void handle(const Message& m, std::optional<std::int64_t> arrival_ms = std::nullopt);

    void advance_to(std::int64_t t_ms);
    /// Returns false if rejected (session over or time running backwards).
    bool blink(std::int64_t t_ms);
    void sample(const blinksense::SensorSample& s);
    void frame_bytes(std::span<const std::uint8_t> bytes);

    bool tasks_done() const { return runner_.finished(); }
    std::int64_t now() const { return runner_.now(); }
    std::int64_t next_change_ms() const;
    const simharness::TrialRunner& runner() const { return runner_; }

    /// Flushes sensor input, emits the final MetricsReport and SessionControl
    /// "ended", and writes the task log if configured.
    SessionReport finish();

    /// Blinks applied so far plus a closing tick; replays to the same report.
    simharness::BlinkTrace recorded_trace() const;

private:
    void emit(Kind kind, Json payload);
    void reject(const std::string& reason, const Message* m);
    void sensor_event(const std::optional<blinksense::BlinkEvent>& e);
    SessionReport report() const;

    SessionConfig cfg_;
    Sink sink_;
    std::uint64_t seq_ = 0;
    int announced_trial_ = -1;
    simharness::TrialRunner runner_;
    blinksense::BlinkDetector detector_;
    linkframe::StreamDecoder decoder_;
    std::optional<std::int64_t> last_sample_t_;
    std::vector<std::int64_t> blinks_;
    bool finished_ = false;
    bool stopped_ = false;

    friend SessionReport run_session(const SessionConfig&, Transport&);
};

/// Runs a session to completion over `transport`. Ends when every task is
/// closed, on SessionControl "stop", or when the peer disconnects; the last
/// two give a partial report with open tasks unscored.
SessionReport run_session(const SessionConfig& cfg, Transport& transport);

/// Headless replay of a trace through the engine.
SessionReport run_trace(const SessionConfig& cfg, const simharness::BlinkTrace& trace,
                        const Engine::Sink& sink = {});

/// Headless run from capture bytes through decoder and detector.
SessionReport run_capture(const SessionConfig& cfg, std::span<const std::uint8_t> bytes,
                          const Engine::Sink& sink = {});

/// Session configuration matching a trace's scan settings, rules and targets.
SessionConfig config_for_trace(const simharness::BlinkTrace& trace);

}  // namespace blinkscan::sessiond
