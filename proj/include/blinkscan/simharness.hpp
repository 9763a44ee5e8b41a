#pragma once

// Synthetic users driving the block-scanning automaton in virtual time, and
// the scorer shared by simulation, trace replay and live sessions.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blinkscan/blockscan.hpp"
#include "blinkscan/scanmetrics.hpp"

namespace blinkscan::simharness {

using blockscan::Region;
using blockscan::ScanConfig;
using blockscan::ScanState;
using scanmetrics::TrialOutcome;

/// How trials are closed.
struct ScoringRules {
    /// A trial is a miss once this many full highlight cycles of the current
    /// phase pass without a blink.
    int budget_cycles = 3;
    /// Selecting Cancel restarts the attempt; the trial becomes a miss when
    /// this many attempts have been cancelled.
    int max_attempts = 3;

    void validate() const;
    friend bool operator==(const ScoringRules&, const ScoringRules&) = default;
};

struct TrialSpec {
    Region target;
    int task_id = 1;
    ScanConfig cfg;

    /// Throws std::invalid_argument if the target is empty or off screen.
    void validate() const;
};

/// Ten tasks spread over the screen, numbered 1 to 10.
std::vector<TrialSpec> default_task_script(const ScanConfig& cfg);

enum class Verdict { Hit, WrongSelection, Missed };

std::string_view to_string(Verdict v);

struct TrialResult {
    int index = 0;
    Region target;
    Verdict verdict = Verdict::Missed;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    int blinks = 0;
    int cancelled_attempts = 0;
    std::optional<blockscan::phase::Done> selection;

    double time_s() const { return static_cast<double>(end_ms - start_ms) / 1000.0; }
    /// One-hot outcome carrying the trial's duration.
    TrialOutcome outcome() const;
};

/// Scores a sequence of trials from blink times in virtual time.
///
/// Each trial starts when the previous one closes. A trial closes as a hit
/// when Click lands inside its target, as a wrong selection when any other
/// non-Cancel action completes or the click misses, and as a miss when the
/// blink budget of the current phase runs out or Cancel was chosen
/// `max_attempts` times.
class TrialRunner {
public:
    struct Observer {
        /// Called whenever the phase, highlight, region or cursor changes,
        /// including the initial state of each trial.
        std::function<void(const ScanState&, std::int64_t t_ms, int trial)> on_state;
        std::function<void(const TrialResult&)> on_result;
    };

    TrialRunner(ScanConfig cfg, std::vector<Region> targets, ScoringRules rules = {},
                std::int64_t t0_ms = 0, Observer observer = {});

    /// Moves virtual time forward, closing trials whose budget runs out.
    void advance_to(std::int64_t t_ms);

    /// Applies a blink at `t_ms`. Returns false when every trial is already
    /// closed and the blink was ignored.
    bool blink_at(std::int64_t t_ms);

    bool finished() const { return current_ >= targets_.size(); }
    std::int64_t now() const { return now_; }
    const ScanState& state() const { return state_; }
    const ScanConfig& config() const { return cfg_; }
    const ScoringRules& rules() const { return rules_; }
    /// Index of the open trial; equals trial_count() when finished.
    std::size_t current_trial() const { return current_; }
    std::size_t trial_count() const { return targets_.size(); }
    const Region& target(std::size_t i) const { return targets_.at(i); }
    /// Time at which the open trial becomes a miss if no blink arrives.
    std::int64_t deadline() const;
    const std::vector<TrialResult>& results() const { return results_; }
    std::int64_t ignored_blinks() const { return ignored_; }

private:
    void start_trial(std::int64_t t);
    void close_trial(Verdict v, std::int64_t t);
    void notify();

    ScanConfig cfg_;
    std::vector<Region> targets_;
    ScoringRules rules_;
    Observer observer_;

    ScanState state_;
    std::size_t current_ = 0;
    std::int64_t now_ = 0;
    std::int64_t trial_start_ = 0;
    std::int64_t last_event_ = 0;
    int blinks_ = 0;
    int cancelled_ = 0;
    std::int64_t ignored_ = 0;
    std::vector<TrialResult> results_;
};

/// Sum of one-hot outcomes; the selection time is the mean trial duration.
TrialOutcome total_outcome(const std::vector<TrialResult>& results);

struct UserModel {
    double reaction_mean_ms = 350;
    double reaction_sd_ms = 0;
    double miss_prob = 0;
    double premature_prob = 0;
    /// Poisson rate of short involuntary dips; only affects synthesized
    /// sensor captures, which the blink detector must reject.
    double involuntary_rate_hz = 0;
    std::uint64_t rng_seed = 1;
    /// The user cannot blink again sooner than this after a blink.
    std::int64_t min_blink_gap_ms = 350;
    /// After descending into a block that misses the target, pick Cancel
    /// from the action menu instead of clicking anyway.
    bool cancel_on_wrong_descent = false;

    /// Throws std::invalid_argument.
    void validate() const;
};

/// Never errs and reacts after `reaction_ms`.
UserModel ideal_user(double reaction_ms = 200);

/// The imperfect user used for the scanning-time sweep.
UserModel default_imperfect_user(std::uint64_t seed = 20240501);

/// True when the item highlighted in `state` is the one the user wants.
bool user_wants_current(const ScanState& state, const Region& target, const ScanConfig& cfg,
                        const UserModel& user);

struct TraceRecord {
    enum class Kind { Blink, Tick };
    std::int64_t t_ms = 0;
    Kind kind = Kind::Blink;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Replayable record of a run: the configuration, the targets in trial order
/// and the blinks. A tick advances virtual time without an event; one is
/// written whenever a trial closes without a blink.
struct BlinkTrace {
    ScanConfig cfg;
    ScoringRules rules;
    std::vector<Region> targets;
    std::vector<TraceRecord> records;

    std::vector<std::int64_t> blink_times() const;
    friend bool operator==(const BlinkTrace&, const BlinkTrace&) = default;
};

struct RunResult {
    std::vector<TrialResult> trials;
    BlinkTrace trace;
};

/// Simulates `user` on one trial. Trial `trial_index` draws from the stream
/// seeded with rng_seed ^ trial_index.
RunResult run_trial(const TrialSpec& spec, const UserModel& user, ScoringRules rules = {},
                    std::uint64_t trial_index = 0);

/// Simulates consecutive trials sharing one configuration.
RunResult run_session(const ScanConfig& cfg, const std::vector<Region>& targets,
                      const UserModel& user, ScoringRules rules = {},
                      std::uint64_t first_trial_index = 0);

struct ReplayResult {
    std::vector<TrialResult> trials;
    /// Trials still open when the input ended; they are left unscored.
    std::size_t open_trials = 0;
    std::int64_t ignored_blinks = 0;

    TrialOutcome total() const { return total_outcome(trials); }
};

/// Replays a trace through a fresh runner.
ReplayResult replay(const BlinkTrace& trace, TrialRunner::Observer observer = {});

/// Replays bare blink times, then advances to `end_ms` if given.
ReplayResult replay_blinks(const ScanConfig& cfg, const ScoringRules& rules,
                           const std::vector<Region>& targets,
                           const std::vector<std::int64_t>& blink_times,
                           std::optional<std::int64_t> end_ms = std::nullopt,
                           TrialRunner::Observer observer = {});

struct SweepPoint {
    std::int64_t interval_ms = 0;
    std::size_t n_trials = 0;
    std::size_t scored_sessions = 0;
    scanmetrics::MetricsSummary summary;
};

struct SweepOptions {
    ScanConfig base;
    ScoringRules rules;
    /// Trials are grouped into sessions of this many tasks, one per target of
    /// the default task script in turn; each session is scored like one user.
    int tasks_per_session = 10;
    unsigned threads = 0;  // 0 = hardware concurrency
};

/// Runs `n_trials` trials per interval and aggregates per-session summaries.
/// Trial i uses the same random stream at every interval. Deterministic for
/// a fixed seed regardless of thread count.
std::vector<SweepPoint> sweep(const std::vector<std::int64_t>& intervals_ms, const UserModel& user,
                              std::size_t n_trials, const SweepOptions& opts = {});

/// Columns interval_ms,n,sa,far,sr,avg_time_s.
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace blinkscan::simharness
