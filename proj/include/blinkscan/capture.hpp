#pragma once

// Synthetic sensor captures with planted blink dips, and the decode path that
// turns a `.blk` capture back into blink times for the scorer.

#include <cstdint>
#include <span>
#include <vector>

#include "blinkscan/blinksense.hpp"
#include "blinkscan/linkframe.hpp"
#include "blinkscan/simharness.hpp"

namespace blinkscan::simharness {

struct CaptureSpec {
    std::int64_t period_ms = 10;
    std::int64_t dip_ms = 120;
    int base_level = 820;
    int base_noise = 40;
    int dip_level = 150;
    int dip_noise = 60;
    /// Rate of involuntary dips: either garbage-band dips or sub-threshold
    /// dips shorter than the minimum blink. Neither may be detected.
    double involuntary_rate_hz = 0;
    int garbage_level = 450;
    std::int64_t short_dip_ms = 30;
    std::int64_t tail_ms = 1000;
    std::uint64_t seed = 7;
    blinksense::SignalThresholds thresholds;

    void validate() const;
};

/// Rounds every time up to the sampling grid, keeping the order strict.
std::vector<std::int64_t> snap_to_grid(std::span<const std::int64_t> times, std::int64_t period_ms);

/// Samples from t = 0 to the later of `end_ms` and the last dip plus the
/// tail. Each blink time must lie on the grid and leave room for the
/// detector's refractory period after the previous dip.
std::vector<blinksense::SensorSample> synthesize_samples(std::span<const std::int64_t> blink_times,
                                                         std::int64_t end_ms, const CaptureSpec& spec);

std::vector<std::uint8_t> synthesize_capture(std::span<const std::int64_t> blink_times,
                                             std::int64_t end_ms, const CaptureSpec& spec);

struct CaptureReplay {
    ReplayResult replay;
    std::vector<blinksense::BlinkEvent> events;
    linkframe::DecodeStats stats;
    std::int64_t end_ms = 0;
};

/// Decodes a capture, detects blinks and scores them against `targets`.
CaptureReplay replay_capture(std::span<const std::uint8_t> bytes, const ScanConfig& cfg,
                             const ScoringRules& rules, const std::vector<Region>& targets,
                             const blinksense::SignalThresholds& thresholds = {},
                             TrialRunner::Observer observer = {});

}  // namespace blinkscan::simharness
