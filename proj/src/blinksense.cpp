#include "blinkscan/blinksense.hpp"

#include <algorithm>
#include <string>

namespace blinkscan::blinksense {

void SignalThresholds::validate() const {
    if (blink_threshold < 0 || base_floor > kAdcMax || blink_threshold >= base_floor) {
        throw std::invalid_argument("thresholds must satisfy 0 <= blink_threshold < base_floor <= " +
                                    std::to_string(kAdcMax));
    }
    if (min_blink_ms <= 0) throw std::invalid_argument("min_blink_ms must be positive");
    if (refractory_ms < 0) throw std::invalid_argument("refractory_ms must be non-negative");
}

NonMonotonicTimestamps::NonMonotonicTimestamps(std::int64_t previous, std::int64_t current)
    : std::runtime_error("non-monotonic timestamps: " + std::to_string(current) +
                         " after " + std::to_string(previous)) {}

InseparableDistributions::InseparableDistributions(int min_idle, int max_blink)
    : std::runtime_error("inseparable distributions: min idle " + std::to_string(min_idle) +
                         " <= max blink " + std::to_string(max_blink)) {}

SampleClass classify_sample(const SensorSample& s, const SignalThresholds& th) {
    if (s.v >= th.base_floor) return SampleClass::Base;
    if (s.v <= th.blink_threshold) return SampleClass::BlinkCandidate;
    return SampleClass::Garbage;
}

BlinkDetector::BlinkDetector(SignalThresholds th) : th_(th) { th_.validate(); }

std::optional<BlinkEvent> BlinkDetector::push(const SensorSample& s) {
    if (last_t_ && s.t_ms <= *last_t_) throw NonMonotonicTimestamps(*last_t_, s.t_ms);
    last_t_ = s.t_ms;

    const bool candidate = classify_sample(s, th_) == SampleClass::BlinkCandidate;
    if (candidate) {
        if (!run_onset_) run_onset_ = s.t_ms;
        return std::nullopt;
    }
    if (run_onset_) return close_run(s.t_ms);
    return std::nullopt;
}

std::optional<BlinkEvent> BlinkDetector::finish() {
    if (!run_onset_) return std::nullopt;
    return close_run(*last_t_);
}

std::optional<BlinkEvent> BlinkDetector::close_run(std::int64_t end_t) {
    const std::int64_t onset = *run_onset_;
    run_onset_.reset();
    const std::int64_t duration = end_t - onset;
    if (duration < th_.min_blink_ms) return std::nullopt;
    if (last_event_end_ && onset < *last_event_end_ + th_.refractory_ms) return std::nullopt;
    last_event_end_ = end_t;
    return BlinkEvent{onset, duration};
}

std::vector<BlinkEvent> detect_blinks(std::span<const SensorSample> stream,
                                      const SignalThresholds& th) {
    BlinkDetector det(th);
    std::vector<BlinkEvent> out;
    for (const auto& s : stream) {
        if (auto e = det.push(s)) out.push_back(*e);
    }
    if (auto e = det.finish()) out.push_back(*e);
    return out;
}

SignalThresholds calibrate_threshold(std::span<const SensorSample> idle_samples,
                                     std::span<const SensorSample> blink_samples) {
    if (idle_samples.empty() || blink_samples.empty()) {
        throw std::invalid_argument("calibration needs both idle and blink samples");
    }
    std::vector<int> idle;
    idle.reserve(idle_samples.size());
    for (const auto& s : idle_samples) idle.push_back(s.v);
    std::sort(idle.begin(), idle.end());

    int max_blink = 0;
    for (const auto& s : blink_samples) max_blink = std::max(max_blink, s.v);

    const int min_idle = idle.front();
    if (min_idle <= max_blink) throw InseparableDistributions(min_idle, max_blink);

    // Nearest rank: ceil(p * N), 1-based.
    const std::size_t rank = (idle.size() + 9) / 10;

    SignalThresholds th;
    th.blink_threshold = (min_idle + max_blink) / 2;
    th.base_floor = idle[std::max<std::size_t>(rank, 1) - 1];
    th.validate();
    return th;
}

}  // namespace blinkscan::blinksense
