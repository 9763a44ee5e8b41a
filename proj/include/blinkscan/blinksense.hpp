#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace blinkscan::blinksense {

/// Full scale of the 10-bit ADC on the sensor link.
inline constexpr int kAdcMax = 1023;

/// One timestamped ADC reading from the phototransistor.
struct SensorSample {
    std::int64_t t_ms = 0;
    int v = 0;

    friend bool operator==(const SensorSample&, const SensorSample&) = default;
};

/// Voltage bands and debounce timing for blink detection.
///
/// Readings at or above `base_floor` are the open-eye base level. Readings at
/// or below `blink_threshold` are blink candidates. Everything in between is
/// the garbage band produced by involuntary blinks and is ignored.
struct SignalThresholds {
    int blink_threshold = 300;
    int base_floor = 600;
    std::int64_t min_blink_ms = 60;
    std::int64_t refractory_ms = 200;

    /// Throws std::invalid_argument when the band ordering or timings are
    /// inconsistent.
    void validate() const;

    friend bool operator==(const SignalThresholds&, const SignalThresholds&) = default;
};

struct BlinkEvent {
    std::int64_t onset_t = 0;
    std::int64_t duration_ms = 0;

    friend bool operator==(const BlinkEvent&, const BlinkEvent&) = default;
};

enum class SampleClass { Base, Garbage, BlinkCandidate };

class NonMonotonicTimestamps : public std::runtime_error {
public:
    NonMonotonicTimestamps(std::int64_t previous, std::int64_t current);
};

class InseparableDistributions : public std::runtime_error {
public:
    InseparableDistributions(int min_idle, int max_blink);
};

SampleClass classify_sample(const SensorSample& s, const SignalThresholds& th);

/// Incremental detector. A run of blink-candidate samples closes at the first
/// sample that leaves the candidate band; its duration is measured up to that
/// sample. Runs shorter than `min_blink_ms`, or starting before the previous
/// event's end plus `refractory_ms`, are dropped.
class BlinkDetector {
public:
    explicit BlinkDetector(SignalThresholds th);

    /// Returns the event closed by this sample, if any.
    std::optional<BlinkEvent> push(const SensorSample& s);

    /// Closes a run still open at end of stream, measured to the last sample.
    std::optional<BlinkEvent> finish();

    const SignalThresholds& thresholds() const { return th_; }

private:
    std::optional<BlinkEvent> close_run(std::int64_t end_t);

    SignalThresholds th_;
    std::optional<std::int64_t> last_t_;
    std::optional<std::int64_t> run_onset_;
    std::optional<std::int64_t> last_event_end_;
};

std::vector<BlinkEvent> detect_blinks(std::span<const SensorSample> stream,
                                      const SignalThresholds& th);

/// Derives thresholds from a recording of open-eye samples and a recording of
/// deliberate blinks. The blink threshold sits halfway between the two
/// distributions; the base floor is the nearest-rank 10th percentile of the
/// idle readings. Debounce timings keep their defaults.
SignalThresholds calibrate_threshold(std::span<const SensorSample> idle_samples,
                                     std::span<const SensorSample> blink_samples);

}  // namespace blinkscan::blinksense
