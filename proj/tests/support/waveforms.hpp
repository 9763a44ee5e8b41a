#pragma once

// Synthetic sensor waveforms and a brute-force blink oracle, shared by the
// unit and acceptance suites. Nothing here calls into the detector.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "blinkscan/blinksense.hpp"

namespace blinkscan::testing {

using blinksense::BlinkEvent;
using blinksense::SensorSample;
using blinksense::SignalThresholds;

struct PlantedDip {
    std::int64_t start_ms;
    std::int64_t length_ms;
    int level;
};

struct Waveform {
    std::vector<SensorSample> samples;
    std::vector<PlantedDip> dips;
};

// Index-based scan: find each maximal run of samples at or below the
// threshold, measure it to the first sample after it (or the last sample at
// end of stream), then filter by length and refractory gap.
inline std::vector<BlinkEvent> brute_force_runs(const std::vector<SensorSample>& s,
                                                const SignalThresholds& th) {
    std::vector<BlinkEvent> out;
    std::optional<std::int64_t> last_end;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool starts_run = s[i].v <= th.blink_threshold &&
                                (i == 0 || s[i - 1].v > th.blink_threshold);
        if (!starts_run) continue;
        std::size_t j = i;
        while (j < n && s[j].v <= th.blink_threshold) ++j;
        const std::int64_t end = j < n ? s[j].t_ms : s[j - 1].t_ms;
        const std::int64_t len = end - s[i].t_ms;
        if (len < th.min_blink_ms) continue;
        if (last_end && s[i].t_ms < *last_end + th.refractory_ms) continue;
        out.push_back({s[i].t_ms, len});
        last_end = end;
    }
    return out;
}

struct WaveformSpec {
    int n_long = 5;       // dips at blink depth lasting >= min_blink_ms
    int n_short = 3;      // dips at blink depth shorter than min_blink_ms
    int n_garbage = 0;    // dips that stay strictly above the blink threshold
    std::int64_t period_ms = 10;
    std::int64_t gap_ms = 400;  // quiet time between consecutive dips
};

// Base level around 700 with +/-15 noise; blink dips reach 100..250, garbage
// dips 320..560 (thresholds 300/600).
inline Waveform planted_waveform(std::mt19937_64& rng, const WaveformSpec& spec) {
    std::uniform_int_distribution<int> noise(-15, 15);
    std::uniform_int_distribution<int> blink_level(100, 250);
    std::uniform_int_distribution<int> garbage_level(320, 560);
    std::uniform_int_distribution<std::int64_t> long_len(100, 300);
    std::uniform_int_distribution<std::int64_t> short_len(5, 35);
    std::uniform_int_distribution<std::int64_t> garbage_len(50, 400);
    std::uniform_int_distribution<std::int64_t> jitter(0, 200);

    std::vector<int> kinds;
    kinds.insert(kinds.end(), spec.n_long, 0);
    kinds.insert(kinds.end(), spec.n_short, 1);
    kinds.insert(kinds.end(), spec.n_garbage, 2);
    std::shuffle(kinds.begin(), kinds.end(), rng);

    Waveform w;
    std::int64_t cursor = spec.gap_ms + jitter(rng);
    for (int kind : kinds) {
        PlantedDip d{};
        d.start_ms = cursor;
        if (kind == 0) {
            d.length_ms = long_len(rng);
            d.level = blink_level(rng);
        } else if (kind == 1) {
            d.length_ms = short_len(rng);
            d.level = blink_level(rng);
        } else {
            d.length_ms = garbage_len(rng);
            d.level = garbage_level(rng);
        }
        w.dips.push_back(d);
        cursor += d.length_ms + spec.gap_ms + jitter(rng);
    }
    const std::int64_t end = cursor + spec.gap_ms;
    for (std::int64_t t = 0; t < end; t += spec.period_ms) {
        int v = 700 + noise(rng);
        for (const auto& d : w.dips) {
            if (t >= d.start_ms && t < d.start_ms + d.length_ms) v = d.level;
        }
        w.samples.push_back({t, std::clamp(v, 0, blinksense::kAdcMax)});
    }
    return w;
}

// Fully random stream: irregular timestamps and levels drawn from all three
// bands, with sticky runs so multi-sample dips are common.
inline std::vector<SensorSample> random_stream(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<std::int64_t> dt(1, 40);
    std::uniform_int_distribution<int> band(0, 2);
    std::uniform_int_distribution<int> stay(0, 9);
    std::uniform_int_distribution<int> lo(0, 300), mid(301, 599), hi(600, 1023);
    std::vector<SensorSample> s;
    s.reserve(n);
    std::int64_t t = dt(rng);
    int b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (stay(rng) < 3) b = band(rng);
        const int v = b == 0 ? hi(rng) : b == 1 ? mid(rng) : lo(rng);
        s.push_back({t, v});
        t += dt(rng);
    }
    return s;
}

}  // namespace blinkscan::testing
