#include <algorithm>
#include <cmath>
#include <random>

#include "blinkscan/capture.hpp"

namespace blinkscan::simharness {

using blinksense::SensorSample;

void CaptureSpec::validate() const {
    thresholds.validate();
    if (period_ms < 1 || period_ms > linkframe::kMaxDt) {
        throw std::invalid_argument("capture period must lie in [1,255] ms");
    }
    if (dip_ms < thresholds.min_blink_ms || dip_ms % period_ms != 0) {
        throw std::invalid_argument("dip length must be a whole number of periods >= min_blink_ms");
    }
    if (base_level - base_noise < thresholds.base_floor || base_level + base_noise > blinksense::kAdcMax) {
        throw std::invalid_argument("base band must stay above base_floor");
    }
    if (dip_level - dip_noise < 0 || dip_level + dip_noise > thresholds.blink_threshold) {
        throw std::invalid_argument("dip band must stay at or below blink_threshold");
    }
    if (garbage_level <= thresholds.blink_threshold || garbage_level >= thresholds.base_floor) {
        throw std::invalid_argument("garbage level must lie between the thresholds");
    }
    if (short_dip_ms >= thresholds.min_blink_ms) {
        throw std::invalid_argument("short dips must be shorter than min_blink_ms");
    }
    if (!(involuntary_rate_hz >= 0)) throw std::invalid_argument("involuntary rate must be >= 0");
}

std::vector<std::int64_t> snap_to_grid(std::span<const std::int64_t> times, std::int64_t period_ms) {
    std::vector<std::int64_t> out;
    for (const auto t : times) {
        std::int64_t g = (t + period_ms - 1) / period_ms * period_ms;
        if (!out.empty()) g = std::max(g, out.back() + period_ms);
        out.push_back(g);
    }
    return out;
}

std::vector<SensorSample> synthesize_samples(std::span<const std::int64_t> blink_times,
                                             std::int64_t end_ms, const CaptureSpec& spec) {
    spec.validate();
    const auto& th = spec.thresholds;
    const std::int64_t p = spec.period_ms;
    for (std::size_t i = 0; i < blink_times.size(); ++i) {
        if (blink_times[i] < 0 || blink_times[i] % p != 0) {
            throw std::invalid_argument("blink times must lie on the sampling grid");
        }
        if (i > 0 && blink_times[i] < blink_times[i - 1] + spec.dip_ms + th.refractory_ms) {
            throw std::invalid_argument("blinks too close for the detector's refractory period");
        }
    }
    std::int64_t last = end_ms;
    if (!blink_times.empty()) last = std::max(last, blink_times.back() + spec.dip_ms + spec.tail_ms);
    last = (last + p - 1) / p * p;
    const std::size_t n = static_cast<std::size_t>(last / p) + 1;

    enum class Kind : std::uint8_t { Base, Blink, Garbage, Short };
    std::vector<Kind> kind(n, Kind::Base);
    // Samples around each blink that involuntary dips must avoid.
    std::vector<bool> reserved(n, false);
    const std::int64_t guard = th.refractory_ms + spec.dip_ms;
    for (const auto b : blink_times) {
        const auto first = static_cast<std::size_t>(b / p);
        const auto len = static_cast<std::size_t>(spec.dip_ms / p);
        for (std::size_t k = first; k < first + len && k < n; ++k) kind[k] = Kind::Blink;
        const std::int64_t lo = std::max<std::int64_t>(0, b - guard);
        const std::int64_t hi = b + spec.dip_ms + guard;
        for (std::int64_t t = lo; t <= hi && t / p < static_cast<std::int64_t>(n); t += p) {
            reserved[static_cast<std::size_t>(t / p)] = true;
        }
    }

    std::mt19937_64 rng(spec.seed);
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    if (spec.involuntary_rate_hz > 0) {
        double t = 0;
        for (;;) {
            t += -std::log(1.0 - uniform()) * 1000.0 / spec.involuntary_rate_hz;
            if (t >= static_cast<double>(last)) break;
            const bool garbage = uniform() < 0.5;
            const std::int64_t len_ms = garbage ? 100 + static_cast<std::int64_t>(uniform() * 200)
                                                : spec.short_dip_ms;
            const auto first = static_cast<std::size_t>(static_cast<std::int64_t>(t) / p);
            const auto len = static_cast<std::size_t>(std::max<std::int64_t>(1, len_ms / p));
            // Keep a base sample on both sides so dips never merge.
            if (first == 0 || first + len + 1 >= n) continue;
            bool clear = true;
            for (std::size_t k = first - 1; k <= first + len; ++k) {
                if (reserved[k] || kind[k] != Kind::Base) clear = false;
            }
            if (!clear) continue;
            for (std::size_t k = first; k < first + len; ++k) kind[k] = garbage ? Kind::Garbage : Kind::Short;
        }
    }

    auto jitter = [&](int level, int noise) {
        const double u = uniform();
        return level + static_cast<int>(std::floor((2 * u - 1) * noise));
    };
    std::vector<SensorSample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        int v = 0;
        switch (kind[k]) {
            case Kind::Base: v = jitter(spec.base_level, spec.base_noise); break;
            case Kind::Blink:
            case Kind::Short: v = jitter(spec.dip_level, spec.dip_noise); break;
            case Kind::Garbage: {
                const int room = std::min(spec.garbage_level - th.blink_threshold - 1,
                                          th.base_floor - 1 - spec.garbage_level);
                v = jitter(spec.garbage_level, std::min(room, 50));
                break;
            }
        }
        out.push_back({static_cast<std::int64_t>(k) * p, v});
    }
    return out;
}

std::vector<std::uint8_t> synthesize_capture(std::span<const std::int64_t> blink_times,
                                             std::int64_t end_ms, const CaptureSpec& spec) {
    const auto samples = synthesize_samples(blink_times, end_ms, spec);
    return linkframe::encode_samples(samples);
}

CaptureReplay replay_capture(std::span<const std::uint8_t> bytes, const ScanConfig& cfg,
                             const ScoringRules& rules, const std::vector<Region>& targets,
                             const blinksense::SignalThresholds& thresholds,
                             TrialRunner::Observer observer) {
    CaptureReplay out;
    const auto decoded = linkframe::decode_stream(bytes);
    out.stats = decoded.stats;
    out.events = blinksense::detect_blinks(decoded.samples, thresholds);
    out.end_ms = decoded.samples.empty() ? 0 : decoded.samples.back().t_ms;
    std::vector<std::int64_t> times;
    for (const auto& e : out.events) times.push_back(e.onset_t);
    out.replay = replay_blinks(cfg, rules, targets, times, out.end_ms, std::move(observer));
    return out;
}

}  // namespace blinkscan::simharness
