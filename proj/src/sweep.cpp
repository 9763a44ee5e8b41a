#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "blinkscan/simharness.hpp"

namespace blinkscan::simharness {

std::vector<SweepPoint> sweep(const std::vector<std::int64_t>& intervals_ms, const UserModel& user,
                              std::size_t n_trials, const SweepOptions& opts) {
    if (n_trials < 1) throw std::invalid_argument("sweep: n_trials must be >= 1");
    if (opts.tasks_per_session < 1) throw std::invalid_argument("sweep: tasks_per_session must be >= 1");
    user.validate();
    opts.rules.validate();

    std::vector<std::vector<TrialSpec>> scripts;
    for (const auto interval : intervals_ms) {
        ScanConfig cfg = opts.base;
        cfg.scan_interval_ms = interval;
        cfg.validate();
        scripts.push_back(default_task_script(cfg));
    }

    const std::size_t jobs = intervals_ms.size() * n_trials;
    std::vector<TrialResult> results(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs;) {
            const std::size_t point = j / n_trials;
            const std::size_t i = j % n_trials;
            const auto& script = scripts[point];
            const auto& spec = script[(i % static_cast<std::size_t>(opts.tasks_per_session)) % script.size()];
            results[j] = run_trial(spec, user, opts.rules, i).trials.front();
        }
    };
    unsigned n_threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, jobs));
    std::vector<std::jthread> pool;
    for (unsigned k = 1; k < n_threads; ++k) pool.emplace_back(worker);
    worker();
    pool.clear();

    std::vector<SweepPoint> out;
    const auto per_session = static_cast<std::size_t>(opts.tasks_per_session);
    for (std::size_t p = 0; p < intervals_ms.size(); ++p) {
        SweepPoint pt;
        pt.interval_ms = intervals_ms[p];
        pt.n_trials = n_trials;
        std::vector<scanmetrics::UserRecord> sessions;
        for (std::size_t s = 0; s < n_trials; s += per_session) {
            const std::size_t end = std::min(n_trials, s + per_session);
            const std::vector<TrialResult> group(results.begin() + static_cast<std::ptrdiff_t>(p * n_trials + s),
                                                 results.begin() + static_cast<std::ptrdiff_t>(p * n_trials + end));
            scanmetrics::UserRecord rec;
            rec.outcome = total_outcome(group);
            try {
                rec.summary = scanmetrics::summarize(rec.outcome);
            } catch (const scanmetrics::EmptyDenominator&) {
                continue;
            }
            sessions.push_back(rec);
        }
        pt.scored_sessions = sessions.size();
        if (sessions.empty()) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            pt.summary = {nan, nan, nan, std::nullopt};
        } else {
            pt.summary = scanmetrics::aggregate(sessions);
        }
        out.push_back(pt);
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = "interval_ms,n,sa,far,sr,avg_time_s\n";
    char line[256];
    for (const auto& p : points) {
        const double time = p.summary.avg_selection_time_s.value_or(std::nan(""));
        std::snprintf(line, sizeof line, "%lld,%zu,%.3f,%.3f,%.3f,%.3f\n",
                      static_cast<long long>(p.interval_ms), p.n_trials, p.summary.sa_pct,
                      p.summary.far_pct, p.summary.sr_pct, time);
        out += line;
    }
    return out;
}

}  // namespace blinkscan::simharness
