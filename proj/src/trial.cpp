#include <algorithm>
#include <cmath>

#include "blinkscan/simharness.hpp"

namespace blinkscan::simharness {

namespace bs = blockscan;

void ScoringRules::validate() const {
    if (budget_cycles < 1) throw std::invalid_argument("budget_cycles must be >= 1");
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

void TrialSpec::validate() const {
    cfg.validate();
    if (target.empty()) throw std::invalid_argument("empty target");
    if (!cfg.screen.contains(target)) throw std::invalid_argument("target lies outside the screen");
    if (task_id < 1) throw std::invalid_argument("task_id must be >= 1");
}

std::vector<TrialSpec> default_task_script(const ScanConfig& cfg) {
    static constexpr double kPos[10][2] = {
        {0.08, 0.10}, {0.30, 0.20}, {0.55, 0.12}, {0.85, 0.30}, {0.12, 0.50},
        {0.45, 0.45}, {0.70, 0.60}, {0.20, 0.85}, {0.60, 0.80}, {0.90, 0.88},
    };
    const Region& scr = cfg.screen;
    const int w = std::max(1, scr.w / 24);
    const int h = std::max(1, scr.h / 24);
    std::vector<TrialSpec> out;
    for (int i = 0; i < 10; ++i) {
        const int cx = scr.x + static_cast<int>(kPos[i][0] * scr.w);
        const int cy = scr.y + static_cast<int>(kPos[i][1] * scr.h);
        const int x = std::clamp(cx - w / 2, scr.x, scr.x + scr.w - w);
        const int y = std::clamp(cy - h / 2, scr.y, scr.y + scr.h - h);
        out.push_back({Region{x, y, w, h}, i + 1, cfg});
    }
    return out;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Hit: return "hit";
        case Verdict::WrongSelection: return "wrong_selection";
        case Verdict::Missed: return "missed";
    }
    return "?";
}

TrialOutcome TrialResult::outcome() const {
    TrialOutcome o;
    switch (verdict) {
        case Verdict::Hit: o.tp = 1; break;
        case Verdict::WrongSelection: o.fp = 1; break;
        case Verdict::Missed: o.fn = 1; break;
    }
    o.selection_time_s = time_s();
    return o;
}

TrialOutcome total_outcome(const std::vector<TrialResult>& results) {
    TrialOutcome total;
    double time = 0;
    for (const auto& r : results) {
        const auto o = r.outcome();
        total.tp += o.tp;
        total.fp += o.fp;
        total.fn += o.fn;
        time += r.time_s();
    }
    if (!results.empty()) total.selection_time_s = time / static_cast<double>(results.size());
    return total;
}

TrialRunner::TrialRunner(ScanConfig cfg, std::vector<Region> targets, ScoringRules rules,
                         std::int64_t t0_ms, Observer observer)
    : cfg_(std::move(cfg)),
      targets_(std::move(targets)),
      rules_(rules),
      observer_(std::move(observer)),
      now_(t0_ms) {
    cfg_.validate();
    rules_.validate();
    for (const auto& t : targets_) {
        if (t.empty() || !cfg_.screen.contains(t)) {
            throw std::invalid_argument("target lies outside the screen");
        }
    }
    if (!finished()) start_trial(t0_ms);
}

void TrialRunner::start_trial(std::int64_t t) {
    state_ = bs::initial_state(cfg_);
    trial_start_ = t;
    last_event_ = t;
    blinks_ = 0;
    cancelled_ = 0;
    notify();
}

void TrialRunner::notify() {
    if (observer_.on_state) observer_.on_state(state_, now_, static_cast<int>(current_));
}

std::int64_t TrialRunner::deadline() const {
    if (finished()) return now_;
    return last_event_ + std::int64_t{rules_.budget_cycles} * bs::items_in_phase(state_, cfg_) *
                             cfg_.scan_interval_ms;
}

void TrialRunner::close_trial(Verdict v, std::int64_t t) {
    TrialResult r;
    r.index = static_cast<int>(current_);
    r.target = targets_[current_];
    r.verdict = v;
    r.start_ms = trial_start_;
    r.end_ms = t;
    r.blinks = blinks_;
    r.cancelled_attempts = cancelled_;
    if (const auto* d = std::get_if<bs::phase::Done>(&state_.phase)) r.selection = *d;
    results_.push_back(r);
    if (observer_.on_result) observer_.on_result(results_.back());
    ++current_;
    if (!finished()) start_trial(t);
}

void TrialRunner::advance_to(std::int64_t t) {
    if (t < now_) throw std::invalid_argument("advance_to: time runs backwards");
    while (!finished() && now_ < t) {
        std::int64_t next = std::min({t, deadline(), now_ + bs::time_to_next_step(state_, cfg_)});
        if (cfg_.idle_reset_ms) {
            next = std::min(next, now_ + std::max<std::int64_t>(
                                             1, *cfg_.idle_reset_ms - state_.since_blink_ms));
        }
        const auto before = state_;
        state_ = bs::tick(state_, cfg_, next - now_);
        now_ = next;
        if (state_.since_blink_ms == 0 && before.since_blink_ms != 0) last_event_ = now_;
        if (state_.phase != before.phase || state_.active != before.active ||
            state_.cursor != before.cursor) {
            notify();
        }
        if (now_ >= deadline()) close_trial(Verdict::Missed, now_);
    }
    now_ = std::max(now_, t);
}

bool TrialRunner::blink_at(std::int64_t t) {
    advance_to(t);
    if (finished()) {
        ++ignored_;
        return false;
    }
    state_ = bs::blink(state_, cfg_);
    ++blinks_;
    last_event_ = t;
    notify();
    if (const auto* d = std::get_if<bs::phase::Done>(&state_.phase)) {
        if (d->action == bs::Action::Cancel) {
            ++cancelled_;
            if (cancelled_ >= rules_.max_attempts) {
                close_trial(Verdict::Missed, t);
            } else {
                state_ = bs::initial_state(cfg_);
                notify();
            }
        } else if (d->action == bs::Action::Click && targets_[current_].contains(d->point)) {
            close_trial(Verdict::Hit, t);
        } else {
            close_trial(Verdict::WrongSelection, t);
        }
    }
    return true;
}

std::vector<std::int64_t> BlinkTrace::blink_times() const {
    std::vector<std::int64_t> out;
    for (const auto& r : records) {
        if (r.kind == TraceRecord::Kind::Blink) out.push_back(r.t_ms);
    }
    return out;
}

ReplayResult replay(const BlinkTrace& trace, TrialRunner::Observer observer) {
    TrialRunner runner(trace.cfg, trace.targets, trace.rules, 0, std::move(observer));
    for (const auto& r : trace.records) {
        if (r.kind == TraceRecord::Kind::Blink) {
            runner.blink_at(r.t_ms);
        } else {
            runner.advance_to(r.t_ms);
        }
    }
    ReplayResult out;
    out.trials = runner.results();
    out.open_trials = runner.trial_count() - runner.current_trial();
    out.ignored_blinks = runner.ignored_blinks();
    return out;
}

ReplayResult replay_blinks(const ScanConfig& cfg, const ScoringRules& rules,
                           const std::vector<Region>& targets,
                           const std::vector<std::int64_t>& blink_times,
                           std::optional<std::int64_t> end_ms, TrialRunner::Observer observer) {
    TrialRunner runner(cfg, targets, rules, 0, std::move(observer));
    for (const auto t : blink_times) runner.blink_at(t);
    if (end_ms) runner.advance_to(std::max(*end_ms, runner.now()));
    ReplayResult out;
    out.trials = runner.results();
    out.open_trials = runner.trial_count() - runner.current_trial();
    out.ignored_blinks = runner.ignored_blinks();
    return out;
}

}  // namespace blinkscan::simharness
