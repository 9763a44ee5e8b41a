#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "blinkscan/simharness.hpp"

namespace blinkscan::simharness {

namespace bs = blockscan;

void UserModel::validate() const {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0 && p <= 1)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
    };
    prob(miss_prob, "miss_prob");
    prob(premature_prob, "premature_prob");
    if (!(reaction_mean_ms >= 0) || !(reaction_sd_ms >= 0)) {
        throw std::invalid_argument("reaction mean and sd must be >= 0");
    }
    if (!(involuntary_rate_hz >= 0)) throw std::invalid_argument("involuntary_rate_hz must be >= 0");
    if (min_blink_gap_ms < 0) throw std::invalid_argument("min_blink_gap_ms must be >= 0");
}

UserModel ideal_user(double reaction_ms) {
    UserModel u;
    u.reaction_mean_ms = reaction_ms;
    return u;
}

UserModel default_imperfect_user(std::uint64_t seed) {
    UserModel u;
    u.reaction_mean_ms = 300;
    u.reaction_sd_ms = 100;
    u.miss_prob = 0.08;
    u.premature_prob = 0.0015;
    u.involuntary_rate_hz = 0.2;
    u.rng_seed = seed;
    return u;
}

namespace {

// Where the user tries to put the cursor inside the final block: the visible
// part of the target, or a small box at the block edge nearest the target.
Region aim_region(const ScanState& s, const Region& target, const ScanConfig& cfg) {
    const int x0 = std::max(s.active.x, target.x);
    const int y0 = std::max(s.active.y, target.y);
    const int x1 = std::min(s.active.x + s.active.w, target.x + target.w);
    const int y1 = std::min(s.active.y + s.active.h, target.y + target.h);
    if (x1 > x0 && y1 > y0) return {x0, y0, x1 - x0, y1 - y0};
    const bs::Point p = s.active.clamp(target.center());
    const int half = std::max(1, cfg.step_px / 2);
    const int bx0 = std::max(s.active.x, p.x - half);
    const int by0 = std::max(s.active.y, p.y - half);
    const int bx1 = std::min(s.active.x + s.active.w, p.x + half + 1);
    const int by1 = std::min(s.active.y + s.active.h, p.y + half + 1);
    return {bx0, by0, bx1 - bx0, by1 - by0};
}

bool ray_enters(bs::Point p, bs::Offset d, const Region& aim, const ScanConfig& cfg,
                const Region& active) {
    for (;;) {
        if (aim.contains(p)) return true;
        const bs::Point next = bs::step_cursor(p, d, cfg.step_px, 1, active);
        if (next == p) return false;
        p = next;
    }
}

// 53-bit uniform in [0,1).
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct SlotDraws {
    double miss;
    double premature;
    double normal;
    double position;
};

// Fixed number of draws per highlighted item so runs at different intervals
// stay aligned on the same random stream.
SlotDraws draw_slot(std::mt19937_64& rng) {
    SlotDraws d{};
    d.miss = uniform(rng);
    d.premature = uniform(rng);
    const double u1 = 1.0 - uniform(rng);
    const double u2 = uniform(rng);
    d.normal = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    d.position = uniform(rng);
    return d;
}

}  // namespace

bool user_wants_current(const ScanState& s, const Region& target, const ScanConfig& cfg,
                        const UserModel& user) {
    if (const auto* p = std::get_if<bs::phase::BlockScan>(&s.phase)) {
        return p->highlight == bs::quadrant_containing(s.active, target.center());
    }
    if (const auto* p = std::get_if<bs::phase::DirectionScan>(&s.phase)) {
        const auto choice = bs::choose_direction(*s.cursor, s.active, aim_region(s, target, cfg), cfg);
        return p->highlight == (choice ? choice->index : 0);
    }
    if (const auto* p = std::get_if<bs::phase::CursorMove>(&s.phase)) {
        const Region aim = aim_region(s, target, cfg);
        const auto d = cfg.directions[static_cast<std::size_t>(p->direction)];
        return !ray_enters(*s.cursor, d, aim, cfg, s.active) || aim.contains(*s.cursor);
    }
    if (const auto* p = std::get_if<bs::phase::ActionMenu>(&s.phase)) {
        bs::Action want = bs::Action::Click;
        const bool has_cancel = std::find(cfg.actions.begin(), cfg.actions.end(),
                                          bs::Action::Cancel) != cfg.actions.end();
        if (user.cancel_on_wrong_descent && has_cancel && !target.contains(*s.cursor)) {
            want = bs::Action::Cancel;
        }
        return cfg.actions[static_cast<std::size_t>(p->highlight)] == want;
    }
    return false;
}

namespace {

// Next blink the user produces from the runner's current state, or nullopt
// if none comes before the trial's deadline.
std::optional<std::int64_t> plan_next_blink(const TrialRunner& runner, const UserModel& user,
                                            std::optional<std::int64_t> last_blink,
                                            std::mt19937_64& rng) {
    const ScanConfig& cfg = runner.config();
    const Region& target = runner.target(runner.current_trial());
    const std::int64_t deadline = runner.deadline();
    std::int64_t earliest = runner.now() + 1;
    if (last_blink) earliest = std::max(earliest, *last_blink + user.min_blink_gap_ms);

    ScanState s = runner.state();
    std::int64_t t = runner.now();
    while (t < deadline) {
        const std::int64_t slot_end = t + bs::time_to_next_step(s, cfg);
        const SlotDraws d = draw_slot(rng);
        if (user_wants_current(s, target, cfg, user)) {
            if (d.miss >= user.miss_prob) {
                const double r = std::max(0.0, user.reaction_mean_ms + user.reaction_sd_ms * d.normal);
                return std::max(earliest, t + std::max<std::int64_t>(1, std::llround(r)));
            }
        } else if (d.premature < user.premature_prob) {
            const auto offset = static_cast<std::int64_t>(d.position * static_cast<double>(slot_end - t));
            return std::max(earliest, t + offset);
        }
        s = bs::tick(s, cfg, slot_end - t);
        t = slot_end;
    }
    return std::nullopt;
}

}  // namespace

RunResult run_session(const ScanConfig& cfg, const std::vector<Region>& targets,
                      const UserModel& user, ScoringRules rules, std::uint64_t first_trial_index) {
    user.validate();
    TrialRunner runner(cfg, targets, rules);
    RunResult out;
    out.trace.cfg = cfg;
    out.trace.rules = rules;
    out.trace.targets = targets;

    std::optional<std::int64_t> last_blink;
    std::size_t seeded_for = runner.trial_count();
    std::mt19937_64 rng;
    while (!runner.finished()) {
        const std::size_t trial = runner.current_trial();
        if (trial != seeded_for) {
            rng.seed(user.rng_seed ^ (first_trial_index + trial));
            seeded_for = trial;
        }
        const auto t = plan_next_blink(runner, user, last_blink, rng);
        if (t && *t < runner.deadline()) {
            runner.blink_at(*t);
            last_blink = *t;
            out.trace.records.push_back({*t, TraceRecord::Kind::Blink});
        } else {
            const std::int64_t d = runner.deadline();
            runner.advance_to(d);
            out.trace.records.push_back({d, TraceRecord::Kind::Tick});
        }
    }
    out.trials = runner.results();
    return out;
}

RunResult run_trial(const TrialSpec& spec, const UserModel& user, ScoringRules rules,
                    std::uint64_t trial_index) {
    spec.validate();
    return run_session(spec.cfg, {spec.target}, user, rules, trial_index);
}

}  // namespace blinkscan::simharness
