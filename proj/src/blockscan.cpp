#include "blinkscan/blockscan.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <utility>

namespace blinkscan::blockscan {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

int first_nonempty(const Region& parent, int from) {
    const auto q = quadrants(parent);
    for (int k = 0; k < 4; ++k) {
        const int i = (from + k) % 4;
        if (!q[static_cast<std::size_t>(i)].empty()) return i;
    }
    return 0;  // unreachable for a non-empty parent
}

}  // namespace

Point Region::clamp(Point p) const {
    return {std::clamp(p.x, x, x + w - 1), std::clamp(p.y, y, y + h - 1)};
}

std::string_view direction_name(Offset d) {
    static constexpr std::array<std::string_view, 8> names{
        "up", "up-left", "left", "left-down", "down", "down-right", "right", "right-up"};
    for (std::size_t i = 0; i < kDefaultDirections.size(); ++i) {
        if (kDefaultDirections[i] == d) return names[i];
    }
    return "?";
}

std::string_view to_string(Action a) {
    switch (a) {
        case Action::Click: return "Click";
        case Action::Copy: return "Copy";
        case Action::Cut: return "Cut";
        case Action::Paste: return "Paste";
        case Action::Cancel: return "Cancel";
        case Action::Edit: return "Edit";
    }
    return "?";
}

std::optional<Action> parse_action(std::string_view name) {
    for (Action a : {Action::Click, Action::Copy, Action::Cut, Action::Paste, Action::Cancel,
                     Action::Edit}) {
        if (to_string(a) == name) return a;
    }
    return std::nullopt;
}

void ScanConfig::validate() const {
    if (screen.w < 1 || screen.h < 1) throw std::invalid_argument("screen must be at least 1x1");
    if (scan_interval_ms <= 0) throw std::invalid_argument("scan_interval_ms must be positive");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (step_px < 1) throw std::invalid_argument("step_px must be >= 1");
    if (actions.empty()) throw std::invalid_argument("action menu must not be empty");
    std::set<std::pair<int, int>> seen;
    for (const auto& d : directions) {
        if (d.dx < -1 || d.dx > 1 || d.dy < -1 || d.dy > 1 || (d.dx == 0 && d.dy == 0)) {
            throw std::invalid_argument("directions must be unit offsets");
        }
        seen.insert({d.dx, d.dy});
    }
    if (seen.size() != 8) throw std::invalid_argument("directions must be 8 distinct offsets");
    if (idle_reset_ms && *idle_reset_ms <= 0) {
        throw std::invalid_argument("idle_reset_ms must be positive when set");
    }
}

std::string_view phase_name(const Phase& p) {
    return std::visit(overloaded{
                          [](const phase::BlockScan&) { return std::string_view("BlockScan"); },
                          [](const phase::DirectionScan&) { return std::string_view("DirectionScan"); },
                          [](const phase::CursorMove&) { return std::string_view("CursorMove"); },
                          [](const phase::ActionMenu&) { return std::string_view("ActionMenu"); },
                          [](const phase::Done&) { return std::string_view("Done"); },
                      },
                      p);
}

std::array<Region, 4> quadrants(const Region& r) {
    const int w1 = r.w / 2, w2 = r.w - w1;
    const int h1 = r.h / 2, h2 = r.h - h1;
    return {{
        {r.x, r.y, w1, h1},
        {r.x + w1, r.y, w2, h1},
        {r.x, r.y + h1, w1, h2},
        {r.x + w1, r.y + h1, w2, h2},
    }};
}

int quadrant_containing(const Region& parent, Point p) {
    const Point c = parent.clamp(p);
    const auto q = quadrants(parent);
    for (int i = 0; i < 4; ++i) {
        if (q[static_cast<std::size_t>(i)].contains(c)) return i;
    }
    return first_nonempty(parent, 0);
}

ScanState initial_state(const ScanConfig& cfg) {
    ScanState s;
    s.active = cfg.screen;
    s.phase = phase::BlockScan{1, first_nonempty(cfg.screen, 0)};
    return s;
}

int items_in_phase(const ScanState& state, const ScanConfig& cfg) {
    return std::visit(overloaded{
                          [](const phase::BlockScan&) { return 4; },
                          [](const phase::DirectionScan&) { return 8; },
                          [](const phase::CursorMove&) { return 8; },
                          [&](const phase::ActionMenu&) { return static_cast<int>(cfg.actions.size()); },
                          [](const phase::Done&) { return 1; },
                      },
                      state.phase);
}

std::int64_t time_to_next_step(const ScanState& state, const ScanConfig& cfg) {
    return cfg.scan_interval_ms - state.elapsed_in_item_ms;
}

Point step_cursor(Point from, Offset d, int step_px, int steps, const Region& active) {
    const std::int64_t x = std::int64_t{from.x} + std::int64_t{d.dx} * step_px * steps;
    const std::int64_t y = std::int64_t{from.y} + std::int64_t{d.dy} * step_px * steps;
    return {static_cast<int>(std::clamp<std::int64_t>(x, active.x, active.x + active.w - 1)),
            static_cast<int>(std::clamp<std::int64_t>(y, active.y, active.y + active.h - 1))};
}

namespace {

void advance_one(ScanState& s, const ScanConfig& cfg) {
    std::visit(overloaded{
                   [&](phase::BlockScan& p) { p.highlight = first_nonempty(s.active, p.highlight + 1); },
                   [](phase::DirectionScan& p) { p.highlight = (p.highlight + 1) % 8; },
                   [&](phase::CursorMove& p) {
                       const auto d = cfg.directions[static_cast<std::size_t>(p.direction)];
                       s.cursor = step_cursor(*s.cursor, d, cfg.step_px, 1, s.active);
                   },
                   [&](phase::ActionMenu& p) {
                       p.highlight = (p.highlight + 1) % static_cast<int>(cfg.actions.size());
                   },
                   [](phase::Done&) {},
               },
               s.phase);
}

}  // namespace

ScanState tick(ScanState s, const ScanConfig& cfg, std::int64_t dt_ms) {
    if (dt_ms < 0) throw std::invalid_argument("tick: negative dt");
    if (s.done()) return s;
    s.since_blink_ms += dt_ms;
    if (cfg.idle_reset_ms && s.since_blink_ms >= *cfg.idle_reset_ms) return initial_state(cfg);

    s.elapsed_in_item_ms += dt_ms;
    const std::int64_t steps = s.elapsed_in_item_ms / cfg.scan_interval_ms;
    s.elapsed_in_item_ms %= cfg.scan_interval_ms;
    // Highlights are periodic; only the remainder matters. The cursor stops
    // moving after at most screen-size steps.
    std::int64_t n = steps;
    if (std::holds_alternative<phase::CursorMove>(s.phase)) {
        n = std::min<std::int64_t>(steps, std::max(s.active.w, s.active.h) + 1);
    } else if (!std::holds_alternative<phase::Done>(s.phase)) {
        n = steps % items_in_phase(s, cfg);
    }
    for (std::int64_t i = 0; i < n; ++i) advance_one(s, cfg);
    return s;
}

ScanState blink(ScanState s, const ScanConfig& cfg) {
    if (s.done()) throw BlinkAfterDone();
    s.elapsed_in_item_ms = 0;
    s.since_blink_ms = 0;

    if (auto* p = std::get_if<phase::BlockScan>(&s.phase)) {
        const Region child = quadrants(s.active)[static_cast<std::size_t>(p->highlight)];
        const int depth = p->depth;
        s.active = child;
        if (depth < cfg.max_depth) {
            s.phase = phase::BlockScan{depth + 1, first_nonempty(child, 0)};
        } else {
            s.phase = phase::DirectionScan{0};
            s.cursor = child.center();
        }
    } else if (auto* p = std::get_if<phase::DirectionScan>(&s.phase)) {
        s.phase = phase::CursorMove{p->highlight};
    } else if (std::holds_alternative<phase::CursorMove>(s.phase)) {
        s.phase = phase::ActionMenu{0};
    } else if (auto* p = std::get_if<phase::ActionMenu>(&s.phase)) {
        s.phase = phase::Done{cfg.actions[static_cast<std::size_t>(p->highlight)], *s.cursor};
    }
    return s;
}

Highlight describe_highlight(const ScanState& s, const ScanConfig& cfg) {
    Highlight h;
    std::visit(overloaded{
                   [&](const phase::BlockScan& p) {
                       h.kind = Highlight::Kind::Quadrant;
                       h.index = p.highlight;
                       h.rect = quadrants(s.active)[static_cast<std::size_t>(p.highlight)];
                   },
                   [&](const phase::DirectionScan& p) {
                       h.kind = Highlight::Kind::Direction;
                       h.index = p.highlight;
                       h.rect = s.active;
                       h.direction = cfg.directions[static_cast<std::size_t>(p.highlight)];
                   },
                   [&](const phase::CursorMove& p) {
                       h.kind = Highlight::Kind::Cursor;
                       h.index = p.direction;
                       h.rect = s.active;
                       h.direction = cfg.directions[static_cast<std::size_t>(p.direction)];
                   },
                   [&](const phase::ActionMenu& p) {
                       h.kind = Highlight::Kind::Action;
                       h.index = p.highlight;
                       h.action = cfg.actions[static_cast<std::size_t>(p.highlight)];
                   },
                   [&](const phase::Done& p) {
                       h.kind = Highlight::Kind::None;
                       h.action = p.action;
                   },
               },
               s.phase);
    return h;
}

std::optional<DirectionChoice> choose_direction(Point cursor, const Region& active,
                                                const Region& target, const ScanConfig& cfg) {
    std::optional<DirectionChoice> best;
    int best_cost = std::numeric_limits<int>::max();
    for (int i = 0; i < 8; ++i) {
        const auto d = cfg.directions[static_cast<std::size_t>(i)];
        Point p = cursor;
        for (int k = 0;; ++k) {
            if (i + k >= best_cost) break;
            if (target.contains(p)) {
                best_cost = i + k;
                best = DirectionChoice{i, k};
                break;
            }
            const Point next = step_cursor(p, d, cfg.step_px, 1, active);
            if (next == p) break;
            p = next;
        }
    }
    return best;
}

std::optional<AcquisitionPlan> plan_acquisition(const Region& target, const ScanConfig& cfg,
                                                std::int64_t reaction_ms) {
    cfg.validate();
    if (reaction_ms < 0 || reaction_ms >= cfg.scan_interval_ms) {
        throw std::invalid_argument("reaction_ms must lie in [0, scan interval)");
    }
    if (target.empty() || !cfg.screen.contains(target)) return std::nullopt;

    AcquisitionPlan plan;
    ScanState s = initial_state(cfg);
    std::int64_t t = 0;
    const Point goal = target.center();

    // Waits (at most `limit` steps) for `wanted` to hold, then blinks.
    auto wait_and_blink = [&](const std::function<bool(const ScanState&)>& wanted, int limit) {
        for (int i = 0; i <= limit; ++i) {
            if (wanted(s)) {
                s = tick(s, cfg, reaction_ms);
                t += reaction_ms;
                plan.blink_times_ms.push_back(t);
                s = blink(s, cfg);
                return true;
            }
            const std::int64_t dt = time_to_next_step(s, cfg);
            s = tick(s, cfg, dt);
            t += dt;
        }
        return false;
    };

    while (auto* p = std::get_if<phase::BlockScan>(&s.phase)) {
        (void)p;
        if (!s.active.contains(goal)) return std::nullopt;
        const int want = quadrant_containing(s.active, goal);
        if (!wait_and_blink([&](const ScanState& st) {
                return std::get<phase::BlockScan>(st.phase).highlight == want;
            }, 4)) {
            return std::nullopt;
        }
    }

    const auto choice = choose_direction(*s.cursor, s.active, target, cfg);
    if (!choice) return std::nullopt;
    if (!wait_and_blink([&](const ScanState& st) {
            return std::get<phase::DirectionScan>(st.phase).highlight == choice->index;
        }, 8)) {
        return std::nullopt;
    }
    if (!wait_and_blink([&](const ScanState& st) { return target.contains(*st.cursor); },
                        choice->steps)) {
        return std::nullopt;
    }
    const auto click = std::find(cfg.actions.begin(), cfg.actions.end(), Action::Click);
    if (click == cfg.actions.end()) return std::nullopt;
    const int click_idx = static_cast<int>(click - cfg.actions.begin());
    if (!wait_and_blink([&](const ScanState& st) {
            return std::get<phase::ActionMenu>(st.phase).highlight == click_idx;
        }, static_cast<int>(cfg.actions.size()))) {
        return std::nullopt;
    }

    const auto& done = std::get<phase::Done>(s.phase);
    if (!target.contains(done.point)) return std::nullopt;
    plan.click_point = done.point;
    plan.end_ms = t;
    return plan;
}

std::optional<int> blinks_to_acquire(const Region& target, const ScanConfig& cfg) {
    const auto plan = plan_acquisition(target, cfg);
    if (!plan) return std::nullopt;
    return static_cast<int>(plan->blink_times_ms.size());
}

}  // namespace blinkscan::blockscan
