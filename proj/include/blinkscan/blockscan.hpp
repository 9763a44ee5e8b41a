#pragma once

// Block-scanning automaton.
//
// The screen is split into four quadrants which are highlighted in turn; a
// blink selects the highlighted quadrant and the split repeats inside it.
// After `max_depth` selections the automaton cycles through eight movement
// directions. A blink picks a direction, the cursor then steps along it once
// per interval, a further blink stops it, and a last blink picks an entry of
// the action menu.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace blinkscan::blockscan {

struct Point {
    int x = 0;
    int y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct Region {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool empty() const { return w <= 0 || h <= 0; }
    std::int64_t area() const { return empty() ? 0 : std::int64_t{w} * h; }
    bool contains(Point p) const { return p.x >= x && p.x < x + w && p.y >= y && p.y < y + h; }
    bool contains(const Region& r) const {
        return r.x >= x && r.y >= y && r.x + r.w <= x + w && r.y + r.h <= y + h;
    }
    Point center() const { return {x + w / 2, y + h / 2}; }
    Point clamp(Point p) const;

    friend bool operator==(const Region&, const Region&) = default;
};

/// Unit step in screen coordinates (y grows downwards).
struct Offset {
    int dx = 0;
    int dy = 0;

    friend bool operator==(const Offset&, const Offset&) = default;
};

/// up, up-left, left, left-down, down, down-right, right, right-up
inline constexpr std::array<Offset, 8> kDefaultDirections{{
    {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1},
}};

std::string_view direction_name(Offset d);

enum class Action { Click, Copy, Cut, Paste, Cancel, Edit };

std::string_view to_string(Action a);
std::optional<Action> parse_action(std::string_view name);

struct ScanConfig {
    Region screen{0, 0, 1920, 1080};
    std::int64_t scan_interval_ms = 1000;
    int max_depth = 4;
    std::array<Offset, 8> directions = kDefaultDirections;
    int step_px = 10;
    std::vector<Action> actions{Action::Click, Action::Copy, Action::Cut, Action::Paste,
                                Action::Cancel};
    /// Return to the initial state after this long without a blink. Off by
    /// default.
    std::optional<std::int64_t> idle_reset_ms;

    /// Throws std::invalid_argument.
    void validate() const;

    friend bool operator==(const ScanConfig&, const ScanConfig&) = default;
};

namespace phase {
struct BlockScan {
    int depth = 1;
    int highlight = 0;
    friend bool operator==(const BlockScan&, const BlockScan&) = default;
};
struct DirectionScan {
    int highlight = 0;
    friend bool operator==(const DirectionScan&, const DirectionScan&) = default;
};
struct CursorMove {
    int direction = 0;
    friend bool operator==(const CursorMove&, const CursorMove&) = default;
};
struct ActionMenu {
    int highlight = 0;
    friend bool operator==(const ActionMenu&, const ActionMenu&) = default;
};
struct Done {
    Action action = Action::Click;
    Point point;
    friend bool operator==(const Done&, const Done&) = default;
};
}  // namespace phase

using Phase = std::variant<phase::BlockScan, phase::DirectionScan, phase::CursorMove,
                           phase::ActionMenu, phase::Done>;

std::string_view phase_name(const Phase& p);

struct ScanState {
    Phase phase;
    Region active;
    std::optional<Point> cursor;
    std::int64_t elapsed_in_item_ms = 0;
    std::int64_t since_blink_ms = 0;

    bool done() const { return std::holds_alternative<phase::Done>(phase); }

    friend bool operator==(const ScanState&, const ScanState&) = default;
};

class BlinkAfterDone : public std::logic_error {
public:
    BlinkAfterDone() : std::logic_error("blink after selection is done") {}
};

/// Children of `parent` in highlight order TL, TR, BL, BR. The first half of
/// each axis gets floor(len/2) pixels, the second half the rest, so a child
/// can be empty when the parent is one pixel wide or tall.
std::array<Region, 4> quadrants(const Region& parent);

/// Index of the non-empty quadrant of `parent` containing `p` after clamping
/// `p` into the parent.
int quadrant_containing(const Region& parent, Point p);

ScanState initial_state(const ScanConfig& cfg);

/// Advances virtual time. Highlights step once per full scan interval,
/// skipping empty quadrants; during cursor movement the cursor steps instead
/// and stops at the edge of the active region. Done is absorbing.
ScanState tick(ScanState state, const ScanConfig& cfg, std::int64_t dt_ms);

/// Selects whatever is highlighted. Throws BlinkAfterDone from Done.
ScanState blink(ScanState state, const ScanConfig& cfg);

/// Number of highlightable items in the current phase; cursor movement
/// counts as one cycle of eight steps.
int items_in_phase(const ScanState& state, const ScanConfig& cfg);

/// Milliseconds until the highlight (or cursor) next changes.
std::int64_t time_to_next_step(const ScanState& state, const ScanConfig& cfg);

struct Highlight {
    enum class Kind { Quadrant, Direction, Cursor, Action, None };
    Kind kind = Kind::None;
    std::optional<Region> rect;
    std::optional<Offset> direction;
    std::optional<Action> action;
    int index = -1;
};

/// What a renderer should emphasize for this state.
Highlight describe_highlight(const ScanState& state, const ScanConfig& cfg);

// Planning helpers shared by the ideal-user oracle and the simulated user.

/// Cursor position after `steps` clamped steps along `d` inside `active`.
Point step_cursor(Point from, Offset d, int step_px, int steps, const Region& active);

struct DirectionChoice {
    int index = 0;
    int steps = 0;
};

/// Direction that brings the cursor into `target` soonest, counting the wait
/// for the direction's highlight (from highlight 0) plus the movement
/// intervals. Ties go to the earlier direction. Nullopt when no clamped ray
/// enters the target.
std::optional<DirectionChoice> choose_direction(Point cursor, const Region& active,
                                                const Region& target, const ScanConfig& cfg);

struct AcquisitionPlan {
    std::vector<std::int64_t> blink_times_ms;
    Point click_point;
    std::int64_t end_ms = 0;
};

/// Drives the automaton as an ideal user who blinks `reaction_ms` after the
/// wanted item lights up (0 <= reaction_ms < scan interval). Nullopt when the
/// target cannot be clicked.
std::optional<AcquisitionPlan> plan_acquisition(const Region& target, const ScanConfig& cfg,
                                                std::int64_t reaction_ms = 0);

/// Blink count of plan_acquisition, i.e. max_depth + 3 whenever reachable.
std::optional<int> blinks_to_acquire(const Region& target, const ScanConfig& cfg);

}  // namespace blinkscan::blockscan
