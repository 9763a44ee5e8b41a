#include "blinkscan/messages.hpp"

#include <array>

namespace blinkscan::sessiond {

namespace bs = blockscan;

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 6> kKinds{{
    {Kind::StateUpdate, "StateUpdate"},
    {Kind::TargetSet, "TargetSet"},
    {Kind::BlinkIn, "BlinkIn"},
    {Kind::SampleIn, "SampleIn"},
    {Kind::MetricsReport, "MetricsReport"},
    {Kind::SessionControl, "SessionControl"},
}};

Json point_json(bs::Point p) { return {{"x", p.x}, {"y", p.y}}; }

bs::Point point_from_json(const Json& j) { return {j.at("x").get<int>(), j.at("y").get<int>()}; }

}  // namespace

std::string_view to_string(Direction d) {
    return d == Direction::EngineToClient ? "engine_to_client" : "client_to_engine";
}

std::string_view to_string(Kind k) {
    for (const auto& [kind, name] : kKinds) {
        if (kind == k) return name;
    }
    return "?";
}

std::optional<Direction> parse_direction(std::string_view s) {
    if (s == "engine_to_client") return Direction::EngineToClient;
    if (s == "client_to_engine") return Direction::ClientToEngine;
    return std::nullopt;
}

std::optional<Kind> parse_kind(std::string_view s) {
    for (const auto& [kind, name] : kKinds) {
        if (name == s) return kind;
    }
    return std::nullopt;
}

std::string encode(const Message& m) {
    Json j;
    j["seq"] = m.seq;
    j["dir"] = to_string(m.dir);
    j["kind"] = to_string(m.kind);
    j["payload"] = m.payload;
    return j.dump();
}

Message decode(std::string_view line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw MalformedMessage(std::string("not JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedMessage("message must be an object");
    Message m;
    try {
        m.seq = j.at("seq").get<std::uint64_t>();
        const auto dir = parse_direction(j.at("dir").get<std::string>());
        const auto kind = parse_kind(j.at("kind").get<std::string>());
        if (!dir) throw MalformedMessage("unknown dir");
        if (!kind) throw MalformedMessage("unknown kind");
        m.dir = *dir;
        m.kind = *kind;
        m.payload = j.value("payload", Json::object());
    } catch (const Json::exception& e) {
        throw MalformedMessage(std::string("bad field: ") + e.what());
    }
    if (!m.payload.is_object()) throw MalformedMessage("payload must be an object");
    return m;
}

Json to_json(const bs::Region& r) { return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

bs::Region region_from_json(const Json& j) {
    return {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

Json highlight_json(const bs::Highlight& h) {
    static constexpr std::array<std::string_view, 5> kinds{"quadrant", "direction", "cursor",
                                                           "action", "none"};
    Json j;
    j["kind"] = kinds[static_cast<std::size_t>(h.kind)];
    j["index"] = h.index;
    j["rect"] = h.rect ? to_json(*h.rect) : Json(nullptr);
    if (h.direction) {
        j["direction"] = {{"dx", h.direction->dx},
                          {"dy", h.direction->dy},
                          {"name", bs::direction_name(*h.direction)}};
    } else {
        j["direction"] = nullptr;
    }
    j["action"] = h.action ? Json(bs::to_string(*h.action)) : Json(nullptr);
    return j;
}

Json state_payload(const bs::ScanState& s, const bs::ScanConfig& cfg, std::int64_t t_ms, int trial) {
    Json phase;
    phase["name"] = bs::phase_name(s.phase);
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, bs::phase::BlockScan>) {
                phase["depth"] = p.depth;
                phase["highlight"] = p.highlight;
            } else if constexpr (std::is_same_v<P, bs::phase::DirectionScan> ||
                                 std::is_same_v<P, bs::phase::ActionMenu>) {
                phase["highlight"] = p.highlight;
            } else if constexpr (std::is_same_v<P, bs::phase::CursorMove>) {
                phase["direction"] = p.direction;
            } else {
                phase["action"] = bs::to_string(p.action);
                phase["point"] = point_json(p.point);
            }
        },
        s.phase);

    Json j;
    j["t_ms"] = t_ms;
    j["trial"] = trial;
    j["screen"] = to_json(cfg.screen);
    j["scan_interval_ms"] = cfg.scan_interval_ms;
    j["phase"] = phase;
    j["active"] = to_json(s.active);
    j["cursor"] = s.cursor ? point_json(*s.cursor) : Json(nullptr);
    j["elapsed_in_item_ms"] = s.elapsed_in_item_ms;
    j["since_blink_ms"] = s.since_blink_ms;
    j["highlight"] = highlight_json(bs::describe_highlight(s, cfg));
    Json actions = Json::array();
    for (const auto a : cfg.actions) actions.push_back(bs::to_string(a));
    j["actions"] = actions;
    return j;
}

bs::ScanState state_from_payload(const Json& j) {
    bs::ScanState s;
    const Json& ph = j.at("phase");
    const auto name = ph.at("name").get<std::string>();
    if (name == "BlockScan") {
        s.phase = bs::phase::BlockScan{ph.at("depth").get<int>(), ph.at("highlight").get<int>()};
    } else if (name == "DirectionScan") {
        s.phase = bs::phase::DirectionScan{ph.at("highlight").get<int>()};
    } else if (name == "CursorMove") {
        s.phase = bs::phase::CursorMove{ph.at("direction").get<int>()};
    } else if (name == "ActionMenu") {
        s.phase = bs::phase::ActionMenu{ph.at("highlight").get<int>()};
    } else if (name == "Done") {
        const auto action = bs::parse_action(ph.at("action").get<std::string>());
        if (!action) throw MalformedMessage("unknown action in Done phase");
        s.phase = bs::phase::Done{*action, point_from_json(ph.at("point"))};
    } else {
        throw MalformedMessage("unknown phase '" + name + "'");
    }
    s.active = region_from_json(j.at("active"));
    if (!j.at("cursor").is_null()) s.cursor = point_from_json(j.at("cursor"));
    s.elapsed_in_item_ms = j.at("elapsed_in_item_ms").get<std::int64_t>();
    s.since_blink_ms = j.at("since_blink_ms").get<std::int64_t>();
    return s;
}

Json target_payload(int trial, int task_id, const bs::Region& target, std::int64_t t_ms) {
    return {{"trial", trial}, {"task_id", task_id}, {"target", to_json(target)}, {"t_ms", t_ms}};
}

Json blink_payload(std::int64_t t_ms) { return {{"t_ms", t_ms}}; }

Json sample_payload(const blinksense::SensorSample& s) { return {{"t_ms", s.t_ms}, {"v", s.v}}; }

Json trial_json(const simharness::TrialResult& r, int task_id) {
    Json j;
    j["trial"] = r.index;
    j["task_id"] = task_id;
    j["verdict"] = simharness::to_string(r.verdict);
    j["start_ms"] = r.start_ms;
    j["end_ms"] = r.end_ms;
    j["time_s"] = r.time_s();
    j["blinks"] = r.blinks;
    j["cancelled_attempts"] = r.cancelled_attempts;
    if (r.selection) {
        j["selection"] = {{"action", bs::to_string(r.selection->action)},
                          {"point", point_json(r.selection->point)}};
    } else {
        j["selection"] = nullptr;
    }
    return j;
}

}  // namespace blinkscan::sessiond
