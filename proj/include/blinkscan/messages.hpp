#pragma once

// Session message stream.
//
// One JSON object per line:
//
//   {"seq":12,"dir":"engine_to_client","kind":"StateUpdate","payload":{...}}
//
// `seq` counts from 1 separately in each direction. Payload fields per kind
// are listed in the README.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

#include "blinkscan/blinksense.hpp"
#include "blinkscan/blockscan.hpp"
#include "blinkscan/scanmetrics.hpp"
#include "blinkscan/simharness.hpp"

namespace blinkscan::sessiond {

using Json = nlohmann::json;

enum class Direction { EngineToClient, ClientToEngine };
enum class Kind { StateUpdate, TargetSet, BlinkIn, SampleIn, MetricsReport, SessionControl };

std::string_view to_string(Direction d);
std::string_view to_string(Kind k);
std::optional<Direction> parse_direction(std::string_view s);
std::optional<Kind> parse_kind(std::string_view s);

struct Message {
    std::uint64_t seq = 0;
    Direction dir = Direction::EngineToClient;
    Kind kind = Kind::SessionControl;
    Json payload = Json::object();

    friend bool operator==(const Message&, const Message&) = default;
};

class MalformedMessage : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Single line, no trailing newline.
std::string encode(const Message& m);
/// Throws MalformedMessage.
Message decode(std::string_view line);

Json to_json(const blockscan::Region& r);
blockscan::Region region_from_json(const Json& j);

/// Full snapshot: phase, active region, cursor, timing, highlight geometry,
/// screen and interval, plus the trial it belongs to.
Json state_payload(const blockscan::ScanState& s, const blockscan::ScanConfig& cfg,
                   std::int64_t t_ms, int trial);

/// Inverse of the state part of state_payload.
blockscan::ScanState state_from_payload(const Json& payload);

/// Highlight geometry as carried in a StateUpdate.
Json highlight_json(const blockscan::Highlight& h);

Json target_payload(int trial, int task_id, const blockscan::Region& target, std::int64_t t_ms);

Json blink_payload(std::int64_t t_ms);
Json sample_payload(const blinksense::SensorSample& s);

Json trial_json(const simharness::TrialResult& r, int task_id);

}  // namespace blinkscan::sessiond
