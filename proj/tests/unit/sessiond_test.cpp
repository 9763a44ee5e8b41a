#include "blinkscan/session.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include "blinkscan/capture.hpp"
#include "blinkscan/trace.hpp"

namespace blinkscan::sessiond {
namespace {

namespace bs = blockscan;
namespace sh = simharness;
using std::chrono::milliseconds;

SessionConfig default_session(std::int64_t interval = 1000) {
    SessionConfig c;
    c.scan.scan_interval_ms = interval;
    c.tasks = sh::default_task_script(c.scan);
    return c;
}

std::vector<bs::Region> targets_of(const SessionConfig& c) {
    std::vector<bs::Region> out;
    for (const auto& t : c.tasks) out.push_back(t.target);
    return out;
}

Message client(Kind kind, Json payload, std::uint64_t seq = 1) {
    return {seq, Direction::ClientToEngine, kind, std::move(payload)};
}

// Drains everything the engine sent until the session reports it ended or
// the pipe closes.
std::vector<Message> drain(Transport& t) {
    std::vector<Message> out;
    for (;;) {
        std::optional<Message> m;
        try {
            m = t.receive(milliseconds(5000));
        } catch (const TransportClosed&) {
            break;
        }
        if (!m) break;
        out.push_back(*m);
        if (m->kind == Kind::SessionControl && m->payload.value("action", "") == "ended") break;
    }
    return out;
}

std::vector<Message> of_kind(const std::vector<Message>& ms, Kind k) {
    std::vector<Message> out;
    for (const auto& m : ms) {
        if (m.kind == k) out.push_back(m);
    }
    return out;
}

struct Served {
    SessionReport report;
    std::vector<Message> outbound;
};

// Runs a session on a memory pipe while a client sends `inbound`.
Served serve(const SessionConfig& cfg, const std::vector<Message>& inbound, bool close_after = false) {
    auto [engine_end, client_end] = memory_pipe();
    auto fut = std::async(std::launch::async, [&, e = engine_end.get()] { return run_session(cfg, *e); });
    for (const auto& m : inbound) client_end->send(m);
    Served s;
    if (close_after) {
        // Hang up once the first task's report has arrived.
        for (;;) {
            const auto m = client_end->receive(milliseconds(5000));
            if (!m) break;
            s.outbound.push_back(*m);
            if (m->kind == Kind::MetricsReport) break;
        }
        client_end->close();
    }
    for (auto& m : drain(*client_end)) s.outbound.push_back(std::move(m));
    s.report = fut.get();
    return s;
}

std::vector<Message> blink_messages(const std::vector<std::int64_t>& times) {
    std::vector<Message> out;
    std::uint64_t seq = 1;
    for (const auto t : times) out.push_back(client(Kind::BlinkIn, blink_payload(t), seq++));
    return out;
}

// --- Messages ------------------------------------------------------------------

TEST(Messages, RoundTrip) {
    Message m{7, Direction::ClientToEngine, Kind::BlinkIn, blink_payload(1234)};
    const auto line = encode(m);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(decode(line), m);
    EXPECT_EQ(line, R"({"dir":"client_to_engine","kind":"BlinkIn","payload":{"t_ms":1234},"seq":7})");
    for (const auto k : {Kind::StateUpdate, Kind::TargetSet, Kind::BlinkIn, Kind::SampleIn, Kind::MetricsReport,
                         Kind::SessionControl}) {
        EXPECT_EQ(parse_kind(to_string(k)), k);
    }
}

TEST(Messages, Malformed) {
    EXPECT_THROW(decode("{"), MalformedMessage);
    EXPECT_THROW(decode("[1,2]"), MalformedMessage);
    EXPECT_THROW(decode(R"({"dir":"client_to_engine","kind":"BlinkIn","payload":{}})"), MalformedMessage);
    EXPECT_THROW(decode(R"({"seq":1,"dir":"sideways","kind":"BlinkIn","payload":{}})"), MalformedMessage);
    EXPECT_THROW(decode(R"({"seq":1,"dir":"client_to_engine","kind":"Wink","payload":{}})"), MalformedMessage);
    EXPECT_THROW(decode(R"({"seq":1,"dir":"client_to_engine","kind":"BlinkIn","payload":3})"), MalformedMessage);
    EXPECT_NO_THROW(decode(R"({"seq":1,"dir":"client_to_engine","kind":"BlinkIn"})"));
}

TEST(Messages, StatePayloadRoundTripsEveryPhase) {
    bs::ScanConfig cfg;
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 300; ++rep) {
        auto s = bs::initial_state(cfg);
        const int events = static_cast<int>(rng() % 12);
        for (int k = 0; k < events && !s.done(); ++k) {
            s = bs::tick(s, cfg, static_cast<std::int64_t>(rng() % 5000));
            s = bs::blink(s, cfg);
        }
        s = bs::tick(s, cfg, static_cast<std::int64_t>(rng() % 999));
        const auto p = state_payload(s, cfg, 42, 3);
        ASSERT_EQ(state_from_payload(Json::parse(p.dump())), s);
        ASSERT_EQ(p["highlight"], highlight_json(bs::describe_highlight(s, cfg)));
        ASSERT_EQ(p["t_ms"], 42);
        ASSERT_EQ(p["trial"], 3);
    }
}

// --- Sessions over a pipe ---------------------------------------------------------

std::vector<std::int64_t> ideal_session_blinks(const SessionConfig& cfg) {
    // The ideal user has no randomness; one run gives the script's blinks.
    return sh::run_session(cfg.scan, targets_of(cfg), sh::ideal_user(250)).trace.blink_times();
}

TEST(Session, IdealScriptAllHits) {
    const auto cfg = default_session();
    const auto served = serve(cfg, blink_messages(ideal_session_blinks(cfg)));
    const auto& r = served.report;
    EXPECT_EQ(r.total.tp, 10);
    EXPECT_EQ(r.total.fp, 0);
    EXPECT_EQ(r.total.fn, 0);
    ASSERT_TRUE(r.summary);
    EXPECT_DOUBLE_EQ(r.summary->sa_pct, 100);
    EXPECT_FALSE(r.partial);
    const auto reports = of_kind(served.outbound, Kind::MetricsReport);
    ASSERT_EQ(reports.size(), 11u);  // one per task plus the final one
    EXPECT_TRUE(reports.back().payload["final"].get<bool>());
    EXPECT_EQ(reports.back().payload, r.to_json(true));
    EXPECT_EQ(of_kind(served.outbound, Kind::TargetSet).size(), 10u);
}

TEST(Session, SequenceNumbersAreContiguous) {
    const auto cfg = default_session(700);
    auto run = sh::run_session(cfg.scan, targets_of(cfg), sh::default_imperfect_user(2));
    const auto served = serve(cfg, blink_messages(run.trace.blink_times()));
    ASSERT_FALSE(served.outbound.empty());
    for (std::size_t i = 0; i < served.outbound.size(); ++i) {
        ASSERT_EQ(served.outbound[i].seq, i + 1);
        ASSERT_EQ(served.outbound[i].dir, Direction::EngineToClient);
    }
}

TEST(Session, HeadlessParity) {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto cfg = default_session(500 + 100 * static_cast<std::int64_t>(seed % 6));
        const auto run = sh::run_session(cfg.scan, targets_of(cfg), sh::default_imperfect_user(seed));
        auto inbound = blink_messages(run.trace.blink_times());
        const auto served = serve(cfg, inbound);
        ASSERT_FALSE(served.report.partial);

        // Engine-recorded trace and the simulator's own trace both replay
        // headless to the identical MetricsReport.
        Engine recorder(cfg, {});
        recorder.start();
        for (const auto t : run.trace.blink_times()) recorder.blink(t);
        const auto recorded = recorder.recorded_trace();
        std::stringstream file;
        sh::write_trace(file, recorded);
        const auto headless = run_trace(config_for_trace(sh::read_trace(file)), recorded);
        const auto from_sim = run_trace(cfg, run.trace);

        const auto final_served = of_kind(served.outbound, Kind::MetricsReport).back().payload;
        ASSERT_EQ(headless.to_json(), final_served) << seed;
        ASSERT_EQ(headless.total, sh::total_outcome(run.trials));
        ASSERT_EQ(from_sim.total, headless.total);
    }
}

// Draw list a thin client would produce from one StateUpdate payload.
Json render(const Json& p) {
    Json ops = Json::array();
    ops.push_back({{"op", "screen"}, {"rect", p["screen"]}});
    ops.push_back({{"op", "shade"}, {"rect", p["active"]}});
    const auto& h = p["highlight"];
    if (!h["rect"].is_null()) ops.push_back({{"op", "highlight"}, {"rect", h["rect"]}, {"kind", h["kind"]}});
    if (!h["direction"].is_null()) ops.push_back({{"op", "arrow"}, {"dir", h["direction"]["name"]}});
    if (!h["action"].is_null()) ops.push_back({{"op", "button"}, {"action", h["action"]}});
    if (!p["cursor"].is_null()) ops.push_back({{"op", "dot"}, {"at", p["cursor"]}});
    return ops;
}

TEST(Session, StateUpdatesAreSelfContained) {
    const auto cfg = default_session(600);
    const auto run = sh::run_session(cfg.scan, targets_of(cfg), sh::default_imperfect_user(11));
    const auto served = serve(cfg, blink_messages(run.trace.blink_times()));

    // Independent replay records the true automaton states.
    std::vector<std::tuple<bs::ScanState, std::int64_t, int>> truth;
    sh::TrialRunner::Observer obs;
    obs.on_state = [&](const bs::ScanState& s, std::int64_t t, int trial) { truth.emplace_back(s, t, trial); };
    sh::replay_blinks(cfg.scan, cfg.rules, targets_of(cfg), run.trace.blink_times(), std::nullopt, obs);

    const auto updates = of_kind(served.outbound, Kind::StateUpdate);
    ASSERT_EQ(updates.size(), truth.size());
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const auto& p = updates[i].payload;
        const auto& [state, t, trial] = truth[i];
        ASSERT_EQ(state_from_payload(p), state) << i;
        ASSERT_EQ(p["t_ms"].get<std::int64_t>(), t);
        ASSERT_EQ(p["trial"].get<int>(), trial);
        // Rendering from the payload alone equals rendering from the truth.
        ASSERT_EQ(render(p), render(state_payload(state, cfg.scan, t, trial)));
    }
}

TEST(Session, DisconnectGivesPartialReport) {
    const auto cfg = default_session();
    const auto blinks = ideal_session_blinks(cfg);
    // First task complete (7 blinks) and three blinks into the second.
    const std::vector<std::int64_t> part(blinks.begin(), blinks.begin() + 10);
    const auto served = serve(cfg, blink_messages(part), /*close_after=*/true);
    const auto& r = served.report;
    EXPECT_TRUE(r.partial);
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.trials[0].verdict, sh::Verdict::Hit);
    EXPECT_EQ(r.open_trials, 9u);
    EXPECT_EQ(r.total, (scanmetrics::TrialOutcome{1, 0, 0, r.trials[0].time_s()}));
    // The running report for task 1 reached the client before the hangup.
    const auto reports = of_kind(served.outbound, Kind::MetricsReport);
    ASSERT_FALSE(reports.empty());
    EXPECT_EQ(reports.front().payload["tp"], 1);
}

TEST(Session, StopControlEndsEarly) {
    const auto cfg = default_session();
    auto inbound = blink_messages({1000, 2000});
    inbound.push_back(client(Kind::SessionControl, {{"action", "stop"}}, 3));
    const auto served = serve(cfg, inbound);
    EXPECT_TRUE(served.report.partial);
    EXPECT_TRUE(served.report.trials.empty());
    EXPECT_FALSE(served.report.summary);
    const auto ended = served.outbound.back();
    EXPECT_EQ(ended.payload["action"], "ended");
    EXPECT_EQ(ended.payload["partial"], true);
}

TEST(Session, RejectsInvalidInput) {
    const auto cfg = default_session();
    std::vector<Message> inbound{
        client(Kind::BlinkIn, blink_payload(5000), 1),
        client(Kind::BlinkIn, blink_payload(4000), 2),  // backwards
        client(Kind::BlinkIn, Json::object(), 3),       // no time
        client(Kind::StateUpdate, Json::object(), 4),   // wrong kind
        client(Kind::SampleIn, sample_payload({6000, 10}), 5),
        {6, Direction::EngineToClient, Kind::BlinkIn, blink_payload(7000)},
        client(Kind::SessionControl, {{"action", "dance"}}, 7),
        client(Kind::SessionControl, {{"action", "advance"}, {"t_ms", 100}}, 8),
        client(Kind::SessionControl, {{"action", "stop"}}, 9),
    };
    const auto served = serve(cfg, inbound);
    std::vector<std::uint64_t> rejected;
    for (const auto& m : of_kind(served.outbound, Kind::SessionControl)) {
        if (m.payload.value("action", "") == "rejected") rejected.push_back(m.payload["in_reply_to"]);
    }
    EXPECT_EQ(rejected, (std::vector<std::uint64_t>{2, 3, 4, 5, 6, 7, 8}));
}

TEST(Session, MalformedLineOverStream) {
    auto cfg = default_session();
    std::istringstream in("not json\n" + encode(client(Kind::SessionControl, {{"action", "stop"}}, 2)) + "\n");
    std::ostringstream out;
    StreamTransport t(in, out);
    const auto r = run_session(cfg, t);
    EXPECT_TRUE(r.partial);
    std::istringstream lines(out.str());
    std::string line;
    bool saw = false;
    while (std::getline(lines, line)) {
        const auto m = decode(line);
        if (m.kind == Kind::SessionControl && m.payload.value("action", "") == "rejected") {
            saw = m.payload["reason"].get<std::string>().find("malformed") != std::string::npos;
        }
    }
    EXPECT_TRUE(saw);
}

TEST(Session, ConcurrentSendersAreSerialized) {
    const auto cfg = default_session(500);
    const auto blinks = ideal_session_blinks(cfg);
    auto [engine_end, client_end] = memory_pipe();
    auto fut = std::async(std::launch::async, [&, e = engine_end.get()] { return run_session(cfg, *e); });
    // Four threads interleave blinks; some arrive out of order and get
    // rejected, but the engine sees one total order.
    std::vector<std::thread> senders;
    for (int k = 0; k < 4; ++k) {
        senders.emplace_back([&, k] {
            for (std::size_t i = static_cast<std::size_t>(k); i < blinks.size(); i += 4) {
                client_end->send(client(Kind::BlinkIn, blink_payload(blinks[i]), i + 1));
            }
        });
    }
    for (auto& s : senders) s.join();
    client_end->send(client(Kind::SessionControl, {{"action", "stop"}}, 999));
    const auto out = drain(*client_end);
    const auto report = fut.get();
    for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i].seq, i + 1);

    // One total order: virtual time in StateUpdates never runs backwards and
    // every blink was either applied or explicitly rejected.
    std::int64_t last_t = -1;
    for (const auto& m : of_kind(out, Kind::StateUpdate)) {
        const auto t = m.payload["t_ms"].get<std::int64_t>();
        ASSERT_GE(t, last_t);
        last_t = t;
    }
    std::size_t rejected = 0;
    for (const auto& m : of_kind(out, Kind::SessionControl)) {
        if (m.payload.value("action", "") == "rejected") ++rejected;
    }
    std::size_t applied = 0;
    for (const auto& t : report.trials) applied += static_cast<std::size_t>(t.blinks);
    EXPECT_LE(applied + rejected, blinks.size());
    EXPECT_GT(applied, 0u);
    EXPECT_EQ(of_kind(out, Kind::MetricsReport).back().payload, report.to_json());
}

// --- Sensor paths -----------------------------------------------------------------

struct PlantedCapture {
    sh::BlinkTrace trace;
    std::vector<std::uint8_t> bytes;
};

PlantedCapture planted(const SessionConfig& cfg, std::uint64_t seed) {
    auto run = sh::run_session(cfg.scan, targets_of(cfg), sh::default_imperfect_user(seed));
    sh::CaptureSpec spec;
    spec.involuntary_rate_hz = 0.5;
    spec.seed = seed;
    PlantedCapture p;
    p.trace = run.trace;
    p.trace.records.clear();
    for (const auto t : sh::snap_to_grid(run.trace.blink_times(), spec.period_ms)) {
        p.trace.records.push_back({t, sh::TraceRecord::Kind::Blink});
    }
    const std::int64_t end = run.trace.records.back().t_ms + 2000;
    p.trace.records.push_back({end, sh::TraceRecord::Kind::Tick});
    p.bytes = sh::synthesize_capture(p.trace.blink_times(), end, spec);
    return p;
}

TEST(Session, CaptureMatchesEquivalentTrace) {
    const auto cfg = default_session(800);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto p = planted(cfg, seed);
        const auto via_trace = run_trace(cfg, p.trace);
        const auto via_capture = run_capture(cfg, p.bytes);
        ASSERT_FALSE(via_trace.partial);
        ASSERT_EQ(via_capture.total, via_trace.total) << seed;
        for (std::size_t i = 0; i < via_trace.trials.size(); ++i) {
            ASSERT_EQ(via_capture.trials[i].outcome(), via_trace.trials[i].outcome());
            ASSERT_EQ(via_capture.trials[i].end_ms, via_trace.trials[i].end_ms);
        }
    }
}

TEST(Session, CaptureFileInput) {
    const auto cfg = default_session(800);
    const auto p = planted(cfg, 9);
    const auto dir = std::filesystem::temp_directory_path() / "blinkscan_sessiond_test";
    std::filesystem::create_directories(dir);
    linkframe::write_capture(dir / "s.blk", p.bytes);
    auto c = cfg;
    c.input = InputSource::Capture;
    c.input_path = dir / "s.blk";
    c.task_log = dir / "tasks.csv";
    std::ostringstream sink;
    std::istringstream none;
    StreamTransport t(none, sink);
    const auto r = run_session(c, t);
    EXPECT_EQ(r.total, run_trace(cfg, p.trace).total);

    const auto log = scanmetrics::read_task_log(dir / "tasks.csv");
    ASSERT_EQ(log.size(), 10u);
    for (std::size_t i = 0; i < log.size(); ++i) {
        EXPECT_EQ(log[i].task, static_cast<int>(i) + 1);
        EXPECT_EQ(log[i].completed, r.trials[i].verdict == sh::Verdict::Hit);
        EXPECT_EQ(log[i].wrong_selection, r.trials[i].verdict == sh::Verdict::WrongSelection);
        EXPECT_NEAR(log[i].time_s, r.trials[i].time_s(), 1e-3);
    }
    std::filesystem::remove_all(dir);
}

TEST(Session, LiveFrameBytesMatchCapture) {
    auto cfg = default_session(800);
    const auto p = planted(cfg, 4);
    cfg.input = InputSource::LiveFrames;
    std::vector<Message> inbound;
    std::uint64_t seq = 1;
    static constexpr char kHex[] = "0123456789abcdef";
    // Odd chunk size so frames straddle messages.
    for (std::size_t off = 0; off < p.bytes.size(); off += 37) {
        std::string hex;
        for (std::size_t i = off; i < std::min(p.bytes.size(), off + 37); ++i) {
            hex += kHex[p.bytes[i] >> 4];
            hex += kHex[p.bytes[i] & 15];
        }
        inbound.push_back(client(Kind::SampleIn, {{"bytes", hex}}, seq++));
    }
    inbound.push_back(client(Kind::SessionControl, {{"action", "stop"}}, seq++));
    const auto served = serve(cfg, inbound);
    auto c = cfg;
    c.input = InputSource::ClientBlinks;
    EXPECT_EQ(served.report.total, run_capture(c, p.bytes).total);
}

// --- Transports ---------------------------------------------------------------------

TEST(Transport, TcpSessionEndToEnd) {
    const auto cfg = default_session();
    const auto blinks = ideal_session_blinks(cfg);
    TcpListener listener(0);
    auto fut = std::async(std::launch::async, [&] {
        auto conn = listener.accept();
        return run_session(cfg, *conn);
    });
    auto c = tcp_connect("127.0.0.1", listener.port());
    for (const auto& m : blink_messages(blinks)) c->send(m);
    const auto out = drain(*c);
    const auto report = fut.get();
    EXPECT_EQ(report.total.tp, 10);
    ASSERT_FALSE(out.empty());
    EXPECT_EQ(out.back().payload["action"], "ended");
    EXPECT_EQ(of_kind(out, Kind::MetricsReport).back().payload, report.to_json());
}

TEST(Transport, TcpMalformedLineAndDisconnect) {
    TcpListener listener(0);
    auto accepted = std::async(std::launch::async, [&] { return listener.accept(); });
    auto c = tcp_connect("127.0.0.1", listener.port());
    auto server = accepted.get();
    c->send(client(Kind::BlinkIn, blink_payload(5)));
    const auto first = server->receive(milliseconds(2000));
    ASSERT_TRUE(first);
    EXPECT_EQ(first->kind, Kind::BlinkIn);
    c->close();
    EXPECT_THROW(
        {
            for (;;) server->receive(milliseconds(2000));
        },
        TransportClosed);
}

TEST(Transport, MemoryQueueTimeoutAndClose) {
    auto [a, b] = memory_pipe();
    EXPECT_FALSE(a->receive(milliseconds(10)));
    b->send(client(Kind::BlinkIn, blink_payload(1)));
    b->close();
    EXPECT_TRUE(a->receive(milliseconds(10)));
    EXPECT_THROW(a->receive(milliseconds(10)), TransportClosed);
    EXPECT_THROW(a->send(client(Kind::BlinkIn, blink_payload(2))), TransportClosed);
}

TEST(Session, WallClockModeAdvancesOnItsOwn) {
    SessionConfig cfg;
    cfg.scan.scan_interval_ms = 20;
    cfg.tasks = {sh::default_task_script(cfg.scan)[0], sh::default_task_script(cfg.scan)[1]};
    cfg.virtual_time = false;
    auto [engine_end, client_end] = memory_pipe();
    auto fut = std::async(std::launch::async, [&, e = engine_end.get()] { return run_session(cfg, *e); });
    const auto out = drain(*client_end);
    const auto r = fut.get();
    // No blinks: both tasks time out after three cycles of four quadrants.
    ASSERT_EQ(r.trials.size(), 2u);
    for (const auto& t : r.trials) EXPECT_EQ(t.verdict, sh::Verdict::Missed);
    EXPECT_EQ(r.trials[1].end_ms, 2 * 3 * 4 * 20);
    // Highlights moved without any client input.
    EXPECT_GE(of_kind(out, Kind::StateUpdate).size(), 2u * 12u);
}

TEST(SessionConfig, Validation) {
    auto c = default_session();
    EXPECT_NO_THROW(c.validate());
    c.tasks.clear();
    EXPECT_THROW(c.validate(), ConfigInvalid);
    c = default_session();
    c.tasks[0].target = {1900, 1000, 100, 100};
    EXPECT_THROW(c.validate(), ConfigInvalid);
    c = default_session();
    c.input = InputSource::Trace;
    EXPECT_THROW(c.validate(), ConfigInvalid);
    c = default_session();
    c.scan.scan_interval_ms = 0;
    EXPECT_THROW(c.validate(), ConfigInvalid);
    EXPECT_EQ(parse_input_source("capture"), InputSource::Capture);
    EXPECT_FALSE(parse_input_source("webcam"));
}

}  // namespace
}  // namespace blinkscan::sessiond
