#include "blinkscan/session.hpp"

#include <chrono>
#include <fstream>

#include "blinkscan/trace.hpp"

namespace blinkscan::sessiond {

namespace bs = blockscan;
namespace sh = simharness;

std::string_view to_string(InputSource s) {
    switch (s) {
        case InputSource::ClientBlinks: return "client";
        case InputSource::LiveFrames: return "frames";
        case InputSource::Trace: return "trace";
        case InputSource::Capture: return "capture";
    }
    return "?";
}

std::optional<InputSource> parse_input_source(std::string_view s) {
    for (const auto src : {InputSource::ClientBlinks, InputSource::LiveFrames, InputSource::Trace,
                           InputSource::Capture}) {
        if (to_string(src) == s) return src;
    }
    return std::nullopt;
}

void SessionConfig::validate() const {
    try {
        scan.validate();
        thresholds.validate();
        rules.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigInvalid(e.what());
    }
    if (tasks.empty()) throw ConfigInvalid("task script is empty");
    for (const auto& t : tasks) {
        if (t.target.empty() || !scan.screen.contains(t.target)) {
            throw ConfigInvalid("task " + std::to_string(t.task_id) + " target lies outside the screen");
        }
    }
    const bool file_input = input == InputSource::Trace || input == InputSource::Capture;
    if (file_input && !input_path) throw ConfigInvalid("trace and capture input need a file");
    if (!file_input && input_path) throw ConfigInvalid("an input file is only used with trace or capture input");
}

std::vector<scanmetrics::TaskLogRow> SessionReport::task_log() const {
    std::vector<scanmetrics::TaskLogRow> rows;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials[i];
        rows.push_back({i < task_ids.size() ? task_ids[i] : t.index + 1, t.verdict == sh::Verdict::Hit,
                        t.time_s(), t.verdict == sh::Verdict::WrongSelection});
    }
    return rows;
}

Json SessionReport::to_json(bool final_report) const {
    Json j;
    j["final"] = final_report;
    j["partial"] = partial;
    j["open_trials"] = open_trials;
    j["end_ms"] = end_ms;
    j["tp"] = total.tp;
    j["fp"] = total.fp;
    j["fn"] = total.fn;
    if (summary) {
        j["summary"] = {{"sa_pct", summary->sa_pct},
                        {"far_pct", summary->far_pct},
                        {"sr_pct", summary->sr_pct},
                        {"avg_selection_time_s", summary->avg_selection_time_s
                                                     ? Json(*summary->avg_selection_time_s)
                                                     : Json(nullptr)}};
        const auto d = scanmetrics::display(*summary);
        j["display"] = {{"sa", d.sa}, {"far", d.far}, {"sr", d.sr}, {"avg_time", d.avg_time}};
    } else {
        j["summary"] = nullptr;
        j["display"] = nullptr;
    }
    Json trials_json = Json::array();
    for (std::size_t i = 0; i < trials.size(); ++i) {
        trials_json.push_back(sessiond::trial_json(trials[i], i < task_ids.size() ? task_ids[i] : 0));
    }
    j["trials"] = trials_json;
    return j;
}

namespace {

std::vector<bs::Region> targets_of(const SessionConfig& cfg) {
    std::vector<bs::Region> out;
    for (const auto& t : cfg.tasks) out.push_back(t.target);
    return out;
}

std::optional<std::vector<std::uint8_t>> parse_hex(const std::string& s) {
    if (s.size() % 2 != 0) return std::nullopt;
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 2) {
        auto nib = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            return -1;
        };
        const int hi = nib(s[i]), lo = nib(s[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
    }
    return out;
}

}  // namespace

Engine::Engine(SessionConfig cfg, Sink sink)
    : cfg_((cfg.validate(), std::move(cfg))),
      sink_(std::move(sink)),
      runner_(cfg_.scan, targets_of(cfg_), cfg_.rules, 0,
              sh::TrialRunner::Observer{
                  [this](const bs::ScanState& s, std::int64_t t, int trial) {
                      if (announced_trial_ < 0) return;  // before start()
                      if (trial != announced_trial_) {
                          announced_trial_ = trial;
                          emit(Kind::TargetSet,
                               target_payload(trial, cfg_.tasks[static_cast<std::size_t>(trial)].task_id,
                                              cfg_.tasks[static_cast<std::size_t>(trial)].target, t));
                      }
                      emit(Kind::StateUpdate, state_payload(s, cfg_.scan, t, trial));
                  },
                  [this](const sh::TrialResult&) { emit(Kind::MetricsReport, report().to_json(false)); },
              }),
      detector_(cfg_.thresholds) {}

void Engine::emit(Kind kind, Json payload) {
    Message m;
    m.seq = ++seq_;
    m.dir = Direction::EngineToClient;
    m.kind = kind;
    m.payload = std::move(payload);
    if (sink_) sink_(m);
}

void Engine::reject(const std::string& reason, const Message* m) {
    Json p{{"action", "rejected"}, {"reason", reason}};
    if (m) p["in_reply_to"] = m->seq;
    emit(Kind::SessionControl, std::move(p));
}

void Engine::start() {
    Json cfg{{"screen", sessiond::to_json(cfg_.scan.screen)},
             {"scan_interval_ms", cfg_.scan.scan_interval_ms},
             {"max_depth", cfg_.scan.max_depth},
             {"step_px", cfg_.scan.step_px},
             {"tasks", cfg_.tasks.size()},
             {"input", to_string(cfg_.input)},
             {"virtual_time", cfg_.virtual_time}};
    emit(Kind::SessionControl, {{"action", "started"}, {"config", cfg}});
    announced_trial_ = 0;
    const auto& task = cfg_.tasks.front();
    emit(Kind::TargetSet, target_payload(0, task.task_id, task.target, runner_.now()));
    emit(Kind::StateUpdate, state_payload(runner_.state(), cfg_.scan, runner_.now(), 0));
}

std::int64_t Engine::next_change_ms() const {
    if (runner_.finished()) return cfg_.scan.scan_interval_ms;
    const std::int64_t step = bs::time_to_next_step(runner_.state(), cfg_.scan);
    return std::max<std::int64_t>(1, std::min(step, runner_.deadline() - runner_.now()));
}

void Engine::advance_to(std::int64_t t) {
    if (t > runner_.now()) runner_.advance_to(t);
}

bool Engine::blink(std::int64_t t) {
    if (runner_.finished()) {
        reject("session has no open task", nullptr);
        return false;
    }
    if (t < runner_.now() || (!blinks_.empty() && t <= blinks_.back())) {
        reject("blink at " + std::to_string(t) + " ms is not after " + std::to_string(runner_.now()) + " ms",
               nullptr);
        return false;
    }
    runner_.blink_at(t);
    blinks_.push_back(t);
    return true;
}

void Engine::sensor_event(const std::optional<blinksense::BlinkEvent>& e) {
    if (e) blink(e->onset_t);
}

void Engine::sample(const blinksense::SensorSample& s) {
    if (last_sample_t_ && s.t_ms <= *last_sample_t_) return;
    last_sample_t_ = s.t_ms;
    const bool candidate =
        blinksense::classify_sample(s, cfg_.thresholds) == blinksense::SampleClass::BlinkCandidate;
    sensor_event(detector_.push(s));
    // A blink's onset can lie anywhere inside an open run, so time only
    // moves on once the run has closed.
    if (!candidate) advance_to(s.t_ms);
}

void Engine::frame_bytes(std::span<const std::uint8_t> bytes) {
    for (const auto& s : decoder_.feed(bytes)) sample(s);
}

void Engine::handle(const Message& m, std::optional<std::int64_t> arrival_ms) {
    if (m.dir != Direction::ClientToEngine) return reject("expected a client_to_engine message", &m);
    auto time_of = [&](const Json& p) -> std::optional<std::int64_t> {
        if (arrival_ms) return arrival_ms;
        if (!p.contains("t_ms") || !p["t_ms"].is_number_integer()) return std::nullopt;
        return p["t_ms"].get<std::int64_t>();
    };
    switch (m.kind) {
        case Kind::BlinkIn: {
            if (cfg_.input != InputSource::ClientBlinks) return reject("input source is not client blinks", &m);
            const auto t = time_of(m.payload);
            if (!t) return reject("BlinkIn needs an integer t_ms", &m);
            if (runner_.finished()) return reject("session has no open task", &m);
            if (*t < runner_.now() || (!blinks_.empty() && *t <= blinks_.back())) {
                return reject("blink time runs backwards", &m);
            }
            blink(*t);
            return;
        }
        case Kind::SampleIn: {
            if (cfg_.input != InputSource::LiveFrames) return reject("input source is not a frame stream", &m);
            if (m.payload.contains("bytes")) {
                const auto bytes = m.payload["bytes"].is_string()
                                       ? parse_hex(m.payload["bytes"].get<std::string>())
                                       : std::nullopt;
                if (!bytes) return reject("bytes must be a hex string", &m);
                frame_bytes(*bytes);
                return;
            }
            const auto t = time_of(m.payload);
            if (!t || !m.payload.contains("v") || !m.payload["v"].is_number_integer()) {
                return reject("SampleIn needs t_ms and v, or bytes", &m);
            }
            sample({*t, m.payload["v"].get<int>()});
            return;
        }
        case Kind::SessionControl: {
            const std::string action = m.payload.value("action", "");
            if (action == "advance") {
                if (arrival_ms) return;  // the wall clock drives time
                const auto t = time_of(m.payload);
                if (!t) return reject("advance needs an integer t_ms", &m);
                if (*t < runner_.now()) return reject("advance runs backwards", &m);
                advance_to(*t);
            } else if (action == "stop") {
                stopped_ = true;
            } else if (action == "malformed") {
                reject("malformed message: " + m.payload.value("error", std::string{}), &m);
            } else if (action != "start" && action != "ping") {
                reject("unknown control action '" + action + "'", &m);
            }
            return;
        }
        case Kind::StateUpdate:
        case Kind::TargetSet:
        case Kind::MetricsReport:
            return reject(std::string(to_string(m.kind)) + " is not accepted from clients", &m);
    }
}

SessionReport Engine::report() const {
    SessionReport r;
    r.trials = runner_.results();
    for (const auto& t : cfg_.tasks) r.task_ids.push_back(t.task_id);
    r.task_ids.resize(r.trials.size());
    r.total = sh::total_outcome(r.trials);
    try {
        r.summary = scanmetrics::summarize(r.total);
    } catch (const scanmetrics::EmptyDenominator&) {
        r.summary.reset();
    }
    r.open_trials = runner_.trial_count() - runner_.current_trial();
    r.partial = r.open_trials > 0;
    r.end_ms = runner_.now();
    return r;
}

SessionReport Engine::finish() {
    if (finished_) return report();
    if (cfg_.input == InputSource::LiveFrames) {
        for (const auto& s : decoder_.finish()) sample(s);
    }
    if (cfg_.input == InputSource::LiveFrames || cfg_.input == InputSource::Capture) {
        sensor_event(detector_.finish());
    }
    finished_ = true;
    const auto r = report();
    emit(Kind::MetricsReport, r.to_json(true));
    emit(Kind::SessionControl, {{"action", "ended"}, {"partial", r.partial}});
    if (cfg_.task_log) {
        std::ofstream out(*cfg_.task_log);
        if (!out) throw std::runtime_error("cannot write " + cfg_.task_log->string());
        scanmetrics::write_task_log(out, r.task_log());
    }
    return r;
}

sh::BlinkTrace Engine::recorded_trace() const {
    sh::BlinkTrace t;
    t.cfg = cfg_.scan;
    t.rules = cfg_.rules;
    t.targets = targets_of(cfg_);
    for (const auto b : blinks_) t.records.push_back({b, sh::TraceRecord::Kind::Blink});
    const std::int64_t end = runner_.now();
    if (blinks_.empty() ? end > 0 : end > blinks_.back()) {
        t.records.push_back({end, sh::TraceRecord::Kind::Tick});
    }
    return t;
}

SessionReport run_trace(const SessionConfig& cfg, const sh::BlinkTrace& trace, const Engine::Sink& sink) {
    SessionConfig c = cfg;
    c.input = InputSource::Trace;
    if (!c.input_path) c.input_path = "<memory>";
    Engine e(c, sink);
    e.start();
    for (const auto& r : trace.records) {
        if (r.kind == sh::TraceRecord::Kind::Blink) {
            e.blink(r.t_ms);
        } else {
            e.advance_to(r.t_ms);
        }
    }
    return e.finish();
}

SessionReport run_capture(const SessionConfig& cfg, std::span<const std::uint8_t> bytes,
                          const Engine::Sink& sink) {
    SessionConfig c = cfg;
    c.input = InputSource::Capture;
    if (!c.input_path) c.input_path = "<memory>";
    Engine e(c, sink);
    e.start();
    for (const auto& s : linkframe::decode_stream(bytes).samples) e.sample(s);
    return e.finish();
}

SessionConfig config_for_trace(const sh::BlinkTrace& trace) {
    SessionConfig c;
    c.scan = trace.cfg;
    c.rules = trace.rules;
    int id = 1;
    for (const auto& t : trace.targets) c.tasks.push_back({t, id++, trace.cfg});
    return c;
}

SessionReport run_session(const SessionConfig& cfg, Transport& transport) {
    cfg.validate();
    bool closed = false;
    auto sink = [&](const Message& m) {
        if (closed) return;
        try {
            transport.send(m);
        } catch (const TransportClosed&) {
            closed = true;
        }
    };

    if (cfg.input == InputSource::Trace) {
        return run_trace(cfg, sh::read_trace(*cfg.input_path), sink);
    }
    if (cfg.input == InputSource::Capture) {
        return run_capture(cfg, linkframe::read_capture(*cfg.input_path), sink);
    }

    Engine e(cfg, sink);
    e.start();
    const auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    };
    while (!e.tasks_done() && !closed && !e.stopped_) {
        std::optional<std::chrono::milliseconds> timeout;
        if (!cfg.virtual_time) timeout = std::chrono::milliseconds(e.next_change_ms());
        std::optional<Message> m;
        try {
            m = transport.receive(timeout);
        } catch (const TransportClosed&) {
            closed = true;
            break;
        }
        std::optional<std::int64_t> arrival;
        if (!cfg.virtual_time) {
            arrival = wall_ms();
            e.advance_to(*arrival);
        }
        if (m) e.handle(*m, arrival);
    }
    return e.finish();
}

}  // namespace blinkscan::sessiond
