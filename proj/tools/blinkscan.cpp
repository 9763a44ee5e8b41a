#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "blinkscan/capture.hpp"
#include "blinkscan/published_tables.hpp"
#include "blinkscan/scanmetrics.hpp"
#include "blinkscan/session.hpp"
#include "blinkscan/simharness.hpp"
#include "blinkscan/trace.hpp"
#include "blinkscan/transport.hpp"

namespace fs = std::filesystem;
namespace sm = blinkscan::scanmetrics;
namespace sh = blinkscan::simharness;
namespace sd = blinkscan::sessiond;

namespace {

const fs::path kDataDir = BLINKSCAN_DATA_DIR;

// Exit codes.
constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kBadInput = 2;

struct ScanOptions {
    std::string screen = "1920x1080";
    std::int64_t interval_ms = 1000;
    int depth = 4;
    int step = 10;

    void add_to(CLI::App& app, bool with_interval) {
        app.add_option("--screen", screen, "Screen size WxH")->capture_default_str();
        app.add_option("--depth", depth, "Maximum block depth")->capture_default_str();
        app.add_option("--step", step, "Cursor step in pixels")->capture_default_str();
        if (with_interval) {
            app.add_option("--scan-interval-ms", interval_ms, "Highlight dwell time")->capture_default_str();
        }
    }

    sh::ScanConfig build() const {
        sh::ScanConfig cfg;
        int w = 0, h = 0;
        char x = 0;
        std::istringstream in(screen);
        if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof()) {
            throw CLI::ValidationError("--screen", "expected WxH, got '" + screen + "'");
        }
        cfg.screen = {0, 0, w, h};
        cfg.scan_interval_ms = interval_ms;
        cfg.max_depth = depth;
        cfg.step_px = step;
        cfg.validate();
        return cfg;
    }
};

std::vector<blinkscan::blockscan::Region> targets_of(const std::vector<sh::TrialSpec>& tasks) {
    std::vector<blinkscan::blockscan::Region> out;
    for (const auto& t : tasks) out.push_back(t.target);
    return out;
}

void print_report(std::ostream& out, const sd::SessionReport& r) {
    out << "trial\ttask\tverdict\ttime_s\tblinks\tcancels\n";
    for (std::size_t i = 0; i < r.trials.size(); ++i) {
        const auto& t = r.trials[i];
        char time[32];
        std::snprintf(time, sizeof time, "%.3f", t.time_s());
        out << t.index << '\t' << r.task_ids[i] << '\t' << sh::to_string(t.verdict) << '\t' << time << '\t'
            << t.blinks << '\t' << t.cancelled_attempts << '\n';
    }
    out << "TP " << r.total.tp << " FP " << r.total.fp << " FN " << r.total.fn;
    if (r.open_trials > 0) out << " (open " << r.open_trials << ")";
    out << '\n';
    if (r.summary) {
        const auto d = sm::display(*r.summary);
        out << "SA " << d.sa << " FAR " << d.far << " SR " << d.sr << " avg time " << d.avg_time << " s\n";
    } else {
        out << "no attempted selections\n";
    }
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
    ScanOptions scan;
    std::vector<std::int64_t> intervals{500, 600, 700, 800, 900, 1000};
    std::size_t trials = 500;
    std::uint64_t seed = 20240501;
    unsigned threads = 0;
    int tasks_per_session = 10;
    sh::UserModel user = sh::default_imperfect_user();
    bool ideal = false;
    std::string out;
    std::string trace_out;
    std::string capture_out;
};

fs::path with_interval_suffix(const fs::path& p, std::int64_t interval, bool many) {
    if (!many) return p;
    fs::path q = p;
    q.replace_filename(p.stem().string() + "_" + std::to_string(interval) + p.extension().string());
    return q;
}

int run_simulate(SimulateArgs a) {
    sh::UserModel user = a.ideal ? sh::ideal_user(a.user.reaction_mean_ms) : a.user;
    user.rng_seed = a.seed;
    user.validate();

    sh::SweepOptions opts;
    opts.base = a.scan.build();
    opts.threads = a.threads;
    opts.tasks_per_session = a.tasks_per_session;

    const auto points = sh::sweep(a.intervals, user, a.trials, opts);
    const std::string csv = sh::sweep_csv(points);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream f(a.out);
        if (!(f << csv)) throw std::runtime_error("cannot write " + a.out);
        for (const auto& p : points) {
            const auto d = sm::display(p.summary);
            std::cout << p.interval_ms << " ms: SA " << d.sa << " FAR " << d.far << " SR " << d.sr
                      << " avg time " << d.avg_time << " s over " << p.n_trials << " trials\n";
        }
    }

    // One scripted session per interval for inspection or replay.
    const bool many = a.intervals.size() > 1;
    if (!a.trace_out.empty() || !a.capture_out.empty()) {
        for (const auto interval : a.intervals) {
            auto cfg = opts.base;
            cfg.scan_interval_ms = interval;
            const auto targets = targets_of(sh::default_task_script(cfg));
            const auto run = sh::run_session(cfg, targets, user);
            if (!a.trace_out.empty()) {
                sh::write_trace(with_interval_suffix(a.trace_out, interval, many), run.trace);
            }
            if (!a.capture_out.empty()) {
                sh::CaptureSpec spec;
                spec.involuntary_rate_hz = user.involuntary_rate_hz;
                spec.seed = a.seed;
                const auto blinks = sh::snap_to_grid(run.trace.blink_times(), spec.period_ms);
                const auto bytes = sh::synthesize_capture(blinks, run.trace.records.back().t_ms, spec);
                blinkscan::linkframe::write_capture(with_interval_suffix(a.capture_out, interval, many), bytes);
            }
        }
    }
    return kOk;
}

// --- replay ------------------------------------------------------------------

struct ReplayArgs {
    std::string file;
    std::string input = "trace";
    ScanOptions scan;
    std::string task_log;
    bool json = false;
};

int run_replay(const ReplayArgs& a) {
    const auto source = sd::parse_input_source(a.input);
    if (source != sd::InputSource::Trace && source != sd::InputSource::Capture) {
        std::cerr << "replay: --input must be trace or capture\n";
        return kBadInput;
    }
    sd::SessionConfig cfg;
    sd::SessionReport report;
    std::optional<sh::BlinkTrace> trace;
    try {
        if (*source == sd::InputSource::Trace) {
            trace = sh::read_trace(fs::path(a.file));
            cfg = sd::config_for_trace(*trace);
        } else {
            cfg.scan = a.scan.build();
            cfg.tasks = sh::default_task_script(cfg.scan);
        }
        cfg.input = *source;
        cfg.input_path = a.file;
        if (!a.task_log.empty()) cfg.task_log = a.task_log;
        cfg.validate();
        if (*source == sd::InputSource::Trace) {
            report = sd::run_trace(cfg, *trace);
        } else {
            report = sd::run_capture(cfg, blinkscan::linkframe::read_capture(a.file));
        }
    } catch (const sh::MalformedTrace& e) {
        std::cerr << "malformed trace: " << a.file << ":" << e.line() << ": " << e.what() << '\n';
        return kBadInput;
    }
    if (a.json) {
        std::cout << report.to_json(true).dump(2) << '\n';
    } else {
        print_report(std::cout, report);
    }
    return kOk;
}

// --- serve -------------------------------------------------------------------

struct ServeArgs {
    int port = 0;
    bool stdio = false;
    std::string input = "client";
    std::string file;
    ScanOptions scan;
    bool wall_clock = false;
    std::string task_log;
};

int run_serve(const ServeArgs& a) {
    const auto source = sd::parse_input_source(a.input);
    if (!source) {
        std::cerr << "serve: unknown --input '" << a.input << "'\n";
        return kBadInput;
    }
    sd::SessionConfig cfg;
    if (*source == sd::InputSource::Trace) {
        if (a.file.empty()) {
            std::cerr << "serve: --input trace needs --file\n";
            return kBadInput;
        }
        try {
            cfg = sd::config_for_trace(sh::read_trace(fs::path(a.file)));
        } catch (const sh::MalformedTrace& e) {
            std::cerr << "malformed trace: " << a.file << ":" << e.line() << ": " << e.what() << '\n';
            return kBadInput;
        }
    } else {
        cfg.scan = a.scan.build();
        cfg.tasks = sh::default_task_script(cfg.scan);
    }
    cfg.input = *source;
    if (!a.file.empty()) cfg.input_path = a.file;
    cfg.virtual_time = !a.wall_clock;
    if (!a.task_log.empty()) cfg.task_log = a.task_log;
    cfg.validate();

    sd::SessionReport report;
    if (a.stdio) {
        sd::StreamTransport t(std::cin, std::cout);
        report = sd::run_session(cfg, t);
    } else {
        sd::TcpListener listener(static_cast<std::uint16_t>(a.port));
        std::cerr << "listening on 127.0.0.1:" << listener.port() << std::endl;
        auto t = listener.accept();
        report = sd::run_session(cfg, *t);
        t->close();
    }
    print_report(std::cerr, report);
    return kOk;
}

// --- metrics -----------------------------------------------------------------

struct MetricsArgs {
    std::string counts = (kDataDir / "table4_counts.csv").string();
    std::string published = (kDataDir / "table2_published.csv").string();
    std::int64_t row_ms = 1000;
    std::optional<std::int64_t> tp, fp, fn;
};

int run_metrics(const MetricsArgs& a) {
    if (a.tp || a.fp || a.fn) {
        sm::TrialOutcome o;
        o.tp = a.tp.value_or(0);
        o.fp = a.fp.value_or(0);
        o.fn = a.fn.value_or(0);
        const auto m = sm::summarize(o);
        std::printf("SA %.3f FAR %.3f SR %.3f\n", m.sa_pct, m.far_pct, m.sr_pct);
        return kOk;
    }

    std::vector<sm::PublishedUserRow> rows;
    try {
        rows = sm::read_user_rows(fs::path(a.counts));
    } catch (const sm::MalformedTable& e) {
        std::cerr << "malformed table: " << a.counts << ":" << e.line() << ": " << e.what() << '\n';
        return kBadInput;
    }

    std::vector<int> flagged;
    std::printf("user  tp fp fn   SA       FAR      SR       check\n");
    for (const auto& r : rows) {
        const auto c = sm::check_row(r);
        std::printf("%-5d %2lld %2lld %2lld   %-8.3f %-8.3f %-8.3f %s\n", r.user, static_cast<long long>(r.tp),
                    static_cast<long long>(r.fp), static_cast<long long>(r.fn), c.recomputed.sa_pct,
                    c.recomputed.far_pct, c.recomputed.sr_pct, c.discrepant() ? "DISCREPANT" : "ok");
        for (const auto& issue : c.issues) std::printf("      %s\n", issue.c_str());
        if (c.discrepant()) flagged.push_back(r.user);
    }

    const auto mean = sm::aggregate(sm::printed_records(rows));
    const auto d = sm::display(mean);
    std::printf("Mean of printed columns: SA %s FAR %s SR %s\n", d.sa.c_str(), d.far.c_str(), d.sr.c_str());

    std::string list;
    for (const int u : flagged) list += (list.empty() ? "" : ", ") + std::to_string(u);
    std::printf("Discrepant rows: %s\n", list.empty() ? "none" : list.c_str());

    if (!a.published.empty()) {
        std::vector<sm::PublishedIntervalRow> table;
        try {
            table = sm::read_interval_rows(fs::path(a.published));
        } catch (const sm::MalformedTable& e) {
            std::cerr << "malformed table: " << a.published << ":" << e.line() << ": " << e.what() << '\n';
            return kBadInput;
        }
        for (const auto& row : table) {
            if (row.interval_ms != a.row_ms) continue;
            const bool match = row.sa.matches(std::trunc(mean.sa_pct)) && row.far.matches(mean.far_pct) &&
                               row.sr.matches(mean.sr_pct);
            std::printf("Published %lld ms row: SA %g FAR %g SR %g (%s)\n", static_cast<long long>(row.interval_ms),
                        row.sa.value, row.far.value, row.sr.value, match ? "matches" : "differs");
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blink-driven block-scanning switch input engine"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo sweep over scan intervals, CSV output");
    sim.scan.add_to(*simulate, false);
    simulate->add_option("--scan-interval-ms", sim.intervals, "Intervals to sweep")->capture_default_str();
    simulate->add_option("--trials", sim.trials, "Trials per interval")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->capture_default_str();
    simulate->add_option("--tasks-per-session", sim.tasks_per_session, "Trials scored together as one user")
        ->capture_default_str();
    simulate->add_option("--reaction-ms", sim.user.reaction_mean_ms, "Mean reaction time")->capture_default_str();
    simulate->add_option("--reaction-sd-ms", sim.user.reaction_sd_ms, "Reaction time spread")->capture_default_str();
    simulate->add_option("--miss-prob", sim.user.miss_prob, "Chance of missing a wanted item")
        ->capture_default_str();
    simulate->add_option("--premature-prob", sim.user.premature_prob, "Chance of blinking on an unwanted item")
        ->capture_default_str();
    simulate->add_option("--involuntary-hz", sim.user.involuntary_rate_hz, "Involuntary dip rate in captures")
        ->capture_default_str();
    simulate->add_option("--min-blink-gap-ms", sim.user.min_blink_gap_ms, "Shortest time between blinks")
        ->capture_default_str();
    simulate->add_flag("--cancel-on-wrong", sim.user.cancel_on_wrong_descent,
                       "Cancel instead of clicking after a wrong descent");
    simulate->add_flag("--ideal", sim.ideal, "Perfect user with fixed reaction time");
    simulate->add_option("--out", sim.out, "CSV output path (stdout when omitted)");
    simulate->add_option("--trace-out", sim.trace_out, "Write one scripted session per interval as a trace");
    simulate->add_option("--capture-out", sim.capture_out, "Write one scripted session per interval as a .blk capture");

    ReplayArgs rep;
    auto* replay = app.add_subcommand("replay", "Score a recorded trace or sensor capture");
    replay->add_option("file", rep.file, "Trace or .blk capture")->required()->check(CLI::ExistingFile);
    replay->add_option("--input", rep.input, "trace or capture")->capture_default_str();
    rep.scan.add_to(*replay, true);
    replay->add_option("--task-log", rep.task_log, "Write the per-task log CSV here");
    replay->add_flag("--json", rep.json, "Print the final metrics report as JSON");

    ServeArgs srv;
    auto* serve = app.add_subcommand("serve", "Run a live session over TCP or stdin/stdout");
    auto* port = serve->add_option("--port", srv.port, "TCP port on 127.0.0.1 (0 picks one)");
    serve->add_flag("--stdio", srv.stdio, "Use stdin/stdout instead of TCP")->excludes(port);
    serve->add_option("--input", srv.input, "client, frames, trace or capture")->capture_default_str();
    serve->add_option("--file", srv.file, "Trace or capture file for file input")->check(CLI::ExistingFile);
    serve->add_flag("--wall-clock", srv.wall_clock, "Stamp events on arrival and advance on a timer");
    srv.scan.add_to(*serve, true);
    serve->add_option("--task-log", srv.task_log, "Write the per-task log CSV here");

    MetricsArgs met;
    auto* metrics = app.add_subcommand("metrics", "Recompute SA, FAR and SR from per-user counts");
    metrics->add_option("counts", met.counts, "Per-user counts CSV")->capture_default_str()->check(CLI::ExistingFile);
    metrics->add_option("--published", met.published, "Per-interval table to compare against (empty to skip)")
        ->capture_default_str();
    metrics->add_option("--row-ms", met.row_ms, "Published row to compare")->capture_default_str();
    metrics->add_option("--tp", met.tp, "Summarize a single outcome instead");
    metrics->add_option("--fp", met.fp);
    metrics->add_option("--fn", met.fn);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return run_simulate(sim);
        if (*replay) return run_replay(rep);
        if (*serve) return run_serve(srv);
        if (*metrics) return run_metrics(met);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kBadInput;
    } catch (const sd::ConfigInvalid& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
