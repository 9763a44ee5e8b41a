#include "blinkscan/trace.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace blinkscan::simharness {

namespace bs = blockscan;

MalformedTrace::MalformedTrace(const std::string& what, int line)
    : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

constexpr std::string_view kMagic = "#trace v1";

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

template <class T>
T number(const std::string& s, int line, const char* field) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
        throw MalformedTrace(std::string("bad ") + field + " '" + s + "'", line);
    }
    return v;
}

std::string region_text(const Region& r) {
    return std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
           std::to_string(r.h);
}

}  // namespace

std::string trace_header_fields(const BlinkTrace& t) {
    const auto& c = t.cfg;
    if (c.screen.x != 0 || c.screen.y != 0) {
        throw std::invalid_argument("trace: screen origin must be 0,0");
    }
    std::ostringstream os;
    os << kMagic << " screen=" << c.screen.w << 'x' << c.screen.h
       << " interval=" << c.scan_interval_ms << " depth=" << c.max_depth << " step=" << c.step_px
       << " dirs=";
    for (std::size_t i = 0; i < c.directions.size(); ++i) {
        os << (i ? ";" : "") << c.directions[i].dx << ',' << c.directions[i].dy;
    }
    os << " actions=";
    for (std::size_t i = 0; i < c.actions.size(); ++i) {
        os << (i ? "," : "") << bs::to_string(c.actions[i]);
    }
    os << " idle=";
    if (c.idle_reset_ms) {
        os << *c.idle_reset_ms;
    } else {
        os << "none";
    }
    os << " budget=" << t.rules.budget_cycles << " attempts=" << t.rules.max_attempts
       << " targets=";
    for (std::size_t i = 0; i < t.targets.size(); ++i) {
        os << (i ? ";" : "") << region_text(t.targets[i]);
    }
    return os.str();
}

std::uint64_t config_hash(const BlinkTrace& t) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : trace_header_fields(t)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_trace(std::ostream& out, const BlinkTrace& t) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(t)));
    out << trace_header_fields(t) << " hash=" << hash << '\n';
    for (const auto& r : t.records) {
        out << r.t_ms << '\t' << (r.kind == TraceRecord::Kind::Blink ? "blink" : "tick") << '\n';
    }
    out << "#end " << t.records.size() << '\n';
}

void write_trace(const std::filesystem::path& path, const BlinkTrace& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_trace(out, t);
}

BlinkTrace read_trace(std::istream& in) {
    BlinkTrace t;
    std::string line;
    int n = 0;

    if (!std::getline(in, line)) throw MalformedTrace("empty file", 0);
    ++n;
    if (line.rfind(kMagic, 0) != 0) throw MalformedTrace("missing '#trace v1' header", n);

    std::map<std::string, std::string> kv;
    for (const auto& tok : split(line.substr(kMagic.size()), ' ')) {
        if (tok.empty()) continue;
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw MalformedTrace("bad header field '" + tok + "'", n);
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto field = [&](const char* key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw MalformedTrace(std::string("header lacks ") + key, n);
        return it->second;
    };

    const auto& screen = field("screen");
    const auto x = screen.find('x');
    if (x == std::string::npos) throw MalformedTrace("bad screen '" + screen + "'", n);
    t.cfg.screen = {0, 0, number<int>(screen.substr(0, x), n, "screen"),
                    number<int>(screen.substr(x + 1), n, "screen")};
    t.cfg.scan_interval_ms = number<std::int64_t>(field("interval"), n, "interval");
    t.cfg.max_depth = number<int>(field("depth"), n, "depth");
    t.cfg.step_px = number<int>(field("step"), n, "step");

    const auto dirs = split(field("dirs"), ';');
    if (dirs.size() != 8) throw MalformedTrace("expected 8 directions", n);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto xy = split(dirs[i], ',');
        if (xy.size() != 2) throw MalformedTrace("bad direction '" + dirs[i] + "'", n);
        t.cfg.directions[i] = {number<int>(xy[0], n, "direction"), number<int>(xy[1], n, "direction")};
    }

    t.cfg.actions.clear();
    for (const auto& a : split(field("actions"), ',')) {
        const auto act = bs::parse_action(a);
        if (!act) throw MalformedTrace("unknown action '" + a + "'", n);
        t.cfg.actions.push_back(*act);
    }
    const auto& idle = field("idle");
    if (idle != "none") t.cfg.idle_reset_ms = number<std::int64_t>(idle, n, "idle");
    t.rules.budget_cycles = number<int>(field("budget"), n, "budget");
    t.rules.max_attempts = number<int>(field("attempts"), n, "attempts");

    for (const auto& r : split(field("targets"), ';')) {
        const auto p = split(r, ',');
        if (p.size() != 4) throw MalformedTrace("bad target '" + r + "'", n);
        t.targets.push_back({number<int>(p[0], n, "target"), number<int>(p[1], n, "target"),
                             number<int>(p[2], n, "target"), number<int>(p[3], n, "target")});
    }

    try {
        t.cfg.validate();
        t.rules.validate();
    } catch (const std::invalid_argument& e) {
        throw MalformedTrace(e.what(), n);
    }
    for (const auto& r : t.targets) {
        if (r.empty() || !t.cfg.screen.contains(r)) throw MalformedTrace("target off screen", n);
    }
    {
        const auto& text = field("hash");
        std::uint64_t h = 0;
        const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), h, 16);
        if (ec != std::errc{} || p != text.data() + text.size()) {
            throw MalformedTrace("bad hash '" + text + "'", n);
        }
        if (h != config_hash(t)) throw MalformedTrace("config hash mismatch", n);
    }

    bool ended = false;
    while (std::getline(in, line)) {
        ++n;
        if (ended) {
            if (!line.empty()) throw MalformedTrace("content after #end", n);
            continue;
        }
        if (line.rfind("#end ", 0) == 0) {
            const auto count = number<std::size_t>(line.substr(5), n, "record count");
            if (count != t.records.size()) {
                throw MalformedTrace("#end says " + std::to_string(count) + " records, found " +
                                         std::to_string(t.records.size()),
                                     n);
            }
            ended = true;
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw MalformedTrace("expected '<t_ms>\\t<kind>'", n);
        TraceRecord r;
        r.t_ms = number<std::int64_t>(line.substr(0, tab), n, "time");
        const auto kind = line.substr(tab + 1);
        if (kind == "blink") {
            r.kind = TraceRecord::Kind::Blink;
        } else if (kind == "tick") {
            r.kind = TraceRecord::Kind::Tick;
        } else {
            throw MalformedTrace("unknown kind '" + kind + "'", n);
        }
        if (r.t_ms < 0) throw MalformedTrace("negative time", n);
        if (!t.records.empty() && r.t_ms <= t.records.back().t_ms) {
            throw MalformedTrace("times must be strictly increasing", n);
        }
        t.records.push_back(r);
    }
    if (!ended) throw MalformedTrace("truncated: missing #end", n);
    return t;
}

BlinkTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_trace(in);
}

}  // namespace blinkscan::simharness
