#include "blinkscan/published_tables.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace blinkscan::scanmetrics {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parse_int(const std::string& s, int line) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw MalformedTable("not an integer: '" + s + "'", line);
    }
    return v;
}

bool parse_yes_no(const std::string& s, int line) {
    if (s == "Yes") return true;
    if (s == "No") return false;
    throw MalformedTable("expected Yes or No, got '" + s + "'", line);
}

// Reads non-empty lines, checks the header, returns (line number, cells).
std::vector<std::pair<int, std::vector<std::string>>> read_csv(std::istream& in,
                                                               const std::string& header) {
    std::vector<std::pair<int, std::vector<std::string>>> rows;
    std::string line;
    int n = 0;
    bool seen_header = false;
    const auto expected = split_csv(header);
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto cells = split_csv(line);
        if (!seen_header) {
            if (cells != expected) throw MalformedTable("expected header '" + header + "'", n);
            seen_header = true;
            continue;
        }
        if (cells.size() != expected.size()) {
            throw MalformedTable("expected " + std::to_string(expected.size()) + " columns", n);
        }
        rows.emplace_back(n, std::move(cells));
    }
    if (!seen_header) throw MalformedTable("missing header", n);
    return rows;
}

}  // namespace

MalformedTable::MalformedTable(const std::string& what, int line)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

PrintedValue PrintedValue::parse(const std::string& text) {
    PrintedValue p;
    const std::string t = trim(text);
    std::size_t used = 0;
    try {
        p.value = std::stod(t, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    if (used != t.size()) throw std::invalid_argument("not a number: '" + text + "'");
    const auto dot = t.find('.');
    p.decimals = dot == std::string::npos ? 0 : static_cast<int>(t.size() - dot - 1);
    return p;
}

bool PrintedValue::matches(double exact) const {
    const double half_ulp = 0.5 * std::pow(10.0, -decimals);
    return std::abs(exact - value) <= half_ulp + 1e-9;
}

RowCheck check_row(const PublishedUserRow& row) {
    RowCheck c;
    c.user = row.user;
    auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(4);
        os << v;
        return os.str();
    };

    if (row.tp + row.fn != row.tasks) {
        c.issues.push_back("tp+fn=" + std::to_string(row.tp + row.fn) + " but " +
                           std::to_string(row.tasks) + " tasks performed");
    }
    c.recomputed.sa_pct = selection_accuracy(row.tp, row.fn);
    if (!row.sa.matches(c.recomputed.sa_pct)) {
        c.issues.push_back("SA printed " + fmt(row.sa.value) + ", counts give " +
                           fmt(c.recomputed.sa_pct));
    }
    c.recomputed.far_pct = false_alarm_rate(row.tp, row.fp);
    if (!row.far.matches(c.recomputed.far_pct)) {
        c.issues.push_back("FAR printed " + fmt(row.far.value) + ", counts give " +
                           fmt(c.recomputed.far_pct));
    }
    c.recomputed.sr_pct = success_rate(c.recomputed.sa_pct, c.recomputed.far_pct);
    const double sr_from_printed = success_rate(row.sa.value, row.far.value);
    if (!row.sr.matches(c.recomputed.sr_pct) && !row.sr.matches(sr_from_printed)) {
        c.issues.push_back("SR printed " + fmt(row.sr.value) + ", counts give " +
                           fmt(c.recomputed.sr_pct) + " (" + fmt(sr_from_printed) +
                           " from printed SA/FAR)");
    }
    return c;
}

std::vector<PublishedUserRow> read_user_rows(std::istream& in) {
    std::vector<PublishedUserRow> out;
    for (const auto& [line, c] : read_csv(in, "user,tasks,tp,fp,fn,sa,far,sr")) {
        PublishedUserRow r;
        r.user = parse_int<int>(c[0], line);
        r.tasks = parse_int<int>(c[1], line);
        r.tp = parse_int<std::int64_t>(c[2], line);
        r.fp = parse_int<std::int64_t>(c[3], line);
        r.fn = parse_int<std::int64_t>(c[4], line);
        if (r.tp < 0 || r.fp < 0 || r.fn < 0) throw MalformedTable("negative count", line);
        try {
            r.sa = PrintedValue::parse(c[5]);
            r.far = PrintedValue::parse(c[6]);
            r.sr = PrintedValue::parse(c[7]);
        } catch (const std::invalid_argument& e) {
            throw MalformedTable(e.what(), line);
        }
        out.push_back(r);
    }
    return out;
}

std::vector<PublishedUserRow> read_user_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_user_rows(in);
}

std::vector<PublishedIntervalRow> read_interval_rows(std::istream& in) {
    std::vector<PublishedIntervalRow> out;
    for (const auto& [line, c] : read_csv(in, "interval_ms,avg_time_s,sa,far,sr")) {
        PublishedIntervalRow r;
        r.interval_ms = parse_int<std::int64_t>(c[0], line);
        try {
            r.avg_time_s = PrintedValue::parse(c[1]);
            r.sa = PrintedValue::parse(c[2]);
            r.far = PrintedValue::parse(c[3]);
            r.sr = PrintedValue::parse(c[4]);
        } catch (const std::invalid_argument& e) {
            throw MalformedTable(e.what(), line);
        }
        out.push_back(r);
    }
    return out;
}

std::vector<PublishedIntervalRow> read_interval_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_interval_rows(in);
}

std::vector<TaskLogRow> read_task_log(std::istream& in) {
    std::vector<TaskLogRow> out;
    for (const auto& [line, c] : read_csv(in, "task,completed,time_s,wrong_selection")) {
        TaskLogRow r;
        r.task = parse_int<int>(c[0], line);
        r.completed = parse_yes_no(c[1], line);
        try {
            r.time_s = PrintedValue::parse(c[2]).value;
        } catch (const std::invalid_argument& e) {
            throw MalformedTable(e.what(), line);
        }
        r.wrong_selection = parse_yes_no(c[3], line);
        out.push_back(r);
    }
    return out;
}

std::vector<TaskLogRow> read_task_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_task_log(in);
}

void write_task_log(std::ostream& out, const std::vector<TaskLogRow>& rows) {
    out << "task,completed,time_s,wrong_selection\n";
    for (const auto& r : rows) {
        char time[32];
        std::snprintf(time, sizeof time, "%.3f", r.time_s);
        out << r.task << ',' << (r.completed ? "Yes" : "No") << ',' << time << ','
            << (r.wrong_selection ? "Yes" : "No") << '\n';
    }
}

std::vector<UserRecord> printed_records(const std::vector<PublishedUserRow>& rows) {
    std::vector<UserRecord> out;
    for (const auto& r : rows) {
        UserRecord u;
        u.outcome = {r.tp, r.fp, r.fn, std::nullopt};
        u.summary = {r.sa.value, r.far.value, r.sr.value, std::nullopt};
        out.push_back(u);
    }
    return out;
}

std::vector<UserRecord> recomputed_records(const std::vector<PublishedUserRow>& rows) {
    std::vector<UserRecord> out;
    for (const auto& r : rows) {
        UserRecord u;
        u.outcome = {r.tp, r.fp, r.fn, std::nullopt};
        u.summary = summarize(u.outcome);
        out.push_back(u);
    }
    return out;
}

std::optional<double> mean_task_time(const std::vector<TaskLogRow>& rows) {
    if (rows.empty()) return std::nullopt;
    double sum = 0;
    for (const auto& r : rows) sum += r.time_s;
    return sum / static_cast<double>(rows.size());
}

}  // namespace blinkscan::scanmetrics
