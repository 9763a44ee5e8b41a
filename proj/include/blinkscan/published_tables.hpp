#pragma once

// Replay of published per-user count tables: recompute each row from its
// counts and report where the printed percentages disagree.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blinkscan/scanmetrics.hpp"

namespace blinkscan::scanmetrics {

/// A printed number together with the number of decimals it was printed with.
struct PrintedValue {
    double value = 0;
    int decimals = 0;

    static PrintedValue parse(const std::string& text);
    /// True when `exact` rounds to this printed value.
    bool matches(double exact) const;
};

struct PublishedUserRow {
    int user = 0;
    int tasks = 0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    PrintedValue sa;
    PrintedValue far;
    PrintedValue sr;
};

struct RowCheck {
    int user = 0;
    MetricsSummary recomputed;
    std::vector<std::string> issues;

    bool discrepant() const { return !issues.empty(); }
};

/// A row is consistent when tp + fn equals the task count and SA, FAR and SR
/// round to their printed values. SR is accepted if it matches either the
/// full-precision recomputation or SR recomputed from the printed SA and FAR.
RowCheck check_row(const PublishedUserRow& row);

struct TaskLogRow {
    int task = 0;
    bool completed = false;
    double time_s = 0;
    bool wrong_selection = false;
};

class MalformedTable : public std::runtime_error {
public:
    MalformedTable(const std::string& what, int line);
    int line() const { return line_; }

private:
    int line_;
};

/// CSV with header `user,tasks,tp,fp,fn,sa,far,sr`.
std::vector<PublishedUserRow> read_user_rows(std::istream& in);
std::vector<PublishedUserRow> read_user_rows(const std::filesystem::path& path);

/// One row of the per-interval summary table.
struct PublishedIntervalRow {
    std::int64_t interval_ms = 0;
    PrintedValue avg_time_s;
    PrintedValue sa;
    PrintedValue far;
    PrintedValue sr;
};

/// CSV with header `interval_ms,avg_time_s,sa,far,sr`.
std::vector<PublishedIntervalRow> read_interval_rows(std::istream& in);
std::vector<PublishedIntervalRow> read_interval_rows(const std::filesystem::path& path);

/// CSV with header `task,completed,time_s,wrong_selection`; booleans Yes/No.
std::vector<TaskLogRow> read_task_log(std::istream& in);
std::vector<TaskLogRow> read_task_log(const std::filesystem::path& path);
void write_task_log(std::ostream& out, const std::vector<TaskLogRow>& rows);

/// Users carrying their printed SA/FAR/SR, ready for aggregate().
std::vector<UserRecord> printed_records(const std::vector<PublishedUserRow>& rows);

/// Users carrying SA/FAR/SR recomputed from counts.
std::vector<UserRecord> recomputed_records(const std::vector<PublishedUserRow>& rows);

/// Mean time per task.
std::optional<double> mean_task_time(const std::vector<TaskLogRow>& rows);

}  // namespace blinkscan::scanmetrics
