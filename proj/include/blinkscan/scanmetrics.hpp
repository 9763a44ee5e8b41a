#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace blinkscan::scanmetrics {

class EmptyDenominator : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class EmptyInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Selection bookkeeping for one user (or one batch of trials).
struct TrialOutcome {
    std::int64_t tp = 0;  // correct selections
    std::int64_t fp = 0;  // incorrect selections
    std::int64_t fn = 0;  // missed objects
    std::optional<double> selection_time_s;

    TrialOutcome& operator+=(const TrialOutcome& o);
    friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

struct MetricsSummary {
    double sa_pct = 0;
    double far_pct = 0;
    double sr_pct = 0;
    std::optional<double> avg_selection_time_s;

    friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

/// 100 * tp / (tp + fn)
double selection_accuracy(std::int64_t tp, std::int64_t fn);

/// 100 * fp / (tp + fp)
double false_alarm_rate(std::int64_t tp, std::int64_t fp);

/// 100 * sa / (sa + far)
double success_rate(double sa_pct, double far_pct);

/// SA, FAR and SR of one outcome. Throws EmptyDenominator for an outcome
/// with no attempted selections.
MetricsSummary summarize(const TrialOutcome& o);

struct UserRecord {
    TrialOutcome outcome;
    MetricsSummary summary;
};

/// Arithmetic mean over users of SA, FAR, SR and selection time. Users
/// without a selection time are left out of the time mean.
MetricsSummary aggregate(std::span<const UserRecord> users);

/// Printed form at table precision: SA as a truncated integer, FAR and SR to
/// one decimal, time to one decimal.
struct DisplayedSummary {
    std::string sa;
    std::string far;
    std::string sr;
    std::string avg_time;
};

DisplayedSummary display(const MetricsSummary& m);

/// Rounds half away from zero to `decimals` places.
double round_to(double v, int decimals);

}  // namespace blinkscan::scanmetrics
