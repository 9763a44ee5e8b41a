#include "blinkscan/scanmetrics.hpp"

#include <cmath>
#include <cstdio>

namespace blinkscan::scanmetrics {

TrialOutcome& TrialOutcome::operator+=(const TrialOutcome& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    if (o.selection_time_s) selection_time_s = selection_time_s.value_or(0.0) + *o.selection_time_s;
    return *this;
}

double selection_accuracy(std::int64_t tp, std::int64_t fn) {
    if (tp < 0 || fn < 0) throw std::invalid_argument("negative count");
    if (tp + fn == 0) throw EmptyDenominator("selection accuracy: tp + fn = 0");
    return 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double false_alarm_rate(std::int64_t tp, std::int64_t fp) {
    if (tp < 0 || fp < 0) throw std::invalid_argument("negative count");
    if (tp + fp == 0) throw EmptyDenominator("false alarm rate: tp + fp = 0");
    return 100.0 * static_cast<double>(fp) / static_cast<double>(tp + fp);
}

double success_rate(double sa_pct, double far_pct) {
    if (sa_pct < 0 || far_pct < 0) throw std::invalid_argument("negative percentage");
    if (sa_pct + far_pct <= 0) throw EmptyDenominator("success rate: sa + far = 0");
    return 100.0 * sa_pct / (sa_pct + far_pct);
}

MetricsSummary summarize(const TrialOutcome& o) {
    MetricsSummary m;
    m.sa_pct = selection_accuracy(o.tp, o.fn);
    m.far_pct = false_alarm_rate(o.tp, o.fp);
    m.sr_pct = success_rate(m.sa_pct, m.far_pct);
    m.avg_selection_time_s = o.selection_time_s;
    return m;
}

MetricsSummary aggregate(std::span<const UserRecord> users) {
    if (users.empty()) throw EmptyInput("aggregate: no users");
    MetricsSummary m;
    double time_sum = 0;
    int timed = 0;
    for (const auto& u : users) {
        m.sa_pct += u.summary.sa_pct;
        m.far_pct += u.summary.far_pct;
        m.sr_pct += u.summary.sr_pct;
        if (u.outcome.selection_time_s) {
            time_sum += *u.outcome.selection_time_s;
            ++timed;
        }
    }
    const auto n = static_cast<double>(users.size());
    m.sa_pct /= n;
    m.far_pct /= n;
    m.sr_pct /= n;
    if (timed > 0) m.avg_selection_time_s = time_sum / timed;
    return m;
}

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, round_to(v, decimals));
    return buf;
}

}  // namespace

DisplayedSummary display(const MetricsSummary& m) {
    DisplayedSummary d;
    // Tiny epsilon keeps 87.0 - 1e-13 from printing as 86.
    d.sa = std::to_string(static_cast<long long>(std::floor(m.sa_pct + 1e-9)));
    d.far = fixed(m.far_pct, 1);
    d.sr = fixed(m.sr_pct, 1);
    d.avg_time = m.avg_selection_time_s ? fixed(*m.avg_selection_time_s, 1) : "-";
    return d;
}

}  // namespace blinkscan::scanmetrics
