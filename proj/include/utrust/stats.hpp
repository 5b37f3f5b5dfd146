#pragma once

/**
 * utrust: resampling uncertainty.
 *
 * Percentile bootstrap over rows. Replicate r draws its rows from the stream
 * derive_seed(seed, r), so results are identical for any thread count.
 * The paired test resamples rows jointly for two scorers of the same
 * labels and looks at the per-replicate difference in maximum utility.
 */

#include "core.hpp"
#include "detail/parallel.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "utility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace utrust {

/// Standard error of the mean: sample standard deviation / sqrt(count).
inline double sem(const std::vector<double>& values) {
    if (values.size() < 2) throw ValidationError("standard error needs at least 2 values");
    const double m = detail::mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    const double n = static_cast<double>(values.size());
    return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

struct MeanSem {
    double mean = 0.0;
    std::optional<double> sem;  ///< absent with fewer than 2 values
};

inline MeanSem mean_sem(const std::vector<double>& v) {
    MeanSem m;
    m.mean = detail::mean(v);
    if (v.size() >= 2) m.sem = sem(v);
    return m;
}

struct BootstrapConfig {
    static constexpr double kLevel68 = 0.68;
    static constexpr double kLevel95 = 0.95;
    static constexpr std::size_t kMinReplicates = 100;

    std::size_t replicates = 1000;
    double level = kLevel95;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void check() const {
        if (replicates < kMinReplicates) throw ValidationError("bootstrap needs at least 100 replicates");
        if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must be in (0,1)");
    }
};

enum class MetricKind { Auc, Brier, AccuracyAtHalf, UMax, Ece, NetTrust };

struct MetricSpec {
    MetricKind kind = MetricKind::Auc;
    std::optional<CostCoefficients> coefficients;  ///< UMax only
    std::size_t bins = kDefaultCalibrationBins;    ///< Ece only

    static MetricSpec auc() { return {MetricKind::Auc, std::nullopt}; }
    static MetricSpec brier() { return {MetricKind::Brier, std::nullopt}; }
    static MetricSpec accuracy() { return {MetricKind::AccuracyAtHalf, std::nullopt}; }
    static MetricSpec ece(std::size_t bins = kDefaultCalibrationBins) { return {MetricKind::Ece, std::nullopt, bins}; }
    static MetricSpec net_trust() { return {MetricKind::NetTrust, std::nullopt}; }
    static MetricSpec u_max(CostCoefficients c) { return {MetricKind::UMax, std::move(c)}; }

    std::string name() const {
        switch (kind) {
            case MetricKind::Auc: return "auc";
            case MetricKind::Brier: return "brier";
            case MetricKind::AccuracyAtHalf: return "accuracy";
            case MetricKind::UMax: return "u_max";
            case MetricKind::Ece: return "ece";
            case MetricKind::NetTrust: return "net_trust";
        }
        return "unknown";
    }

    bool needs_both_classes() const noexcept { return kind == MetricKind::Auc; }

    double evaluate(const LabeledScores& data) const {
        switch (kind) {
            case MetricKind::Auc: return auc_rank(data);
            case MetricKind::Brier: return utrust::brier(data);
            case MetricKind::AccuracyAtHalf: return utrust::accuracy(data, DecisionRule{0.5});
            case MetricKind::UMax:
                if (!coefficients) throw ValidationError("u_max metric needs coefficients");
                return max_utility(data, *coefficients);
            case MetricKind::Ece: return utrust::ece(data, bins);
            case MetricKind::NetTrust: return utrust::net_trust(data);
        }
        throw ValidationError("unknown metric");
    }

    /// Evaluates on the given rows; per-sample coefficients follow the rows.
    double evaluate(const LabeledScores& data, const std::vector<std::size_t>& rows) const {
        if (kind == MetricKind::UMax && coefficients && coefficients->contextual()) {
            MetricSpec sub = *this;
            sub.coefficients = coefficients->subset(rows);
            return sub.evaluate(data.subset(rows));
        }
        return evaluate(data.subset(rows));
    }
};

struct BootstrapResult {
    double estimate = 0.0;  ///< metric on the full sample
    double low = 0.0;
    double high = 0.0;
    double level = 0.0;
    std::size_t redraws = 0;     ///< degenerate resamples replaced
    std::vector<double> values;  ///< replicate values, sorted ascending

    /// Percentile interval at another level from the same replicates.
    Interval interval(double lvl) const {
        return {detail::sorted_quantile(values, (1.0 - lvl) / 2.0), detail::sorted_quantile(values, (1.0 + lvl) / 2.0),
                lvl};
    }
};

namespace detail {

inline constexpr std::size_t kMaxRedrawsPerReplicate = 1000;

inline std::vector<std::size_t> draw_rows(Rng& rng, std::size_t n) {
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    return rows;
}

inline bool both_classes(const std::vector<int>& labels, const std::vector<std::size_t>& rows) {
    bool pos = false, neg = false;
    for (auto r : rows) (labels[r] == 1 ? pos : neg) = true;
    return pos && neg;
}

/// Rows for replicate r; redraws until both classes appear when required.
inline std::vector<std::size_t> replicate_rows(std::uint64_t seed, std::size_t r, const std::vector<int>& labels,
                                               bool need_both, std::size_t& redraws) {
    Rng rng(seed, r);
    auto rows = draw_rows(rng, labels.size());
    if (!need_both) return rows;
    std::size_t attempts = 0;
    while (!both_classes(labels, rows)) {
        if (++attempts > kMaxRedrawsPerReplicate) throw DegenerateError("bootstrap resamples are single-class");
        rows = draw_rows(rng, labels.size());
    }
    redraws = attempts;
    return rows;
}

}  // namespace detail

inline BootstrapResult bootstrap_ci(const LabeledScores& data, const MetricSpec& metric,
                                    const BootstrapConfig& config) {
    config.check();
    validate(data);
    BootstrapResult res;
    res.level = config.level;
    res.estimate = metric.evaluate(data);
    std::vector<double> values(config.replicates);
    std::vector<std::size_t> redraws(config.replicates, 0);
    detail::parallel_for(config.replicates, config.threads, [&](std::size_t r) {
        const auto rows = detail::replicate_rows(config.seed, r, data.labels, metric.needs_both_classes(), redraws[r]);
        values[r] = metric.evaluate(data, rows);
    });
    for (auto k : redraws) res.redraws += k;
    std::sort(values.begin(), values.end());
    res.values = std::move(values);
    const auto iv = res.interval(config.level);
    res.low = iv.low;
    res.high = iv.high;
    return res;
}

struct PairedTestResult {
    double diff = 0.0;  ///< u_max(a) - u_max(b) on the full sample
    double low = 0.0;
    double high = 0.0;
    double level = 0.0;
    double p_value = 1.0;
    std::vector<double> replicate_diffs;  ///< in replicate order
};

/// Joint row bootstrap of u_max(a) - u_max(b). Two-sided p-value
/// 2*min(P(diff <= 0), P(diff >= 0)), clamped to [2/replicates, 1].
inline PairedTestResult paired_umax_test(const LabeledScores& a, const LabeledScores& b,
                                         const CostCoefficients& coeffs, const BootstrapConfig& config) {
    config.check();
    validate(a);
    validate(b);
    if (a.size() != b.size()) throw ValidationError("paired test needs equal sample sizes");
    if (a.labels != b.labels) throw ValidationError("label vectors differ");
    const auto metric = MetricSpec::u_max(coeffs);
    PairedTestResult res;
    res.level = config.level;
    res.diff = metric.evaluate(a) - metric.evaluate(b);
    res.replicate_diffs.assign(config.replicates, 0.0);
    detail::parallel_for(config.replicates, config.threads, [&](std::size_t r) {
        std::size_t unused = 0;
        const auto rows = detail::replicate_rows(config.seed, r, a.labels, false, unused);
        res.replicate_diffs[r] = metric.evaluate(a, rows) - metric.evaluate(b, rows);
    });
    std::vector<double> sorted = res.replicate_diffs;
    std::sort(sorted.begin(), sorted.end());
    res.low = detail::sorted_quantile(sorted, (1.0 - config.level) / 2.0);
    res.high = detail::sorted_quantile(sorted, (1.0 + config.level) / 2.0);
    std::size_t le = 0, ge = 0;
    for (double d : sorted) {
        le += d <= 0.0;
        ge += d >= 0.0;
    }
    const double reps = static_cast<double>(config.replicates);
    const double p = 2.0 * std::min(static_cast<double>(le), static_cast<double>(ge)) / reps;
    res.p_value = std::clamp(p, 2.0 / reps, 1.0);
    return res;
}

}  // namespace utrust
