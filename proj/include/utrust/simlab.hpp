#pragma once

/**
 * utrust: synthetic calibration-vs-utility study.
 *
 * Each realization draws X1, X2, X3 ~ N(0,1) i.i.d. per sample and scores
 * them with three classifiers:
 *   bayes            p  = sigmoid(0.5 X1 - X2 + 0.5 X3)
 *   properly ranked  p1 = sigmoid(0.5 X1 - X2 + 0.5 X3 + 1.0)
 *   calibrated       p2 = sigmoid(0.5 X1 - X2)
 * Labels are Bernoulli(p). Realization i uses the stream derive_seed(seed, i),
 * so results do not depend on thread count or evaluation order.
 */

#include "core.hpp"
#include "detail/parallel.hpp"
#include "metrics.hpp"
#include "ranking.hpp"
#include "rng.hpp"
#include "utility.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace utrust {

struct SimStudyConfig {
    std::size_t n_samples = 15000;
    std::size_t n_realizations = 400;
    std::uint64_t master_seed = 7;
    CostCoefficients utility = CostCoefficients::zero_one();
    std::size_t calibration_bins = kDefaultCalibrationBins;
    unsigned threads = 1;

    void check() const {
        if (n_samples < 10) throw ValidationError("n_samples must be >= 10");
        if (n_realizations < 1) throw ValidationError("n_realizations must be >= 1");
        if (utility.contextual()) throw ValidationError("study utility must have constant coefficients");
        if (calibration_bins < 2) throw ValidationError("calibration needs at least 2 bins");
    }
};

inline constexpr const char* kNormalMethod = "box-muller/mt19937_64";

enum class SimClassifier : std::size_t { Bayes = 0, ProperlyRanked = 1, Calibrated = 2 };
inline constexpr std::array<const char*, 3> kSimClassifierNames{"bayes", "properly_ranked", "calibrated"};

struct Realization {
    std::vector<double> x1, x2, x3;
    std::vector<double> bayes_scores;  ///< p
    std::vector<double> pr_scores;     ///< p1
    std::vector<double> cal_scores;    ///< p2
    std::vector<int> labels;

    const std::vector<double>& scores(SimClassifier c) const {
        switch (c) {
            case SimClassifier::Bayes: return bayes_scores;
            case SimClassifier::ProperlyRanked: return pr_scores;
            case SimClassifier::Calibrated: return cal_scores;
        }
        return bayes_scores;
    }

    LabeledScores labeled(SimClassifier c) const { return make_scores(scores(c), labels); }
};

inline Realization generate_realization(const SimStudyConfig& config, std::uint64_t index) {
    config.check();
    Rng rng(config.master_seed, index);
    const auto n = config.n_samples;
    Realization r;
    for (auto* v : {&r.x1, &r.x2, &r.x3, &r.bayes_scores, &r.pr_scores, &r.cal_scores}) v->resize(n);
    r.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = rng.normal();
        const double x2 = rng.normal();
        const double x3 = rng.normal();
        const double partial = 0.5 * x1 - x2;
        const double z = partial + 0.5 * x3;
        r.x1[i] = x1;
        r.x2[i] = x2;
        r.x3[i] = x3;
        r.bayes_scores[i] = sigmoid(z);
        r.pr_scores[i] = sigmoid(z + 1.0);
        r.cal_scores[i] = sigmoid(partial);
        r.labels[i] = rng.uniform() < r.bayes_scores[i] ? 1 : 0;
    }
    return r;
}

// ============================================================================
// Study aggregation
// ============================================================================

struct PercentileBand {
    double low = 0.0;   ///< 16th percentile
    double mid = 0.0;   ///< median
    double high = 0.0;  ///< 84th percentile
};

inline PercentileBand percentile_band(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return {detail::sorted_quantile(values, 0.16), detail::sorted_quantile(values, 0.50),
            detail::sorted_quantile(values, 0.84)};
}

struct CalibrationBandPoint {
    std::size_t bin = 0;
    double mean_predicted = 0.0;      ///< averaged over realizations where the bin is non-empty
    PercentileBand observed;          ///< observed frequency across realizations
    std::size_t realizations = 0;     ///< realizations with a non-empty bin
};

struct ClassifierStudy {
    std::string name;
    /// Per-realization values, indexed by realization.
    std::map<std::string, std::vector<double>> values;
    std::map<std::string, PercentileBand> bands;
    std::vector<CalibrationBandPoint> calibration;
};

struct StudySummary {
    SimStudyConfig config;
    std::array<ClassifierStudy, 3> classifiers;
    /// Per realization: properly-ranked check of p1 and of p2 against p.
    std::vector<bool> pr_properly_ranked;
    std::vector<bool> cal_properly_ranked;

    const ClassifierStudy& operator[](SimClassifier c) const { return classifiers[static_cast<std::size_t>(c)]; }
};

namespace detail {

struct RealizationMetrics {
    std::array<std::map<std::string, double>, 3> metrics;
    std::array<CalibrationCurve, 3> calibration;
    bool pr_ok = false;
    bool cal_ok = false;
};

inline RealizationMetrics evaluate_realization(const SimStudyConfig& config, std::uint64_t index) {
    const auto r = generate_realization(config, index);
    RealizationMetrics out;
    const auto zero_one = CostCoefficients::zero_one();
    for (std::size_t c = 0; c < 3; ++c) {
        const auto data = r.labeled(static_cast<SimClassifier>(c));
        auto& m = out.metrics[c];
        m["u_max"] = max_utility(data, config.utility);
        m["u_max_zero_one"] = max_utility(data, zero_one);
        m["accuracy"] = m["u_max_zero_one"];
        m["accuracy_at_half"] = accuracy(data, DecisionRule{0.5});
        m["brier"] = brier(data);
        out.calibration[c] = calibration_curve(data, config.calibration_bins);
        m["ece"] = ece(out.calibration[c]);
        m["net_trust"] = net_trust(data);
        m["auc"] = auc_rank(data);
    }
    out.pr_ok = check_properly_ranked(r.pr_scores, r.bayes_scores);
    out.cal_ok = check_properly_ranked(r.cal_scores, r.bayes_scores);
    return out;
}

}  // namespace detail

inline StudySummary run_study(const SimStudyConfig& config) {
    config.check();
    const auto count = config.n_realizations;
    std::vector<detail::RealizationMetrics> per(count);
    detail::parallel_for(count, config.threads, [&](std::size_t i) { per[i] = detail::evaluate_realization(config, i); });

    StudySummary s{config, {}, {}, {}};
    for (std::size_t c = 0; c < 3; ++c) {
        auto& cls = s.classifiers[c];
        cls.name = kSimClassifierNames[c];
        for (const auto& rm : per)
            for (const auto& [key, v] : rm.metrics[c]) cls.values[key].push_back(v);
        for (const auto& [key, vals] : cls.values) cls.bands[key] = percentile_band(vals);

        const auto bins = config.calibration_bins;
        std::vector<std::vector<double>> observed(bins);
        std::vector<double> predicted_sum(bins, 0.0);
        for (const auto& rm : per)
            for (const auto& b : rm.calibration[c].bins) {
                observed[b.index].push_back(b.observed_frequency);
                predicted_sum[b.index] += b.mean_predicted;
            }
        for (std::size_t b = 0; b < bins; ++b) {
            if (observed[b].empty()) continue;
            const auto k = observed[b].size();
            cls.calibration.push_back(
                {b, predicted_sum[b] / static_cast<double>(k), percentile_band(observed[b]), k});
        }
    }
    for (const auto& rm : per) {
        s.pr_properly_ranked.push_back(rm.pr_ok);
        s.cal_properly_ranked.push_back(rm.cal_ok);
    }
    return s;
}

// ============================================================================
// Utility-vs-threshold bands
// ============================================================================

struct ThresholdCurveBands {
    std::string name;
    std::vector<double> thresholds;
    std::vector<double> mean;
    std::vector<double> low;   ///< 16th percentile
    std::vector<double> high;  ///< 84th percentile

    /// Grid threshold with the highest mean utility (first on ties).
    double peak_threshold() const {
        return thresholds[static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin())];
    }
    double peak_value() const { return *std::max_element(mean.begin(), mean.end()); }
};

/// Utility on a 201-point threshold grid over [0,1], per realization, then
/// pointwise mean and 16/84 percentile bands per classifier.
inline std::array<ThresholdCurveBands, 3> utility_threshold_curves(const SimStudyConfig& config,
                                                                   std::size_t realization_count,
                                                                   const CostCoefficients& coeffs) {
    config.check();
    if (realization_count < 2) throw ValidationError("threshold curves need at least 2 realizations");
    const auto grid = threshold_grid(200);
    // curves[r][c][g]
    std::vector<std::array<std::vector<double>, 3>> curves(realization_count);
    detail::parallel_for(realization_count, config.threads, [&](std::size_t r) {
        const auto real = generate_realization(config, r);
        for (std::size_t c = 0; c < 3; ++c)
            curves[r][c] = ThresholdSweep(real.labeled(static_cast<SimClassifier>(c)), coeffs).on_grid(grid);
    });
    std::array<ThresholdCurveBands, 3> out;
    for (std::size_t c = 0; c < 3; ++c) {
        auto& b = out[c];
        b.name = kSimClassifierNames[c];
        b.thresholds = grid;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            std::vector<double> vals;
            vals.reserve(realization_count);
            for (const auto& rc : curves) vals.push_back(rc[c][g]);
            b.mean.push_back(detail::mean(vals));
            std::sort(vals.begin(), vals.end());
            b.low.push_back(detail::sorted_quantile(vals, 0.16));
            b.high.push_back(detail::sorted_quantile(vals, 0.84));
        }
    }
    return out;
}

inline std::array<ThresholdCurveBands, 3> utility_threshold_curves(const SimStudyConfig& config,
                                                                   std::size_t realization_count) {
    return utility_threshold_curves(config, realization_count, config.utility);
}

}  // namespace utrust
