#pragma once

/**
 * utrust: threshold-free and calibration metrics.
 *
 * - AUC as the Wilcoxon-Mann-Whitney statistic, two estimators:
 *   auc_pairwise enumerates every positive/negative pair (ties count 1/2),
 *   auc_rank uses the mid-rank sum. Both reduce to the same integer
 *   numerator over 2*n_pos*n_neg, so they agree to the last bit.
 * - ROC points, Brier score, accuracy at a threshold.
 * - Equal-width reliability curve and expected calibration error.
 * - NetTrust (question-answer trust with unit exponents, threshold 0.5).
 */

#include "core.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace utrust {

namespace detail {

inline void require_both_classes(const LabeledScores& data) {
    if (!data.has_both_classes()) throw DegenerateError("AUC undefined: both classes required");
}

/// Indices sorted by score ascending, ties by index.
inline std::vector<std::size_t> order_by_score(const std::vector<double>& s) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    return idx;
}

}  // namespace detail

inline double auc_pairwise(const LabeledScores& data) {
    validate(data);
    detail::require_both_classes(data);
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < data.size(); ++i)
        (data.labels[i] == 1 ? pos : neg).push_back(data.scores[i]);
    // 2 per win, 1 per tie
    std::uint64_t twice_wins = 0;
    for (double p : pos)
        for (double q : neg) twice_wins += p > q ? 2 : (p == q ? 1 : 0);
    const double denom = 2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size());
    return static_cast<double>(twice_wins) / denom;
}

inline double auc_rank(const LabeledScores& data) {
    validate(data);
    detail::require_both_classes(data);
    const auto& s = data.scores;
    const auto order = detail::order_by_score(s);
    const std::size_t n = s.size();
    // Twice the mid-rank sum of positives; ranks are 1-based.
    std::uint64_t twice_rank_sum = 0;
    std::size_t lo = 0;
    while (lo < n) {
        std::size_t hi = lo + 1;
        while (hi < n && s[order[hi]] == s[order[lo]]) ++hi;
        const std::uint64_t twice_mid = lo + 1 + hi;
        for (std::size_t k = lo; k < hi; ++k)
            if (data.labels[order[k]] == 1) twice_rank_sum += twice_mid;
        lo = hi;
    }
    const std::uint64_t n_pos = data.positives();
    const std::uint64_t n_neg = n - n_pos;
    const std::uint64_t numer = twice_rank_sum - n_pos * (n_pos + 1);
    const double denom = 2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg);
    return static_cast<double>(numer) / denom;
}

inline double auc(const LabeledScores& data) { return auc_rank(data); }

/// (fpr, tpr) from (0,0) through one point per distinct score, descending
/// threshold, ending at (1,1).
inline Curve roc_points(const LabeledScores& data) {
    validate(data);
    detail::require_both_classes(data);
    const auto& s = data.scores;
    auto order = detail::order_by_score(s);
    std::reverse(order.begin(), order.end());
    const double n_pos = static_cast<double>(data.positives());
    const double n_neg = static_cast<double>(data.size()) - n_pos;
    Curve pts{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0, k = 0;
    while (k < order.size()) {
        const double t = s[order[k]];
        while (k < order.size() && s[order[k]] == t) {
            (data.labels[order[k]] == 1 ? tp : fp)++;
            ++k;
        }
        pts.emplace_back(static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos);
    }
    return pts;
}

inline double trapezoid_area(const Curve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second) / 2.0;
    return area;
}

inline double brier(const LabeledScores& data) {
    validate(data);
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double d = data.scores[i] - data.labels[i];
        sum += d * d;
    }
    return sum / static_cast<double>(data.size());
}

inline double accuracy(const LabeledScores& data, DecisionRule rule) {
    const auto c = confusion_at(data, rule);
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

// ============================================================================
// Calibration
// ============================================================================

struct CalibrationBin {
    double mean_predicted = 0.0;
    double observed_frequency = 0.0;
    std::size_t count = 0;
    std::size_t index = 0;  ///< position among the equal-width bins
};

struct CalibrationCurve {
    std::vector<CalibrationBin> bins;  ///< non-empty bins only, ascending
    std::size_t bin_count = 10;

    std::size_t total() const noexcept {
        std::size_t n = 0;
        for (const auto& b : bins) n += b.count;
        return n;
    }
};

inline constexpr std::size_t kDefaultCalibrationBins = 10;

/// Equal-width bin of a score; 1.0 lands in the last bin.
inline std::size_t calibration_bin_of(double score, std::size_t bins) noexcept {
    const auto b = static_cast<std::size_t>(score * static_cast<double>(bins));
    return std::min(b, bins - 1);
}

inline CalibrationCurve calibration_curve(const LabeledScores& data,
                                          std::size_t bins = kDefaultCalibrationBins) {
    validate(data);
    if (bins < 2) throw ValidationError("calibration curve needs at least 2 bins");
    std::vector<double> score_sum(bins, 0.0), label_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto b = calibration_bin_of(data.scores[i], bins);
        score_sum[b] += data.scores[i];
        label_sum[b] += data.labels[i];
        ++count[b];
    }
    CalibrationCurve curve;
    curve.bin_count = bins;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double c = static_cast<double>(count[b]);
        curve.bins.push_back({score_sum[b] / c, label_sum[b] / c, count[b], b});
    }
    return curve;
}

inline double ece(const CalibrationCurve& curve) {
    if (curve.bins.empty()) throw ValidationError("empty calibration curve");
    const double n = static_cast<double>(curve.total());
    double sum = 0.0;
    for (const auto& b : curve.bins)
        sum += static_cast<double>(b.count) / n * std::abs(b.observed_frequency - b.mean_predicted);
    return sum;
}

inline double ece(const LabeledScores& data, std::size_t bins = kDefaultCalibrationBins) {
    return ece(calibration_curve(data, bins));
}

// ============================================================================
// NetTrust
// ============================================================================

/// Mean question-answer trust. Prediction is 1 iff score >= 0.5; confidence
/// is the score of the predicted class; trust is the confidence when the
/// prediction is right and 1 - confidence when it is wrong.
inline double net_trust(const LabeledScores& data) {
    validate(data);
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double s = data.scores[i];
        const int pred = s >= 0.5 ? 1 : 0;
        const double conf = pred == 1 ? s : 1.0 - s;
        sum += pred == data.labels[i] ? conf : 1.0 - conf;
    }
    return sum / static_cast<double>(data.size());
}

}  // namespace utrust
