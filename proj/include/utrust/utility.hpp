#pragma once

/**
 * utrust: cost-sensitive utilities and threshold sweeps.
 *
 * Empirical utility of a threshold rule is the sample mean of
 *   a11*TP - a01*FP - a10*FN + a00*TN
 * with constant or per-sample coefficients. The maximum over thresholds
 * (U_max) is found exactly: the candidate set holds every distinct score
 * plus one sentinel above the maximum, which realizes every decision vector
 * reachable by a ">=" threshold rule.
 *
 * Constant coefficients are evaluated from integer confusion counts, so a
 * sweep and a direct evaluation of the same rule give bit-identical values,
 * and two score vectors with the same ordering give bit-identical curves.
 */

#include "core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace utrust {

struct UtilityPoint {
    double threshold = 0.0;
    double utility = 0.0;
};

struct UtilityCurve {
    std::vector<UtilityPoint> points;  ///< ascending threshold
    double argmax_threshold = 0.0;     ///< smallest threshold attaining u_max
    double u_max = 0.0;
};

namespace detail {

inline double constant_utility(const CostWeights& w, const ConfusionCounts& c) noexcept {
    const double total = w.a11 * static_cast<double>(c.tp) - w.a01 * static_cast<double>(c.fp) -
                         w.a10 * static_cast<double>(c.fn) + w.a00 * static_cast<double>(c.tn);
    return total / static_cast<double>(c.total());
}

inline double accept_gain(const CostWeights& w, int label) noexcept { return label == 1 ? w.a11 : -w.a01; }
inline double reject_gain(const CostWeights& w, int label) noexcept { return label == 1 ? -w.a10 : w.a00; }

inline void check_coefficient_length(const LabeledScores& data, const CostCoefficients& coeffs) {
    if (coeffs.contextual() && coeffs.size() != data.size())
        throw ValidationError("coefficient-length mismatch");
}

}  // namespace detail

inline double empirical_utility(const LabeledScores& data, const CostCoefficients& coeffs, DecisionRule rule) {
    validate(data);
    detail::check_coefficient_length(data, coeffs);
    if (!coeffs.contextual()) return detail::constant_utility(coeffs.weights(), detail::count_confusion(data, rule));
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& w = coeffs.at(i);
        sum += rule.decide(data.scores[i]) == 1 ? detail::accept_gain(w, data.labels[i])
                                                : detail::reject_gain(w, data.labels[i]);
    }
    return sum / static_cast<double>(data.size());
}

/// Precomputed sorted view answering utility(threshold) in O(log n).
class ThresholdSweep {
public:
    ThresholdSweep(const LabeledScores& data, const CostCoefficients& coeffs) : coeffs_(coeffs) {
        validate(data);
        detail::check_coefficient_length(data, coeffs);
        n_ = data.size();
        const auto& s = data.scores;
        std::vector<std::size_t> order(n_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
        sorted_.reserve(n_);
        for (auto i : order) sorted_.push_back(s[i]);

        if (!coeffs.contextual()) {
            for (auto i : order) (data.labels[i] == 1 ? pos_ : neg_).push_back(s[i]);
            return;
        }
        // reject_prefix_[m]: rows [0, m) rejected; accept_suffix_[m]: rows [m, n) accepted
        reject_prefix_.assign(n_ + 1, 0.0);
        accept_suffix_.assign(n_ + 1, 0.0);
        for (std::size_t k = 0; k < n_; ++k) {
            const auto i = order[k];
            reject_prefix_[k + 1] = reject_prefix_[k] + detail::reject_gain(coeffs.at(i), data.labels[i]);
        }
        for (std::size_t k = n_; k-- > 0;) {
            const auto i = order[k];
            accept_suffix_[k] = accept_suffix_[k + 1] + detail::accept_gain(coeffs.at(i), data.labels[i]);
        }
    }

    double utility(double threshold) const {
        if (!coeffs_.contextual()) {
            ConfusionCounts c;
            c.tp = count_at_least(pos_, threshold);
            c.fn = pos_.size() - c.tp;
            c.fp = count_at_least(neg_, threshold);
            c.tn = neg_.size() - c.fp;
            return detail::constant_utility(coeffs_.weights(), c);
        }
        const auto m = static_cast<std::size_t>(
            std::lower_bound(sorted_.begin(), sorted_.end(), threshold) - sorted_.begin());
        return (reject_prefix_[m] + accept_suffix_[m]) / static_cast<double>(n_);
    }

    /// Distinct scores ascending, then a sentinel just above the maximum.
    std::vector<double> candidate_thresholds() const {
        std::vector<double> t = sorted_;
        t.erase(std::unique(t.begin(), t.end()), t.end());
        t.push_back(std::nextafter(sorted_.back(), std::numeric_limits<double>::infinity()));
        return t;
    }

    UtilityCurve curve() const {
        UtilityCurve out;
        const auto cands = candidate_thresholds();
        out.points.reserve(cands.size());
        out.u_max = -std::numeric_limits<double>::infinity();
        for (double t : cands) {
            const double u = utility(t);
            out.points.push_back({t, u});
            if (u > out.u_max) {
                out.u_max = u;
                out.argmax_threshold = t;
            }
        }
        return out;
    }

    std::vector<double> on_grid(const std::vector<double>& grid) const {
        std::vector<double> out;
        out.reserve(grid.size());
        for (double t : grid) out.push_back(utility(t));
        return out;
    }

private:
    static std::size_t count_at_least(const std::vector<double>& sorted, double t) {
        return static_cast<std::size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
    }

    CostCoefficients coeffs_;
    std::size_t n_ = 0;
    std::vector<double> sorted_;
    std::vector<double> pos_, neg_;
    std::vector<double> reject_prefix_, accept_suffix_;
};

inline UtilityCurve utility_curve(const LabeledScores& data, const CostCoefficients& coeffs) {
    return ThresholdSweep(data, coeffs).curve();
}

inline double max_utility(const LabeledScores& data, const CostCoefficients& coeffs) {
    return utility_curve(data, coeffs).u_max;
}

/// n+1 evenly spaced thresholds over [0, 1].
inline std::vector<double> threshold_grid(std::size_t intervals = 200) {
    std::vector<double> g(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) g[i] = static_cast<double>(i) / static_cast<double>(intervals);
    return g;
}

/// Closed-form optimal cutoff on Bayes probabilities,
/// (a01 + a00) / (a11 + a00 + a10 + a01).
inline double bayes_threshold(const CostCoefficients& coeffs) {
    if (coeffs.contextual()) throw ValidationError("analytic threshold requires constant coefficients");
    const auto& w = coeffs.weights();
    return (w.a01 + w.a00) / (w.a11 + w.a00 + w.a10 + w.a01);
}

/// U[c] = TP + TN - c*FP - 0.5c*FN.
inline CostCoefficients uc_family(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("U[c] requires c >= 0");
    return CostCoefficients::constant(1.0, c, 0.5 * c, 1.0);
}

/// Age-dependent costs: rewards TP = TN = 1, C(FP) = 3(1 - age/100),
/// C(FN) = 0.5(1 - age/100). Reads context column "age".
inline CostCoefficients age_contextual_coeffs(const LabeledScores& data) {
    const auto it = data.context.find("age");
    if (it == data.context.end()) throw ValidationError("missing age column");
    std::vector<CostWeights> rows;
    rows.reserve(it->second.size());
    for (double age : it->second) {
        if (!(age >= 0.0 && age <= 100.0)) throw ValidationError("age outside [0,100]");
        const double scale = 1.0 - age / 100.0;
        rows.push_back({1.0, scale * 3.0, scale * 0.5, 1.0});
    }
    return CostCoefficients::per_sample(std::move(rows));
}

// ============================================================================
// Utility specification (CLI-facing)
// ============================================================================

/// Which utility to evaluate. Contextual kinds are resolved against the
/// data they are applied to.
struct UtilitySpec {
    enum class Kind { ZeroOne, Uc, Constant, AgeContextual, Columns };
    Kind kind = Kind::ZeroOne;
    double c = 0.0;
    CostWeights weights{1.0, 0.0, 0.0, 1.0};

    static UtilitySpec zero_one() { return {}; }
    static UtilitySpec uc(double c) {
        uc_family(c);
        UtilitySpec s;
        s.kind = Kind::Uc;
        s.c = c;
        return s;
    }
    static UtilitySpec constant(CostWeights w) {
        CostCoefficients::constant(w);
        UtilitySpec s;
        s.kind = Kind::Constant;
        s.weights = w;
        return s;
    }
    static UtilitySpec age_contextual() {
        UtilitySpec s;
        s.kind = Kind::AgeContextual;
        return s;
    }
    static UtilitySpec columns() {
        UtilitySpec s;
        s.kind = Kind::Columns;
        return s;
    }

    /// Accepts "zero-one", "c:<value>", "age-contextual", "columns".
    static UtilitySpec parse(std::string_view text) {
        if (text == "zero-one") return zero_one();
        if (text == "age-contextual") return age_contextual();
        if (text == "columns") return columns();
        if (text.starts_with("c:")) {
            const auto body = text.substr(2);
            double c = 0.0;
            const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), c);
            if (ec != std::errc{} || ptr != body.data() + body.size() || body.empty())
                throw ValidationError("bad utility spec '" + std::string(text) + "'");
            return uc(c);
        }
        throw ValidationError("unknown utility spec '" + std::string(text) +
                              "' (expected zero-one | c:<value> | age-contextual | columns)");
    }

    std::string name() const {
        switch (kind) {
            case Kind::ZeroOne: return "zero-one";
            case Kind::Uc: return "c:" + std::to_string(c);
            case Kind::Constant: return "constant";
            case Kind::AgeContextual: return "age-contextual";
            case Kind::Columns: return "columns";
        }
        return "unknown";
    }

    bool contextual() const noexcept { return kind == Kind::AgeContextual || kind == Kind::Columns; }

    CostCoefficients resolve(const LabeledScores& data) const {
        switch (kind) {
            case Kind::ZeroOne: return CostCoefficients::zero_one();
            case Kind::Uc: return uc_family(c);
            case Kind::Constant: return CostCoefficients::constant(weights);
            case Kind::AgeContextual: return age_contextual_coeffs(data);
            case Kind::Columns:
                if (!data.coefficients) throw ValidationError("missing coefficient columns a11,a01,a10,a00");
                return *data.coefficients;
        }
        throw ValidationError("unknown utility kind");
    }
};

}  // namespace utrust
