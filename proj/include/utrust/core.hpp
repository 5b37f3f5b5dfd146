#pragma once

/**
 * utrust: shared data model.
 *
 * LabeledScores is the universal evaluation input: parallel columns of
 * classifier scores and binary labels, plus optional group membership,
 * reference (Bayes) scores, named context columns and per-sample cost
 * coefficients. Every other module consumes it.
 *
 * Decision convention used everywhere: predict 1 iff score >= threshold.
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace utrust {

/// Input violates a documented invariant (CLI exit code 2).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input is well formed but statistically degenerate, e.g. a single class
/// where AUC needs both (CLI exit code 3).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ============================================================================
// Cost coefficients
// ============================================================================

/// The four weights of a cost-sensitive utility
///   a11*TP - a01*FP - a10*FN + a00*TN
struct CostWeights {
    double a11 = 0.0;
    double a01 = 0.0;
    double a10 = 0.0;
    double a00 = 0.0;

    friend bool operator==(const CostWeights&, const CostWeights&) = default;
};

/// Cost coefficients, either one constant set or one set per sample
/// (contextual mode, e.g. costs that depend on age).
class CostCoefficients {
public:
    static CostCoefficients constant(double a11, double a01, double a10, double a00) {
        return constant(CostWeights{a11, a01, a10, a00});
    }

    static CostCoefficients constant(CostWeights w) {
        check_weights(w);
        if (!(w.a11 > 0 || w.a01 > 0 || w.a10 > 0 || w.a00 > 0))
            throw ValidationError("all-zero coefficients");
        CostCoefficients c;
        c.constant_ = w;
        return c;
    }

    static CostCoefficients per_sample(std::vector<CostWeights> rows) {
        if (rows.empty()) throw ValidationError("per-sample coefficients must not be empty");
        bool any_positive = false;
        for (const auto& w : rows) {
            check_weights(w);
            any_positive = any_positive || w.a11 > 0 || w.a01 > 0 || w.a10 > 0 || w.a00 > 0;
        }
        if (!any_positive) throw ValidationError("all-zero coefficients");
        CostCoefficients c;
        c.rows_ = std::move(rows);
        return c;
    }

    /// 0-1 utility: reward correct decisions, no explicit costs.
    static CostCoefficients zero_one() { return constant(1.0, 0.0, 0.0, 1.0); }

    bool contextual() const noexcept { return !constant_.has_value(); }

    /// Number of per-sample rows; 0 in constant mode.
    std::size_t size() const noexcept { return rows_.size(); }

    const CostWeights& at(std::size_t i) const { return constant_ ? *constant_ : rows_.at(i); }

    /// Throws in contextual mode.
    const CostWeights& weights() const {
        if (!constant_) throw ValidationError("constant coefficients required");
        return *constant_;
    }

    const std::vector<CostWeights>& rows() const noexcept { return rows_; }

    /// Same coefficients restricted/reordered to the given sample indices.
    CostCoefficients subset(const std::vector<std::size_t>& idx) const {
        if (constant_) return *this;
        std::vector<CostWeights> out;
        out.reserve(idx.size());
        for (auto i : idx) out.push_back(rows_.at(i));
        CostCoefficients c;
        c.rows_ = std::move(out);
        return c;
    }

    CostCoefficients scaled(double lambda) const {
        CostCoefficients c = *this;
        auto scale = [lambda](CostWeights& w) {
            w.a11 *= lambda; w.a01 *= lambda; w.a10 *= lambda; w.a00 *= lambda;
        };
        if (c.constant_) scale(*c.constant_);
        for (auto& w : c.rows_) scale(w);
        return c;
    }

private:
    CostCoefficients() = default;

    static void check_weights(const CostWeights& w) {
        for (double v : {w.a11, w.a01, w.a10, w.a00})
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("cost coefficients must be finite and nonnegative");
    }

    std::optional<CostWeights> constant_;
    std::vector<CostWeights> rows_;
};

// ============================================================================
// Labeled scores
// ============================================================================

struct LabeledScores {
    std::vector<double> scores;
    std::vector<int> labels;
    std::optional<std::vector<int>> group;
    std::optional<std::vector<double>> reference_scores;
    std::map<std::string, std::vector<double>> context;
    std::optional<CostCoefficients> coefficients;

    std::size_t size() const noexcept { return scores.size(); }

    std::size_t positives() const noexcept {
        std::size_t p = 0;
        for (int y : labels) p += (y == 1);
        return p;
    }

    bool has_both_classes() const noexcept {
        auto p = positives();
        return p > 0 && p < labels.size();
    }

    /// Rows picked by index (duplicates allowed); all columns follow.
    LabeledScores subset(const std::vector<std::size_t>& idx) const {
        LabeledScores out;
        out.scores.reserve(idx.size());
        out.labels.reserve(idx.size());
        for (auto i : idx) {
            out.scores.push_back(scores.at(i));
            out.labels.push_back(labels.at(i));
        }
        if (group) {
            out.group.emplace();
            for (auto i : idx) out.group->push_back(group->at(i));
        }
        if (reference_scores) {
            out.reference_scores.emplace();
            for (auto i : idx) out.reference_scores->push_back(reference_scores->at(i));
        }
        for (const auto& [name, col] : context) {
            auto& dst = out.context[name];
            for (auto i : idx) dst.push_back(col.at(i));
        }
        if (coefficients) out.coefficients = coefficients->subset(idx);
        return out;
    }

    /// Copy with the score column replaced.
    LabeledScores with_scores(std::vector<double> s) const {
        LabeledScores out = *this;
        out.scores = std::move(s);
        return out;
    }
};

/// Builds a LabeledScores from score and label columns only.
inline LabeledScores make_scores(std::vector<double> scores, std::vector<int> labels) {
    LabeledScores d;
    d.scores = std::move(scores);
    d.labels = std::move(labels);
    return d;
}

namespace detail {

inline bool in_unit(double v) noexcept { return v >= 0.0 && v <= 1.0; }

inline void check_binary(const std::vector<int>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] != 0 && v[i] != 1)
            throw ValidationError(std::string("non-binary ") + what + " at row " + std::to_string(i));
}

}  // namespace detail

/// Returns `data` unchanged when every invariant holds, throws otherwise.
inline const LabeledScores& validate(const LabeledScores& data) {
    const auto n = data.scores.size();
    if (n == 0) throw ValidationError("empty input");
    auto same = [n](std::size_t m) { return m == n; };
    if (!same(data.labels.size())) throw ValidationError("length mismatch");
    if (data.group && !same(data.group->size())) throw ValidationError("length mismatch");
    if (data.reference_scores && !same(data.reference_scores->size()))
        throw ValidationError("length mismatch");
    for (const auto& [name, col] : data.context)
        if (!same(col.size())) throw ValidationError("length mismatch");
    if (data.coefficients && data.coefficients->contextual() && !same(data.coefficients->size()))
        throw ValidationError("length mismatch");

    for (std::size_t i = 0; i < n; ++i)
        if (!detail::in_unit(data.scores[i]))
            throw ValidationError("score out of range at row " + std::to_string(i));
    if (data.reference_scores)
        for (std::size_t i = 0; i < n; ++i)
            if (!detail::in_unit((*data.reference_scores)[i]))
                throw ValidationError("reference score out of range at row " + std::to_string(i));
    detail::check_binary(data.labels, "label");
    if (data.group) detail::check_binary(*data.group, "group");
    for (const auto& [name, col] : data.context)
        for (double v : col)
            if (!std::isfinite(v)) throw ValidationError("non-finite value in context column " + name);
    return data;
}

// ============================================================================
// Decisions and confusion counts
// ============================================================================

struct DecisionRule {
    double threshold = 0.5;

    int decide(double score) const noexcept { return score >= threshold ? 1 : 0; }
};

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline std::vector<int> apply_rule(const LabeledScores& data, DecisionRule rule) {
    std::vector<int> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = rule.decide(data.scores[i]);
    return out;
}

namespace detail {

inline ConfusionCounts count_confusion(const LabeledScores& data, DecisionRule rule) noexcept {
    ConfusionCounts c;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool pred = rule.decide(data.scores[i]) == 1;
        const bool pos = data.labels[i] == 1;
        if (pred && pos) ++c.tp;
        else if (pred) ++c.fp;
        else if (pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

}  // namespace detail

inline ConfusionCounts confusion_at(const LabeledScores& data, DecisionRule rule) {
    return detail::count_confusion(validate(data), rule);
}

// ============================================================================
// Evaluation report
// ============================================================================

struct Interval {
    double low = 0.0;
    double high = 0.0;
    double level = 0.0;
};

using Curve = std::vector<std::pair<double, double>>;

/// Serializable bundle of metrics, curves and intervals for one model.
struct EvalReport {
    std::map<std::string, double> metrics;
    std::map<std::string, Curve> curves;
    std::map<std::string, Interval> intervals;

    /// Checks interval ordering and that curves are finite and x-ordered.
    void check() const {
        for (const auto& [name, iv] : intervals)
            if (!(iv.low <= iv.high)) throw ValidationError("interval " + name + " has low > high");
        for (const auto& [name, curve] : curves) {
            for (std::size_t i = 0; i < curve.size(); ++i) {
                if (!std::isfinite(curve[i].first) || !std::isfinite(curve[i].second))
                    throw ValidationError("curve " + name + " has non-finite point");
                if (i > 0 && curve[i].first < curve[i - 1].first)
                    throw ValidationError("curve " + name + " not ordered by x");
            }
        }
    }
};

}  // namespace utrust
