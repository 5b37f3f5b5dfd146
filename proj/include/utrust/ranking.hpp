#pragma once

/**
 * utrust: ranking fidelity and equity-aware selection.
 *
 * A candidate scorer is properly ranked against a reference scorer when it
 * preserves every strict order and every tie of the reference. The group-wise
 * variant only constrains pairs inside the same group.
 *
 * equity_select maximizes  sum(benefit of chosen) + gamma[k1]  over size-K
 * subsets, where k1 counts chosen group-1 members, by taking the best items
 * of each group for every feasible k1. equity_brute_force enumerates all
 * subsets and is the test oracle for it.
 */

#include "core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string_view>
#include <vector>

namespace utrust {

// ============================================================================
// Properly-ranked checks
// ============================================================================

/// True iff reference_i > reference_j implies candidate_i > candidate_j and
/// reference_i == reference_j implies candidate_i == candidate_j. Values
/// within `tolerance` of each other count as equal. O(n log n).
inline bool check_properly_ranked(const std::vector<double>& candidate, const std::vector<double>& reference,
                                  double tolerance = 0.0) {
    if (candidate.size() != reference.size()) throw ValidationError("length mismatch");
    if (candidate.empty()) throw ValidationError("empty input");
    std::vector<std::size_t> idx(reference.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (reference[a] != reference[b]) return reference[a] < reference[b];
        return candidate[a] < candidate[b];
    });
    for (std::size_t k = 1; k < idx.size(); ++k) {
        const auto lo = idx[k - 1], hi = idx[k];
        const bool ref_tie = reference[hi] - reference[lo] <= tolerance;
        const double cand_gap = candidate[hi] - candidate[lo];
        if (ref_tie) {
            if (std::abs(cand_gap) > tolerance) return false;
        } else if (!(cand_gap > tolerance)) {
            return false;
        }
    }
    return true;
}

/// Properly ranked inside group 0 and inside group 1; cross-group pairs free.
inline bool check_groupwise_properly_ranked(const std::vector<double>& candidate,
                                            const std::vector<double>& reference, const std::vector<int>& group,
                                            double tolerance = 0.0) {
    if (candidate.size() != reference.size() || group.size() != reference.size())
        throw ValidationError("length mismatch");
    for (int g : {0, 1}) {
        std::vector<double> c, r;
        for (std::size_t i = 0; i < group.size(); ++i) {
            if (group[i] != 0 && group[i] != 1) throw ValidationError("non-binary group");
            if (group[i] == g) {
                c.push_back(candidate[i]);
                r.push_back(reference[i]);
            }
        }
        if (!c.empty() && !check_properly_ranked(c, r, tolerance)) return false;
    }
    return true;
}

// ============================================================================
// Monotone transforms
// ============================================================================

enum class TransformKind {
    LogitShift,  ///< sigmoid(logit(s) + parameter)
    Affine,      ///< 0.5 + parameter * (s - 0.5), parameter in (0, 1]
    Power,       ///< s^parameter, parameter > 0
};

inline TransformKind parse_transform_kind(std::string_view name) {
    if (name == "logit-shift") return TransformKind::LogitShift;
    if (name == "affine") return TransformKind::Affine;
    if (name == "power") return TransformKind::Power;
    throw ValidationError("unknown transform '" + std::string(name) + "'");
}

inline double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

/// Strictly increasing map of [0,1] into [0,1].
inline std::vector<double> monotone_transform(const std::vector<double>& scores, TransformKind kind,
                                              double parameter) {
    if (!std::isfinite(parameter)) throw ValidationError("non-monotone parameterization");
    switch (kind) {
        case TransformKind::LogitShift: break;
        case TransformKind::Affine:
            if (!(parameter > 0.0 && parameter <= 1.0)) throw ValidationError("non-monotone parameterization");
            break;
        case TransformKind::Power:
            if (!(parameter > 0.0)) throw ValidationError("non-monotone parameterization");
            break;
    }
    std::vector<double> out;
    out.reserve(scores.size());
    for (double s : scores) {
        if (!detail::in_unit(s)) throw ValidationError("score out of range");
        double t = s;
        switch (kind) {
            case TransformKind::LogitShift:
                if (s > 0.0 && s < 1.0) t = sigmoid(std::log(s / (1.0 - s)) + parameter);
                break;
            case TransformKind::Affine: t = 0.5 + parameter * (s - 0.5); break;
            case TransformKind::Power: t = std::pow(s, parameter); break;
        }
        out.push_back(t);
    }
    return out;
}

// ============================================================================
// Equity-aware selection
// ============================================================================

struct EquityUtilitySpec {
    std::vector<double> benefit;      ///< per-item separable contribution
    std::vector<double> gamma_table;  ///< gamma_table[m]: bonus for m chosen group-1 items
};

struct SelectionResult {
    std::vector<std::size_t> chosen;  ///< ascending indices
    std::size_t k1 = 0;
    double total_utility = 0.0;
    /// Best utility for each k1 in 0..K; empty when k1 is infeasible.
    std::vector<std::optional<double>> profile;
};

namespace detail {

inline void check_equity_inputs(const std::vector<double>& reference, const std::vector<int>& group,
                                std::size_t K, const EquityUtilitySpec& spec) {
    const auto n = reference.size();
    if (group.size() != n || spec.benefit.size() != n) throw ValidationError("length mismatch");
    if (K > n) throw ValidationError("K exceeds number of items");
    if (spec.gamma_table.size() != K + 1) throw ValidationError("gamma table length must be K+1");
    for (std::size_t m = 0; m < spec.gamma_table.size(); ++m) {
        if (!std::isfinite(spec.gamma_table[m])) throw ValidationError("non-finite gamma value");
        if (m > 0 && spec.gamma_table[m] < spec.gamma_table[m - 1])
            throw ValidationError("gamma table must be nondecreasing");
    }
    for (int g : group)
        if (g != 0 && g != 1) throw ValidationError("non-binary group");
    for (double b : spec.benefit)
        if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("benefit must be finite and nonnegative");
    // benefit must be nondecreasing in reference score
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (reference[a] != reference[b]) return reference[a] < reference[b];
        return spec.benefit[a] < spec.benefit[b];
    });
    for (std::size_t k = 1; k < n; ++k)
        if (spec.benefit[idx[k]] < spec.benefit[idx[k - 1]])
            throw ValidationError("benefit must be nondecreasing in reference score");
}

/// Benefits summed largest first, so equal multisets give equal sums and a
/// dominating multiset never sums lower.
inline double selection_utility(const std::vector<std::size_t>& chosen, std::size_t k1,
                                const EquityUtilitySpec& spec) {
    std::vector<double> b;
    b.reserve(chosen.size());
    for (auto i : chosen) b.push_back(spec.benefit[i]);
    std::sort(b.begin(), b.end(), std::greater<>());
    double total = 0.0;
    for (double v : b) total += v;
    return total + spec.gamma_table[k1];
}

}  // namespace detail

/// Per-group top selection; ties resolved toward smaller k1, then lower indices.
inline SelectionResult equity_select(const std::vector<double>& reference, const std::vector<int>& group,
                                     std::size_t K, const EquityUtilitySpec& spec) {
    detail::check_equity_inputs(reference, group, K, spec);
    std::vector<std::size_t> members[2];
    for (std::size_t i = 0; i < group.size(); ++i) members[group[i]].push_back(i);
    // Best first: benefit desc, index asc. Benefit is nondecreasing in
    // reference, so this is top-by-reference up to benefit ties.
    for (auto& m : members)
        std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
            if (spec.benefit[a] != spec.benefit[b]) return spec.benefit[a] > spec.benefit[b];
            return a < b;
        });

    SelectionResult best;
    best.profile.assign(K + 1, std::nullopt);
    bool found = false;
    for (std::size_t k1 = 0; k1 <= K; ++k1) {
        const std::size_t k0 = K - k1;
        if (k1 > members[1].size() || k0 > members[0].size()) continue;
        std::vector<std::size_t> chosen(members[0].begin(), members[0].begin() + static_cast<std::ptrdiff_t>(k0));
        chosen.insert(chosen.end(), members[1].begin(), members[1].begin() + static_cast<std::ptrdiff_t>(k1));
        std::sort(chosen.begin(), chosen.end());
        const double u = detail::selection_utility(chosen, k1, spec);
        best.profile[k1] = u;
        if (!found || u > best.total_utility) {
            found = true;
            best.chosen = std::move(chosen);
            best.k1 = k1;
            best.total_utility = u;
        }
    }
    return best;
}

inline constexpr std::size_t kBruteForceLimit = 20;

/// Exhaustive search over all size-K subsets; same tie-break as equity_select
/// (larger utility, then smaller k1, then lexicographically smaller indices).
inline SelectionResult equity_brute_force(const std::vector<double>& reference, const std::vector<int>& group,
                                          std::size_t K, const EquityUtilitySpec& spec) {
    if (reference.size() > kBruteForceLimit) throw ValidationError("brute force limited to n <= 20");
    detail::check_equity_inputs(reference, group, K, spec);
    const auto n = reference.size();
    SelectionResult best;
    best.profile.assign(K + 1, std::nullopt);
    bool found = false;
    const std::uint32_t end = std::uint32_t{1} << n;
    for (std::uint32_t mask = 0; mask < end; ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != K) continue;
        std::vector<std::size_t> chosen;
        std::size_t k1 = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::uint32_t{1} << i)) {
                chosen.push_back(i);
                k1 += static_cast<std::size_t>(group[i]);
            }
        const double u = detail::selection_utility(chosen, k1, spec);
        if (!best.profile[k1] || u > *best.profile[k1]) best.profile[k1] = u;
        const bool better = !found || u > best.total_utility ||
                            (u == best.total_utility &&
                             (k1 < best.k1 || (k1 == best.k1 && chosen < best.chosen)));
        if (better) {
            found = true;
            best.chosen = std::move(chosen);
            best.k1 = k1;
            best.total_utility = u;
        }
    }
    return best;
}

}  // namespace utrust
