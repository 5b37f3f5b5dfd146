#pragma once

// Test-only reference implementations. Deliberately naive (quadratic loops,
// direct definitions) and independent of the library code paths.

#include <cstddef>
#include <vector>

namespace oracle {

/// AUC by enumerating every positive/negative pair with the 1 / 1/2 / 0 step.
inline double auc(const std::vector<double>& s, const std::vector<int>& y) {
    double sum = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            sum += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return sum / pairs;
}

struct Weights {
    double a11, a01, a10, a00;
};

/// Mean of a11*TP - a01*FP - a10*FN + a00*TN, evaluated row by row.
inline double utility(const std::vector<double>& s, const std::vector<int>& y, const Weights& w, double threshold) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool pred = s[i] >= threshold;
        if (pred && y[i] == 1) sum += w.a11;
        if (pred && y[i] == 0) sum -= w.a01;
        if (!pred && y[i] == 1) sum -= w.a10;
        if (!pred && y[i] == 0) sum += w.a00;
    }
    return sum / static_cast<double>(s.size());
}

/// Max utility over every observed score plus a threshold above them all.
inline double max_utility(const std::vector<double>& s, const std::vector<int>& y, const Weights& w) {
    double best = utility(s, y, w, 2.0);
    for (double t : s) {
        const double u = utility(s, y, w, t);
        if (u > best) best = u;
    }
    return best;
}

/// All-pairs properly-ranked check.
inline bool properly_ranked(const std::vector<double>& cand, const std::vector<double>& ref) {
    for (std::size_t i = 0; i < ref.size(); ++i)
        for (std::size_t j = 0; j < ref.size(); ++j) {
            if (ref[i] > ref[j] && !(cand[i] > cand[j])) return false;
            if (ref[i] == ref[j] && cand[i] != cand[j]) return false;
        }
    return true;
}

}  // namespace oracle
