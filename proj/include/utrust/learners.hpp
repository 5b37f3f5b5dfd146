#pragma once

/**
 * utrust: small built-in learners for the experiment harness.
 *
 * - Logistic regression fitted by IRLS (Newton with step halving) with a
 *   1e-6 ridge on the weights, at most 50 iterations, stopping when
 *   max |coefficient change| < 1e-8. Features are standardized internally.
 * - k-nearest neighbours: score is the positive fraction among the k
 *   Euclidean-nearest training rows; distance ties go to the lower index.
 * - Seeded k-fold cross-validation over a k grid, and the repeated
 *   split / tune / compare protocol that contrasts AUC-based and
 *   accuracy-based selection by test-set maximum utility.
 */

#include "core.hpp"
#include "detail/parallel.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "utility.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace utrust {

struct FeatureMatrix {
    Eigen::MatrixXd values;  ///< n x d
    std::vector<std::string> names;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }

    void check() const {
        if (!values.allFinite()) throw ValidationError("non-finite feature value");
        if (!names.empty() && names.size() != cols()) throw ValidationError("feature name count mismatch");
    }

    FeatureMatrix select_rows(const std::vector<std::size_t>& idx) const {
        FeatureMatrix out;
        out.names = names;
        out.values.resize(static_cast<Eigen::Index>(idx.size()), values.cols());
        for (std::size_t r = 0; r < idx.size(); ++r)
            out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(idx[r]));
        return out;
    }
};

/// Column means and standard deviations from training rows; zero-variance
/// columns are dropped.
struct Standardization {
    std::vector<Eigen::Index> kept;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    static Standardization fit(const Eigen::MatrixXd& x) {
        Standardization s;
        const auto n = static_cast<double>(x.rows());
        std::vector<double> means, sds;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double m = x.col(j).mean();
            const double var = (x.col(j).array() - m).square().sum() / n;
            const double sd = std::sqrt(var);
            if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) continue;
            s.kept.push_back(j);
            means.push_back(m);
            sds.push_back(sd);
        }
        s.mean = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
        s.sd = Eigen::Map<Eigen::VectorXd>(sds.data(), static_cast<Eigen::Index>(sds.size()));
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd z(x.rows(), static_cast<Eigen::Index>(kept.size()));
        for (std::size_t k = 0; k < kept.size(); ++k) {
            const auto j = static_cast<Eigen::Index>(k);
            z.col(j) = (x.col(kept[k]).array() - mean(j)) / sd(j);
        }
        return z;
    }
};

// ============================================================================
// Logistic regression
// ============================================================================

struct LogisticOptions {
    double ridge = 1e-6;
    int max_iterations = 50;
    double tolerance = 1e-8;
};

struct LogisticModel {
    Standardization standardization;
    Eigen::VectorXd weights;  ///< on standardized features
    double intercept = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;

    std::vector<double> predict(const Eigen::MatrixXd& raw) const {
        const Eigen::VectorXd eta = (standardization.apply(raw) * weights).array() + intercept;
        std::vector<double> out(static_cast<std::size_t>(eta.size()));
        for (Eigen::Index i = 0; i < eta.size(); ++i) out[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-eta(i)));
        return out;
    }
};

class ConvergenceError : public DegenerateError {
public:
    ConvergenceError(int iterations, double gradient_norm, double last_step)
        : DegenerateError(describe(iterations, gradient_norm, last_step)),
          iterations(iterations), gradient_norm(gradient_norm), last_step(last_step) {}

    int iterations;
    double gradient_norm;
    double last_step;

private:
    static std::string describe(int it, double g, double step) {
        std::ostringstream os;
        os << "logistic regression did not converge after " << it << " iterations (gradient norm " << g
           << ", last max step " << step << ")";
        return os.str();
    }
};

namespace detail {

inline void check_labels(const std::vector<int>& labels, std::size_t n) {
    if (labels.size() != n) throw ValidationError("length mismatch");
    check_binary(labels, "label");
    std::size_t pos = 0;
    for (int y : labels) pos += static_cast<std::size_t>(y);
    if (pos == 0 || pos == n) throw DegenerateError("single-class labels");
}

}  // namespace detail

inline LogisticModel fit_logistic(const FeatureMatrix& features, const std::vector<int>& labels,
                                  const LogisticOptions& options = {}) {
    features.check();
    const auto n = features.rows();
    detail::check_labels(labels, n);
    LogisticModel model;
    model.standardization = Standardization::fit(features.values);
    const Eigen::MatrixXd z = model.standardization.apply(features.values);
    const auto d = z.cols();
    if (static_cast<Eigen::Index>(n) <= d) throw ValidationError("logistic regression needs n > d");

    Eigen::MatrixXd design(z.rows(), d + 1);
    design.col(0).setOnes();
    design.rightCols(d) = z;
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = labels[i];

    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, options.ridge);
    penalty(0) = 0.0;
    // penalized log-likelihood
    auto objective = [&](const Eigen::VectorXd& b) {
        const Eigen::ArrayXd eta = (design * b).array();
        // log(1 + e^eta) without overflow
        const Eigen::ArrayXd softplus = eta.max(0.0) + (-eta.abs()).exp().log1p();
        return (y.array() * eta - softplus).sum() - 0.5 * (penalty.array() * b.array().square()).sum();
    };
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
    double current = objective(beta);
    double last_step = 0.0;
    double grad_norm = 0.0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Eigen::VectorXd eta = design * beta;
        const Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse().matrix();
        const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).matrix();
        const Eigen::VectorXd grad = design.transpose() * (y - p) - penalty.cwiseProduct(beta);
        Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
        hessian.diagonal() += penalty;
        Eigen::VectorXd step = hessian.ldlt().solve(grad);
        grad_norm = grad.norm();
        if (!step.allFinite()) throw ConvergenceError(it, grad_norm, std::numeric_limits<double>::infinity());
        // step halving keeps the objective from decreasing
        double candidate = objective(beta + step);
        for (int half = 0; half < 30 && !(candidate >= current); ++half) {
            step *= 0.5;
            candidate = objective(beta + step);
        }
        beta += step;
        current = candidate;
        last_step = step.cwiseAbs().maxCoeff();
        if (last_step < options.tolerance) {
            model.intercept = beta(0);
            model.weights = beta.tail(d);
            model.iterations = it;
            model.gradient_norm = grad_norm;
            return model;
        }
    }
    throw ConvergenceError(options.max_iterations, grad_norm, last_step);
}

// ============================================================================
// k-nearest neighbours
// ============================================================================

/// Scores for several k at once: result[j][i] is the score of test row i
/// with k = ks[j]. Inputs must already be standardized consistently.
inline std::vector<std::vector<double>> knn_scores_multi(const Eigen::MatrixXd& train,
                                                         const std::vector<int>& train_labels,
                                                         const Eigen::MatrixXd& test,
                                                         const std::vector<std::size_t>& ks) {
    const auto n_train = static_cast<std::size_t>(train.rows());
    if (train_labels.size() != n_train) throw ValidationError("length mismatch");
    if (train.cols() != test.cols()) throw ValidationError("feature dimension mismatch");
    if (ks.empty()) throw ValidationError("empty k grid");
    std::size_t k_max = 0;
    for (auto k : ks) {
        if (k < 1 || k > n_train) throw ValidationError("k out of range");
        k_max = std::max(k_max, k);
    }
    std::vector<std::vector<double>> out(ks.size(), std::vector<double>(static_cast<std::size_t>(test.rows())));
    std::vector<std::pair<double, std::size_t>> dist(n_train);
    for (Eigen::Index t = 0; t < test.rows(); ++t) {
        for (std::size_t i = 0; i < n_train; ++i)
            dist[i] = {(train.row(static_cast<Eigen::Index>(i)) - test.row(t)).squaredNorm(), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_max), dist.end());
        // prefix[m] = positives among the m nearest
        std::vector<std::size_t> prefix(k_max + 1, 0);
        for (std::size_t m = 0; m < k_max; ++m)
            prefix[m + 1] = prefix[m] + static_cast<std::size_t>(train_labels[dist[m].second]);
        for (std::size_t j = 0; j < ks.size(); ++j)
            out[j][static_cast<std::size_t>(t)] = static_cast<double>(prefix[ks[j]]) / static_cast<double>(ks[j]);
    }
    return out;
}

inline std::vector<double> knn_scores(const Eigen::MatrixXd& train, const std::vector<int>& train_labels,
                                      const Eigen::MatrixXd& test, std::size_t k) {
    return knn_scores_multi(train, train_labels, test, {k}).front();
}

/// Standardizes with training statistics, then scores.
inline std::vector<std::vector<double>> knn_scores_standardized(const FeatureMatrix& train,
                                                                const std::vector<int>& train_labels,
                                                                const FeatureMatrix& test,
                                                                const std::vector<std::size_t>& ks) {
    const auto st = Standardization::fit(train.values);
    return knn_scores_multi(st.apply(train.values), train_labels, st.apply(test.values), ks);
}

// ============================================================================
// Cross-validation
// ============================================================================

struct CvResult {
    std::vector<std::size_t> ks;
    std::size_t folds = 0;
    std::vector<std::size_t> fold_of;                          ///< fold index per sample
    std::vector<std::vector<std::optional<double>>> fold_auc;  ///< [k][fold]; absent for single-class folds
    std::vector<std::vector<double>> fold_accuracy;            ///< [k][fold], threshold 0.5
    std::vector<double> mean_auc;
    std::vector<double> mean_accuracy;
    std::vector<std::size_t> skipped_auc_folds;
    std::size_t selected_by_auc = 0;
    std::size_t selected_by_accuracy = 0;
};

namespace detail {

/// Index of the maximum; ties go to the smaller k.
inline std::size_t select_k(const std::vector<std::size_t>& ks, const std::vector<double>& score) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < ks.size(); ++j)
        if (score[j] > score[best] || (score[j] == score[best] && ks[j] < ks[best])) best = j;
    return ks[best];
}

}  // namespace detail

/// Seeded shuffle, contiguous folds; kNN per k; fold AUC and accuracy at 0.5.
inline CvResult kfold_cv(const FeatureMatrix& features, const std::vector<int>& labels, std::size_t folds,
                         const std::vector<std::size_t>& ks, std::uint64_t seed, unsigned threads = 1) {
    features.check();
    const auto n = features.rows();
    if (labels.size() != n) throw ValidationError("length mismatch");
    detail::check_binary(labels, "label");
    if (folds < 2) throw ValidationError("folds must be >= 2");
    if (n < folds) throw ValidationError("fewer samples than folds");
    if (ks.empty()) throw ValidationError("empty k grid");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);

    CvResult res;
    res.ks = ks;
    res.folds = folds;
    res.fold_of.assign(n, 0);
    std::vector<std::vector<std::size_t>> members(folds);
    for (std::size_t f = 0; f < folds; ++f)
        for (std::size_t p = f * n / folds; p < (f + 1) * n / folds; ++p) {
            res.fold_of[perm[p]] = f;
            members[f].push_back(perm[p]);
        }

    res.fold_auc.assign(ks.size(), std::vector<std::optional<double>>(folds));
    res.fold_accuracy.assign(ks.size(), std::vector<double>(folds, 0.0));
    detail::parallel_for(folds, threads, [&](std::size_t f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < folds; ++g)
            if (g != f) train_idx.insert(train_idx.end(), members[g].begin(), members[g].end());
        std::sort(train_idx.begin(), train_idx.end());
        std::vector<std::size_t> val_idx = members[f];
        std::sort(val_idx.begin(), val_idx.end());
        std::vector<int> y_train, y_val;
        for (auto i : train_idx) y_train.push_back(labels[i]);
        for (auto i : val_idx) y_val.push_back(labels[i]);
        const auto scores = knn_scores_standardized(features.select_rows(train_idx), y_train,
                                                    features.select_rows(val_idx), ks);
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const auto data = make_scores(scores[j], y_val);
            res.fold_accuracy[j][f] = accuracy(data, DecisionRule{0.5});
            if (data.has_both_classes()) res.fold_auc[j][f] = auc_rank(data);
        }
    });

    for (std::size_t f = 0; f < folds; ++f)
        if (!res.fold_auc[0][f]) res.skipped_auc_folds.push_back(f);
    if (res.skipped_auc_folds.size() == folds) throw DegenerateError("every fold is single-class; AUC undefined");
    for (std::size_t j = 0; j < ks.size(); ++j) {
        std::vector<double> aucs;
        for (const auto& a : res.fold_auc[j])
            if (a) aucs.push_back(*a);
        res.mean_auc.push_back(detail::mean(aucs));
        res.mean_accuracy.push_back(detail::mean(res.fold_accuracy[j]));
    }
    res.selected_by_auc = detail::select_k(ks, res.mean_auc);
    res.selected_by_accuracy = detail::select_k(ks, res.mean_accuracy);
    return res;
}

// ============================================================================
// Split, tune, compare
// ============================================================================

struct TuneOptions {
    std::vector<std::size_t> k_grid;
    std::size_t folds = 20;
    std::size_t repeats = 1;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    UtilitySpec utility = UtilitySpec::zero_one();
    unsigned threads = 1;
    std::size_t grid_intervals = 200;
};

struct TuneRepeat {
    std::size_t k_auc = 0;
    std::size_t k_accuracy = 0;
    double u_max_auc = 0.0;
    double u_max_accuracy = 0.0;
    std::vector<double> curve_auc;       ///< test utility on the threshold grid
    std::vector<double> curve_accuracy;
    CvResult cv;
};

struct TuneReport {
    std::vector<TuneRepeat> repeats;
    std::vector<std::size_t> ks;
    std::vector<MeanSem> cv_auc;       ///< per k, over repeats
    std::vector<MeanSem> cv_accuracy;  ///< per k, over repeats
    MeanSem u_max_auc;
    MeanSem u_max_accuracy;
    MeanSem u_max_difference;  ///< AUC-selected minus accuracy-selected
    std::vector<double> thresholds;
    std::vector<MeanSem> curve_auc;
    std::vector<MeanSem> curve_accuracy;
};

/// Repeats: seeded train/test split, k chosen by CV AUC and by CV accuracy,
/// both refit on the training part, then test utility swept over thresholds.
/// `age` (optional, per row) feeds the age-contextual utility.
inline TuneReport tune_and_compare(const FeatureMatrix& features, const std::vector<int>& labels,
                                   const std::optional<std::vector<double>>& age, const TuneOptions& opt) {
    features.check();
    const auto n = features.rows();
    if (labels.size() != n) throw ValidationError("length mismatch");
    if (age && age->size() != n) throw ValidationError("length mismatch");
    if (opt.repeats < 1) throw ValidationError("repeats must be >= 1");
    if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0)) throw ValidationError("train fraction must be in (0,1)");
    const auto n_train = static_cast<std::size_t>(std::llround(opt.train_fraction * static_cast<double>(n)));
    if (n_train < opt.folds || n_train >= n) throw ValidationError("split leaves too few rows");

    TuneReport rep;
    rep.ks = opt.k_grid;
    rep.thresholds = threshold_grid(opt.grid_intervals);
    rep.repeats.resize(opt.repeats);
    for (std::size_t r = 0; r < opt.repeats; ++r) {
        auto& out = rep.repeats[r];
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng split_rng(opt.seed, 2 * r);
        split_rng.shuffle(perm);
        std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
        std::vector<std::size_t> test_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(test_idx.begin(), test_idx.end());
        std::vector<int> y_train, y_test;
        for (auto i : train_idx) y_train.push_back(labels[i]);
        for (auto i : test_idx) y_test.push_back(labels[i]);
        const auto train = features.select_rows(train_idx);
        const auto test = features.select_rows(test_idx);

        out.cv = kfold_cv(train, y_train, opt.folds, opt.k_grid, derive_seed(opt.seed, 2 * r + 1), opt.threads);
        out.k_auc = out.cv.selected_by_auc;
        out.k_accuracy = out.cv.selected_by_accuracy;
        const auto scores = knn_scores_standardized(train, y_train, test, {out.k_auc, out.k_accuracy});

        auto evaluate = [&](const std::vector<double>& s, double& u_max, std::vector<double>& curve) {
            auto data = make_scores(s, y_test);
            if (age) {
                auto& col = data.context["age"];
                for (auto i : test_idx) col.push_back((*age)[i]);
            }
            const auto coeffs = opt.utility.resolve(data);
            const ThresholdSweep sweep(data, coeffs);
            u_max = sweep.curve().u_max;
            curve = sweep.on_grid(rep.thresholds);
        };
        evaluate(scores[0], out.u_max_auc, out.curve_auc);
        evaluate(scores[1], out.u_max_accuracy, out.curve_accuracy);
    }

    auto collect = [&](auto&& get) {
        std::vector<double> v;
        for (const auto& r : rep.repeats) v.push_back(get(r));
        return mean_sem(v);
    };
    for (std::size_t j = 0; j < opt.k_grid.size(); ++j) {
        rep.cv_auc.push_back(collect([j](const TuneRepeat& r) { return r.cv.mean_auc[j]; }));
        rep.cv_accuracy.push_back(collect([j](const TuneRepeat& r) { return r.cv.mean_accuracy[j]; }));
    }
    rep.u_max_auc = collect([](const TuneRepeat& r) { return r.u_max_auc; });
    rep.u_max_accuracy = collect([](const TuneRepeat& r) { return r.u_max_accuracy; });
    rep.u_max_difference = collect([](const TuneRepeat& r) { return r.u_max_auc - r.u_max_accuracy; });
    for (std::size_t g = 0; g < rep.thresholds.size(); ++g) {
        rep.curve_auc.push_back(collect([g](const TuneRepeat& r) { return r.curve_auc[g]; }));
        rep.curve_accuracy.push_back(collect([g](const TuneRepeat& r) { return r.curve_accuracy[g]; }));
    }
    return rep;
}

}  // namespace utrust
