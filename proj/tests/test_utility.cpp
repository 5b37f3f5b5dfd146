#include <utrust/metrics.hpp>
#include <utrust/ranking.hpp>
#include <utrust/simlab.hpp>
#include <utrust/utility.hpp>

#include <gtest/gtest.h>

#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace utrust;

namespace {

oracle::Weights to_oracle(const CostWeights& w) { return {w.a11, w.a01, w.a10, w.a00}; }

}  // namespace

TEST(EmpiricalUtility, ZeroOneExamples) {
    const auto zo = CostCoefficients::zero_one();
    EXPECT_EQ(empirical_utility(make_scores({0.9, 0.1}, {1, 0}), zo, DecisionRule{0.5}), 1.0);
    EXPECT_DOUBLE_EQ(empirical_utility(make_scores({0.2, 0.6, 0.7}, {0, 1, 0}), zo, DecisionRule{0.6}), 2.0 / 3.0);
}

TEST(EmpiricalUtility, FalsePositiveCost) {
    const auto w = CostCoefficients::constant(1, 2, 0, 1);
    // one true positive, one false positive
    EXPECT_EQ(empirical_utility(make_scores({0.9, 0.8}, {1, 0}), w, DecisionRule{0.5}), -0.5);
}

TEST(EmpiricalUtility, ContextualLengthMismatch) {
    const auto w = CostCoefficients::per_sample({{1, 0, 0, 1}});
    EXPECT_THROW(empirical_utility(make_scores({0.9, 0.8}, {1, 0}), w, DecisionRule{0.5}), ValidationError);
}

TEST(UtilityCurve, Examples) {
    const auto zo = CostCoefficients::zero_one();
    EXPECT_EQ(utility_curve(make_scores({0.9, 0.1}, {1, 0}), zo).u_max, 1.0);

    const auto c = utility_curve(make_scores({0.2, 0.6, 0.7}, {0, 1, 0}), zo);
    EXPECT_DOUBLE_EQ(c.u_max, 2.0 / 3.0);
    EXPECT_EQ(c.argmax_threshold, 0.6);
    ASSERT_EQ(c.points.size(), 4u);
    EXPECT_GT(c.points.back().threshold, 0.7);

    const auto all_pos = utility_curve(make_scores({0.3, 0.8, 0.5}, {1, 1, 1}), zo);
    EXPECT_EQ(all_pos.u_max, 1.0);
    EXPECT_EQ(all_pos.argmax_threshold, 0.3);
}

TEST(UtilityCurve, PointsOrderedAndMaxConsistent) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = gen::dataset(rng, 2, 100, 15);
        const auto c = utility_curve(d, CostCoefficients::constant(gen::weights(rng)));
        double best = -INFINITY;
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            if (i > 0) {
                EXPECT_LT(c.points[i - 1].threshold, c.points[i].threshold);
            }
            best = std::max(best, c.points[i].utility);
        }
        EXPECT_EQ(best, c.u_max);
        for (const auto& p : c.points) {
            if (p.threshold >= c.argmax_threshold) break;
            EXPECT_LT(p.utility, c.u_max);
        }
    }
}

TEST(UtilityCurve, SweepMatchesOracleAndDominatesAnyThreshold) {
    Rng rng(22);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = gen::dataset(rng, 2, 80, 1 + rng.below(20));
        const auto w = gen::weights(rng);
        const auto coeffs = CostCoefficients::constant(w);
        const auto c = utility_curve(d, coeffs);
        EXPECT_NEAR(c.u_max, oracle::max_utility(d.scores, d.labels, to_oracle(w)), 1e-12);
        for (int k = 0; k < 20; ++k) {
            const double t = rng.uniform() * 1.2 - 0.1;
            EXPECT_GE(c.u_max + 1e-12, empirical_utility(d, coeffs, DecisionRule{t}));
            EXPECT_NEAR(ThresholdSweep(d, coeffs).utility(t),
                        oracle::utility(d.scores, d.labels, to_oracle(w), t), 1e-12);
        }
    }
}

TEST(UtilityCurve, ContextualSweepMatchesDirectSum) {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = gen::dataset(rng, 2, 80, 12);
        std::vector<CostWeights> rows;
        for (std::size_t i = 0; i < d.size(); ++i) rows.push_back(gen::weights(rng));
        const auto coeffs = CostCoefficients::per_sample(rows);
        const ThresholdSweep sweep(d, coeffs);
        for (double t : sweep.candidate_thresholds()) {
            double direct = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i)
                direct += oracle::utility({d.scores[i]}, {d.labels[i]}, to_oracle(rows[i]), t);
            EXPECT_NEAR(sweep.utility(t), direct / static_cast<double>(d.size()), 1e-12);
            EXPECT_NEAR(sweep.utility(t), empirical_utility(d, coeffs, DecisionRule{t}), 1e-12);
        }
        const auto c = sweep.curve();
        for (int k = 0; k < 10; ++k)
            EXPECT_GE(c.u_max + 1e-12, empirical_utility(d, coeffs, DecisionRule{rng.uniform()}));
    }
}

TEST(UtilityCurve, MonotoneTransformInvarianceIsExact) {
    Rng rng(24);
    const TransformKind kinds[] = {TransformKind::LogitShift, TransformKind::Affine, TransformKind::Power};
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = gen::informative_dataset(rng, 2 + rng.below(200), 40);
        const auto kind = kinds[trial % 3];
        const double param = kind == TransformKind::LogitShift ? rng.uniform() * 4.0 - 2.0
                             : kind == TransformKind::Affine   ? 0.1 + 0.9 * rng.uniform()
                                                              : 0.2 + 3.0 * rng.uniform();
        const auto t = monotone_transform(d.scores, kind, param);
        ASSERT_TRUE(check_properly_ranked(t, d.scores));
        const auto td = d.with_scores(t);
        for (int k = 0; k < 10; ++k) {
            const auto coeffs = CostCoefficients::constant(gen::weights(rng));
            const auto a = utility_curve(d, coeffs);
            const auto b = utility_curve(td, coeffs);
            EXPECT_EQ(a.u_max, b.u_max);
            // the argmax maps through T, except at the all-reject sentinel
            const auto pos = std::find(d.scores.begin(), d.scores.end(), a.argmax_threshold);
            if (pos != d.scores.end()) {
                EXPECT_EQ(b.argmax_threshold, t[static_cast<std::size_t>(pos - d.scores.begin())]);
            }
        }
    }
}

TEST(UtilityCurve, ZeroOneUtilityEqualsAccuracyExactly) {
    Rng rng(25);
    const auto zo = CostCoefficients::zero_one();
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = gen::dataset(rng, 2, 200, 30);
        for (int k = 0; k < 10; ++k) {
            const DecisionRule rule{rng.uniform()};
            EXPECT_EQ(empirical_utility(d, zo, rule), accuracy(d, rule));
        }
    }
}

TEST(UtilityCurve, ScalingCoefficients) {
    Rng rng(26);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = gen::dataset(rng, 2, 100, 20);
        const auto coeffs = CostCoefficients::constant(gen::weights(rng));
        const double lambda = 0.5 + 3.0 * rng.uniform();
        const auto a = utility_curve(d, coeffs);
        const auto b = utility_curve(d, coeffs.scaled(lambda));
        EXPECT_EQ(a.argmax_threshold, b.argmax_threshold);
        ASSERT_EQ(a.points.size(), b.points.size());
        for (std::size_t i = 0; i < a.points.size(); ++i)
            EXPECT_NEAR(b.points[i].utility, lambda * a.points[i].utility, 1e-12);
    }
}

TEST(BayesThreshold, Examples) {
    EXPECT_EQ(bayes_threshold(CostCoefficients::zero_one()), 0.5);
    EXPECT_NEAR(bayes_threshold(uc_family(1.0)), 2.0 / 3.5, 1e-15);
    EXPECT_EQ(bayes_threshold(CostCoefficients::constant(1, 0, 2, 0)), 0.0);
    try {
        bayes_threshold(CostCoefficients::per_sample({{1, 0, 0, 1}}));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("analytic threshold requires constant coefficients"),
                  std::string::npos);
    }
}

TEST(BayesThreshold, NearOptimalOnSimulatedBayesScores) {
    SimStudyConfig cfg;
    cfg.n_realizations = 1;
    const auto d = generate_realization(cfg, 0).labeled(SimClassifier::Bayes);
    for (const auto& coeffs : {CostCoefficients::zero_one(), uc_family(0.5), uc_family(1), uc_family(2)}) {
        const double gap = max_utility(d, coeffs) - empirical_utility(d, coeffs, DecisionRule{bayes_threshold(coeffs)});
        EXPECT_GE(gap, 0.0);
        EXPECT_LT(gap, 0.003);
    }
}

TEST(UcFamily, Examples) {
    EXPECT_EQ(uc_family(0).weights(), (CostWeights{1, 0, 0, 1}));
    EXPECT_EQ(uc_family(1).weights(), (CostWeights{1, 1, 0.5, 1}));
    EXPECT_EQ(uc_family(2).weights(), (CostWeights{1, 2, 1, 1}));
    EXPECT_THROW(uc_family(-1), ValidationError);
}

TEST(AgeContextual, Examples) {
    auto d = make_scores({0.5, 0.5, 0.5}, {1, 0, 1});
    d.context["age"] = {100, 0, 50};
    const auto c = age_contextual_coeffs(d);
    ASSERT_TRUE(c.contextual());
    EXPECT_EQ(c.at(0), (CostWeights{1, 0, 0, 1}));
    EXPECT_EQ(c.at(1), (CostWeights{1, 3, 0.5, 1}));
    EXPECT_EQ(c.at(2), (CostWeights{1, 1.5, 0.25, 1}));
}

TEST(AgeContextual, Errors) {
    auto d = make_scores({0.5}, {1});
    EXPECT_THROW(age_contextual_coeffs(d), ValidationError);
    d.context["age"] = {101};
    EXPECT_THROW(age_contextual_coeffs(d), ValidationError);
}

TEST(UtilitySpec, Parse) {
    EXPECT_EQ(UtilitySpec::parse("zero-one").kind, UtilitySpec::Kind::ZeroOne);
    const auto uc = UtilitySpec::parse("c:1.5");
    EXPECT_EQ(uc.kind, UtilitySpec::Kind::Uc);
    EXPECT_EQ(uc.c, 1.5);
    EXPECT_EQ(UtilitySpec::parse("age-contextual").kind, UtilitySpec::Kind::AgeContextual);
    EXPECT_EQ(UtilitySpec::parse("columns").kind, UtilitySpec::Kind::Columns);
    for (const char* bad : {"", "c:", "c:x", "c:-1", "zero_one", "c:1.0abc"})
        EXPECT_THROW(UtilitySpec::parse(bad), ValidationError) << bad;
}

TEST(UtilitySpec, ColumnsNeedCoefficients) {
    EXPECT_THROW(UtilitySpec::columns().resolve(make_scores({0.5}, {1})), ValidationError);
}
