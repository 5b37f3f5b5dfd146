#include <utrust/simlab.hpp>

#include <gtest/gtest.h>

using namespace utrust;

namespace {

SimStudyConfig small_config(std::size_t n, std::size_t realizations) {
    SimStudyConfig cfg;
    cfg.n_samples = n;
    cfg.n_realizations = realizations;
    return cfg;
}

}  // namespace

TEST(Realization, ShapesAndRanges) {
    const auto r = generate_realization(small_config(500, 1), 0);
    for (const auto* v : {&r.bayes_scores, &r.pr_scores, &r.cal_scores}) {
        ASSERT_EQ(v->size(), 500u);
        for (double s : *v) {
            EXPECT_GT(s, 0.0);
            EXPECT_LT(s, 1.0);
        }
    }
    EXPECT_EQ(r.labels.size(), 500u);
}

TEST(Realization, ProperlyRankedChecks) {
    const auto cfg = small_config(2000, 5);
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto r = generate_realization(cfg, i);
        EXPECT_TRUE(check_properly_ranked(r.pr_scores, r.bayes_scores));
        EXPECT_FALSE(check_properly_ranked(r.cal_scores, r.bayes_scores));
    }
}

TEST(Realization, PositiveRateNearHalf) {
    const auto r = generate_realization(small_config(15000, 1), 0);
    const auto d = r.labeled(SimClassifier::Bayes);
    const double rate = static_cast<double>(d.positives()) / 15000.0;
    EXPECT_GE(rate, 0.47);
    EXPECT_LE(rate, 0.53);
}

TEST(Realization, DeterministicPerIndex) {
    const auto cfg = small_config(300, 3);
    const auto a = generate_realization(cfg, 2);
    const auto b = generate_realization(cfg, 2);
    const auto c = generate_realization(cfg, 1);
    EXPECT_EQ(a.bayes_scores, b.bayes_scores);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_NE(a.bayes_scores, c.bayes_scores);
}

TEST(Config, Validation) {
    EXPECT_THROW(small_config(5, 1).check(), ValidationError);
    EXPECT_THROW(small_config(100, 0).check(), ValidationError);
    auto cfg = small_config(100, 1);
    cfg.utility = CostCoefficients::per_sample({{1, 0, 0, 1}});
    EXPECT_THROW(cfg.check(), ValidationError);
}

TEST(Study, ExactUtilityAndAucEqualityForShiftedScorer) {
    const auto s = run_study(small_config(3000, 8));
    const auto& bayes = s[SimClassifier::Bayes];
    const auto& pr = s[SimClassifier::ProperlyRanked];
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(pr.values.at("u_max")[i], bayes.values.at("u_max")[i]);
        EXPECT_NEAR(pr.values.at("auc")[i], bayes.values.at("auc")[i], 1e-12);
        EXPECT_EQ(pr.values.at("accuracy")[i], pr.values.at("u_max_zero_one")[i]);
    }
    for (bool ok : s.pr_properly_ranked) EXPECT_TRUE(ok);
    for (bool ok : s.cal_properly_ranked) EXPECT_FALSE(ok);
}

TEST(Study, BandsAreOrdered) {
    const auto s = run_study(small_config(1000, 12));
    for (const auto& cls : s.classifiers) {
        EXPECT_EQ(cls.values.size(), cls.bands.size());
        for (const auto& [name, b] : cls.bands) {
            EXPECT_LE(b.low, b.mid) << cls.name << " " << name;
            EXPECT_LE(b.mid, b.high) << cls.name << " " << name;
        }
        for (const auto& p : cls.calibration) {
            EXPECT_LE(p.observed.low, p.observed.high);
            EXPECT_GE(p.realizations, 1u);
        }
    }
}

TEST(Study, IndependentOfThreadCount) {
    auto cfg = small_config(800, 6);
    const auto serial = run_study(cfg);
    cfg.threads = 4;
    const auto parallel = run_study(cfg);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(serial.classifiers[c].values, parallel.classifiers[c].values);
}

TEST(PercentileBand, LinearInterpolation) {
    const auto b = percentile_band({4, 0, 1, 3, 2});
    EXPECT_DOUBLE_EQ(b.low, 0.64);
    EXPECT_EQ(b.mid, 2.0);
    EXPECT_DOUBLE_EQ(b.high, 3.36);
}

TEST(ThresholdCurves, PeaksFollowTheory) {
    const auto cfg = small_config(15000, 4);
    const auto curves = utility_threshold_curves(cfg, 4);
    const auto& p = curves[0];
    const auto& p1 = curves[1];
    const auto& p2 = curves[2];
    EXPECT_EQ(p.thresholds.size(), 201u);
    EXPECT_NEAR(p.peak_threshold(), 0.5, 0.05);
    EXPECT_NEAR(p1.peak_threshold(), 1.0 / (1.0 + std::exp(-1.0)), 0.05);
    EXPECT_GT(p1.peak_threshold(), p.peak_threshold());
    EXPECT_LT(p2.peak_value(), p.peak_value());
    for (const auto& c : curves)
        for (std::size_t g = 0; g < c.thresholds.size(); ++g) EXPECT_LE(c.low[g], c.high[g]);
}

TEST(ThresholdCurves, NeedTwoRealizations) {
    EXPECT_THROW(utility_threshold_curves(small_config(100, 1), 1), ValidationError);
}
