#include <utrust/cli/commands.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace utrust;
using namespace utrust::cli;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test.
class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / "utrust-test" / (std::string(info->test_suite_name()) + "." + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) const {
        const auto p = dir_ / name;
        write_text(p, text);
        return p;
    }

    GlobalOptions global(const std::string& sub) const {
        GlobalOptions g;
        g.out_dir = dir_ / sub;
        return g;
    }

    fs::path dir_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(UTRUST_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseTable, CommaAndTab) {
    const auto a = parse_table("score,label\n0.5,1\n0.25,0\n");
    const auto b = parse_table("score\tlabel\n0.5\t1\n0.25\t0\n");
    EXPECT_EQ(a.header, b.header);
    EXPECT_EQ(a.rows, b.rows);
    EXPECT_EQ(scores_from_table(a).scores, (std::vector<double>{0.5, 0.25}));
}

TEST(ParseTable, DiagnosticsNameLineAndColumn) {
    try {
        scores_from_table(parse_table("score,label\n0.5,1\nabc,0\n", "f.csv"));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'score'"), std::string::npos) << msg;
    }
    try {
        scores_from_table(parse_table("score,label\n0.5,2\n", "f.csv"));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("'label'"), std::string::npos);
    }
    try {
        scores_from_table(parse_table("score,label\n1.5,1\n", "f.csv"));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
    }
    EXPECT_THROW(scores_from_table(parse_table("score\n0.5\n")), ValidationError);
    EXPECT_THROW(scores_from_table(parse_table("score,label\n0.5\n")), ValidationError);
    EXPECT_THROW(scores_from_table(parse_table("score,label,a11\n0.5,1,1\n")), ValidationError);
}

TEST(ParseTable, OptionalColumns) {
    const auto d = scores_from_table(parse_table(
        "score,label,group,reference_score,age,a11,a01,a10,a00\n0.5,1,0,0.4,30,1,2,0.5,1\n0.2,0,1,0.1,70,1,1,1,1\n"));
    EXPECT_EQ(*d.group, (std::vector<int>{0, 1}));
    EXPECT_EQ(*d.reference_scores, (std::vector<double>{0.4, 0.1}));
    EXPECT_EQ(d.context.at("age"), (std::vector<double>{30, 70}));
    ASSERT_TRUE(d.coefficients.has_value());
    EXPECT_EQ(d.coefficients->at(0), (CostWeights{1, 2, 0.5, 1}));
}

TEST(RoundTrip, FifteenSignificantDigits) {
    Rng rng(61);
    LabeledScores d;
    for (int i = 0; i < 500; ++i) {
        d.scores.push_back(rng.uniform());
        d.labels.push_back(static_cast<int>(rng.below(2)));
    }
    d.reference_scores = d.scores;
    d.context["age"] = std::vector<double>(500, 42.5);
    const auto back = scores_from_table(parse_table(scores_to_csv(d)));
    for (std::size_t i = 0; i < d.size(); ++i) {
        char a[32], b[32];
        std::snprintf(a, sizeof a, "%.15g", d.scores[i]);
        std::snprintf(b, sizeof b, "%.15g", back.scores[i]);
        EXPECT_STREQ(a, b);
        EXPECT_EQ(back.scores[i], d.scores[i]);  // %.17g is exact
    }
    EXPECT_EQ(back.labels, d.labels);
    EXPECT_EQ(scores_to_csv(back), scores_to_csv(d));
}

TEST(Features, LabelColumnAndAge) {
    const auto fs_ = features_from_table(parse_table("x1,age,y\n1,30,1\n2,40,0\n"), "y");
    EXPECT_EQ(fs_.features.names, (std::vector<std::string>{"x1", "age"}));
    EXPECT_EQ(fs_.labels, (std::vector<int>{1, 0}));
    EXPECT_EQ(*fs_.age, (std::vector<double>{30, 40}));
    EXPECT_THROW(features_from_table(parse_table("x1,label\nnan,1\n")), ValidationError);
}

TEST(Digest, StableFnv) {
    EXPECT_EQ(digest(""), "cbf29ce484222325");
    EXPECT_EQ(digest("a"), "af63dc4c8601ec8c");
}

TEST_F(CliTest, EvaluatePerfectFile) {
    const auto in = write("perfect.csv", "score,label\n0.9,1\n0.1,0\n");
    EvaluateOptions o;
    o.input = in;
    o.bootstrap = 0;
    const auto doc = cmd_evaluate(global("out"), o);
    EXPECT_EQ(doc["metrics"]["auc"].get<double>(), 1.0);
    EXPECT_EQ(doc["metrics"]["u_max"].get<double>(), 1.0);
    for (const char* f : {"report.json", "roc.csv", "calibration.csv", "utility.csv"})
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    EXPECT_FALSE(doc.contains("reference"));
}

TEST_F(CliTest, EvaluateReferenceAndAge) {
    const auto in = write("ref.csv",
                          "score,label,reference_score,group,age\n"
                          "0.9,1,0.8,0,20\n0.3,0,0.2,1,80\n0.6,1,0.7,0,50\n0.4,0,0.3,1,10\n");
    EvaluateOptions o;
    o.input = in;
    o.utility = "age-contextual";
    o.bootstrap = 100;
    const auto doc = cmd_evaluate(global("out"), o);
    ASSERT_TRUE(doc.contains("reference"));
    EXPECT_TRUE(doc["reference"]["properly_ranked"].get<bool>());
    EXPECT_TRUE(doc["reference"]["groupwise_properly_ranked"].get<bool>());
    EXPECT_EQ(doc["reference"]["u_max_gap"].get<double>(), 0.0);
    EXPECT_EQ(doc["utility"], "age-contextual");
    EXPECT_FALSE(doc.contains("bayes_threshold"));
    EXPECT_TRUE(doc["intervals"].contains("u_max_95"));

    // age-contextual utility equals the hand computation at the argmax
    auto data = read_scores(in);
    EXPECT_EQ(doc["metrics"]["u_max"].get<double>(), max_utility(data, age_contextual_coeffs(data)));
}

TEST_F(CliTest, CompareNeedsTwoModels) {
    CompareOptions o;
    o.inputs = {write("a.csv", "score,label\n0.9,1\n0.1,0\n")};
    try {
        cmd_compare(global("out"), o);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("compare requires >= 2 models"), std::string::npos);
    }
}

TEST_F(CliTest, CompareLabelMismatch) {
    CompareOptions o;
    o.inputs = {write("a.csv", "score,label\n0.9,1\n0.1,0\n"), write("b.csv", "score,label\n0.9,0\n0.1,1\n")};
    EXPECT_THROW(cmd_compare(global("out"), o), ValidationError);
}

TEST_F(CliTest, CompareMonotonePairAndTableShape) {
    SimStudyConfig cfg;
    cfg.n_samples = 600;
    const auto r = generate_realization(cfg, 0);
    const auto pa = write("bayes.csv", scores_to_csv(r.labeled(SimClassifier::Bayes)));
    const auto pb = write("properly_ranked.csv", scores_to_csv(r.labeled(SimClassifier::ProperlyRanked)));
    const auto pc = write("calibrated.csv", scores_to_csv(r.labeled(SimClassifier::Calibrated)));
    CompareOptions o;
    o.inputs = {pa, pb, pc};
    o.utility = "c:1";
    o.bootstrap = 100;
    const auto doc = cmd_compare(global("out"), o);
    const auto& m = doc["models"];
    EXPECT_EQ(m["bayes"]["u_max"]["value"].get<double>(), m["properly_ranked"]["u_max"]["value"].get<double>());
    EXPECT_NEAR(m["bayes"]["auc"]["value"].get<double>(), m["properly_ranked"]["auc"]["value"].get<double>(), 1e-12);
    ASSERT_EQ(doc["paired_umax_tests"].size(), 3u);
    EXPECT_EQ(doc["paired_umax_tests"][0]["diff"].get<double>(), 0.0);
    EXPECT_EQ(doc["paired_umax_tests"][0]["p_value"].get<double>(), 1.0);

    // wide table: header + 6 measures, one column per model
    std::istringstream table(slurp(dir_ / "out" / "table.csv"));
    std::string line;
    std::getline(table, line);
    EXPECT_EQ(line, "measure,bayes,properly_ranked,calibrated");
    int rows = 0;
    while (std::getline(table, line)) ++rows;
    EXPECT_EQ(rows, 6);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "table_long.csv"));
}

TEST_F(CliTest, SimulateIsByteIdentical) {
    SimulateOptions o;
    o.n = 500;
    o.realizations = 3;
    cmd_simulate(global("a"), o);
    auto g = global("b");
    g.threads = 2;
    cmd_simulate(g, o);
    for (const char* f : {"summary.json", "calibration.csv", "utility_zero_one.csv", "utility_general.csv",
                          "distributions.csv"}) {
        const auto a = slurp(dir_ / "a" / f);
        auto b = slurp(dir_ / "b" / f);
        if (std::string(f) == "summary.json") {
            // manifests differ only in the recorded thread count
            auto ja = json::parse(a), jb = json::parse(b);
            ja.erase("manifest");
            jb.erase("manifest");
            EXPECT_EQ(ja, jb);
        } else {
            EXPECT_EQ(a, b) << f;
        }
    }
    cmd_simulate(global("a2"), o);
    EXPECT_EQ(slurp(dir_ / "a" / "summary.json"), slurp(dir_ / "a2" / "summary.json"));
}

TEST_F(CliTest, SweepCShapeAndMonotonePair) {
    SimStudyConfig cfg;
    cfg.n_samples = 400;
    const auto r = generate_realization(cfg, 1);
    SweepCOptions o;
    o.inputs = {write("p.csv", scores_to_csv(r.labeled(SimClassifier::Bayes))),
                write("p1.csv", scores_to_csv(r.labeled(SimClassifier::ProperlyRanked)))};
    o.repeats = 5;
    const auto doc = cmd_sweep_c(global("out"), o);
    const auto& rows = doc["rows"];
    ASSERT_EQ(rows.size(), 8u);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(rows[j]["point_u_max"], rows[4 + j]["point_u_max"]);
        EXPECT_EQ(rows[j]["mean_u_max"], rows[4 + j]["mean_u_max"]);
        EXPECT_EQ(rows[j]["sem_u_max"], rows[4 + j]["sem_u_max"]);
    }
    EXPECT_EQ(rows[0]["c"].get<double>(), 0.0);
    EXPECT_EQ(rows[0]["point_u_max"].get<double>(), max_utility(r.labeled(SimClassifier::Bayes), CostCoefficients::zero_one()));
    o.c_grid = {-1.0};
    EXPECT_THROW(cmd_sweep_c(global("out"), o), ValidationError);
}

TEST_F(CliTest, GenerateAndTune) {
    GenerateOptions go;
    go.n = 300;
    go.with_age = true;
    go.output = dir_ / "features.csv";
    cmd_generate(global("gen"), go);
    const auto fs_ = read_features(go.output);
    EXPECT_EQ(fs_.labels.size(), 300u);
    ASSERT_TRUE(fs_.age.has_value());
    for (double a : *fs_.age) {
        EXPECT_GE(a, 18.0);
        EXPECT_LE(a, 90.0);
    }

    TuneCommandOptions to;
    to.input = go.output;
    to.k_grid = {3, 9, 27};
    to.folds = 4;
    to.utility = "age-contextual";
    const auto doc = cmd_tune(global("t1"), to);
    EXPECT_TRUE(doc["u_max_auc_selected"]["sem"].is_null());
    cmd_tune(global("t2"), to);
    for (const char* f : {"cv.csv", "utility_curves.csv"}) EXPECT_EQ(slurp(dir_ / "t1" / f), slurp(dir_ / "t2" / f));
    to.utility = "columns";
    EXPECT_THROW(cmd_tune(global("t3"), to), ValidationError);
}

TEST_F(CliTest, EquityCommand) {
    const auto in = write("eq.csv",
                          "score,label,reference_score,group,benefit\n"
                          "0.1,0,0.1,0,1\n0.2,0,0.2,0,2\n0.3,1,0.3,0,3\n"
                          "0.4,0,0.4,1,4\n0.5,1,0.5,1,5\n0.6,1,0.6,1,6\n");
    EquityOptions o;
    o.input = in;
    o.k = 2;
    o.gamma = write("gamma.txt", "0, 10, 20\n");
    o.oracle = true;
    const auto doc = cmd_equity(global("out"), o);
    EXPECT_EQ(doc["selection"]["total_utility"].get<double>(), 31.0);
    EXPECT_EQ(doc["selection"]["chosen"], json({4, 5}));
    EXPECT_TRUE(doc["oracle_match"].get<bool>());

    o.k = 0;
    o.gamma = write("gamma0.txt", "0\n");
    EXPECT_TRUE(cmd_equity(global("out"), o)["selection"]["chosen"].empty());

    o.gamma = write("bad.txt", "0 x\n");
    EXPECT_THROW(cmd_equity(global("out"), o), ValidationError);
}

TEST_F(CliTest, BinaryExitCodes) {
    const auto ok = write("ok.csv", "score,label\n0.9,1\n0.1,0\n");
    const auto bad = write("bad.csv", "score,label\n1.9,1\n0.1,0\n");
    const auto single = write("single.csv", "score,label\n0.9,1\n0.1,1\n");
    const auto out = (dir_ / "out").string();
    EXPECT_EQ(run_cli("--out-dir " + out + " evaluate --bootstrap 0 --input " + ok.string()), 0);
    EXPECT_EQ(run_cli("--out-dir " + out + " evaluate --bootstrap 0 --input " + bad.string()), 2);
    EXPECT_EQ(run_cli("--out-dir " + out + " evaluate --bootstrap 0 --input " + single.string()), 3);
    EXPECT_EQ(run_cli("--out-dir " + out + " evaluate --input " + (dir_ / "missing.csv").string()), 2);
    EXPECT_EQ(run_cli("--out-dir " + out + " evaluate --utility nope --input " + ok.string()), 2);
    EXPECT_EQ(run_cli("--out-dir " + out + " compare --input " + ok.string()), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
}
