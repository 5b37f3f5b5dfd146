// utrust command-line tool.
//
// Exit codes: 0 success, 2 input validation failure, 3 statistical
// degeneracy (e.g. single-class data where AUC is needed).

#include <utrust/cli/commands.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace utrust;
using namespace utrust::cli;

constexpr int kExitValidation = 2;
constexpr int kExitDegenerate = 3;

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find(',', start), text.size());
        const auto token = text.substr(start, end - start);
        T v{};
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size())
            throw ValidationError("bad list element '" + token + "' in '" + text + "'");
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"utrust: utility-based evaluation of binary classifiers"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions global;
    std::string out_dir = global.out_dir.string();
    app.add_option("--seed", global.seed, "Master seed")->capture_default_str();
    app.add_option("--threads", global.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "Directory for reports")->capture_default_str();

    EvaluateOptions eval;
    auto* evaluate = app.add_subcommand("evaluate", "Metrics, curves and intervals for one score file");
    evaluate->add_option("--input", eval.input, "Score file (score,label[,group,reference_score,age,a11..a00])")->required();
    evaluate->add_option("--utility", eval.utility, "zero-one | c:<value> | age-contextual | columns")->capture_default_str();
    evaluate->add_option("--bins", eval.bins, "Calibration bins")->capture_default_str();
    evaluate->add_option("--bootstrap", eval.bootstrap, "Bootstrap replicates (0 disables)")->capture_default_str();

    CompareOptions cmp;
    std::vector<std::string> cmp_inputs;
    auto* compare = app.add_subcommand("compare", "Model comparison table with paired u_max tests");
    compare->add_option("--input", cmp_inputs, "Score files sharing labels (repeat)")->required();
    compare->add_option("--name", cmp.names, "Model names, one per input");
    compare->add_option("--utility", cmp.utility, "zero-one | c:<value> | age-contextual | columns")->capture_default_str();
    compare->add_option("--bins", cmp.bins, "Calibration bins")->capture_default_str();
    compare->add_option("--bootstrap", cmp.bootstrap, "Bootstrap replicates (0 disables)")->capture_default_str();

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Synthetic Bayes / properly-ranked / calibrated study");
    simulate->add_option("--n", sim.n, "Samples per realization")->capture_default_str();
    simulate->add_option("--realizations", sim.realizations, "Number of realizations")->capture_default_str();
    simulate->add_option("--utility-c", sim.utility_c, "c of the U[c] utility panel")->capture_default_str();
    simulate->add_option("--bins", sim.bins, "Calibration bins")->capture_default_str();

    SweepCOptions sweep;
    std::vector<std::string> sweep_inputs;
    std::string c_grid = "0,0.5,1,2";
    auto* sweep_c = app.add_subcommand("sweep-c", "u_max over the U[c] family");
    sweep_c->add_option("--input", sweep_inputs, "Score files sharing labels (repeat)")->required();
    sweep_c->add_option("--name", sweep.names, "Model names, one per input");
    sweep_c->add_option("--c", c_grid, "Comma-separated c values")->capture_default_str();
    sweep_c->add_option("--repeats", sweep.repeats, "Bootstrap resamples")->capture_default_str();

    TuneCommandOptions tune;
    std::string k_grid = "5,25,50,100,150,200";
    auto* tune_cmd = app.add_subcommand("tune", "kNN k selection by CV AUC vs CV accuracy, compared by utility");
    tune_cmd->add_option("--input", tune.input, "Feature file with a label column")->required();
    tune_cmd->add_option("--label-column", tune.label_column)->capture_default_str();
    tune_cmd->add_option("--k", k_grid, "Comma-separated k grid")->capture_default_str();
    tune_cmd->add_option("--folds", tune.folds)->capture_default_str();
    tune_cmd->add_option("--repeats", tune.repeats, "Random train/test splits")->capture_default_str();
    tune_cmd->add_option("--train-fraction", tune.train_fraction)->capture_default_str();
    tune_cmd->add_option("--utility", tune.utility, "zero-one | c:<value> | age-contextual")->capture_default_str();

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic feature file (x1,x2,x3[,age],label)");
    generate->add_option("--n", gen.n)->capture_default_str();
    generate->add_option("--output", gen.output)->required();
    generate->add_flag("--with-age", gen.with_age, "Add an integer age column");

    EquityOptions eq;
    auto* equity = app.add_subcommand("equity", "Top-K selection with a group representation bonus");
    equity->add_option("--input", eq.input, "File with score,label,reference_score,group[,benefit]")->required();
    equity->add_option("--k", eq.k, "Selection size")->required();
    equity->add_option("--gamma", eq.gamma, "Gamma table: K+1 nondecreasing numbers")->required();
    equity->add_flag("--oracle", eq.oracle, "Cross-check against brute-force enumeration (n <= 20)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }
    global.out_dir = out_dir;

    try {
        if (*evaluate) {
            const auto doc = cmd_evaluate(global, eval);
            std::cout << "auc " << doc["metrics"]["auc"] << "  u_max " << doc["metrics"]["u_max"] << "\n";
        } else if (*compare) {
            cmp.inputs.assign(cmp_inputs.begin(), cmp_inputs.end());
            const auto doc = cmd_compare(global, cmp);
            std::cout << "winners " << doc["winners"].dump() << "\n";
        } else if (*simulate) {
            const auto doc = cmd_simulate(global, sim);
            std::cout << "properly ranked " << doc["properly_ranked_vs_bayes"].dump() << "\n";
        } else if (*sweep_c) {
            sweep.inputs.assign(sweep_inputs.begin(), sweep_inputs.end());
            sweep.c_grid = parse_list<double>(c_grid);
            cmd_sweep_c(global, sweep);
        } else if (*tune_cmd) {
            tune.k_grid = parse_list<std::size_t>(k_grid);
            const auto doc = cmd_tune(global, tune);
            std::cout << "selected k " << doc["selected_k"].dump() << "\n";
        } else if (*generate) {
            cmd_generate(global, gen);
        } else if (*equity) {
            const auto doc = cmd_equity(global, eq);
            std::cout << "k1 " << doc["selection"]["k1"] << "  total " << doc["selection"]["total_utility"] << "\n";
            if (eq.oracle && !doc["oracle_match"].get<bool>()) {
                std::cerr << "error: selection disagrees with brute-force oracle\n";
                return 1;
            }
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
