#pragma once

// Subcommands of the utrust tool. Each command reads its inputs, writes a
// structured JSON report plus flat CSV tables into the output directory and
// returns the JSON document. Reports carry a RunManifest and no timestamps,
// so identical invocations produce identical bytes.

#include "../core.hpp"
#include "../learners.hpp"
#include "../metrics.hpp"
#include "../ranking.hpp"
#include "../simlab.hpp"
#include "../stats.hpp"
#include "../utility.hpp"
#include "io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace utrust::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::uint64_t seed = 7;
    unsigned threads = 1;
    fs::path out_dir = "utrust-out";
};

namespace detail {

inline json manifest_base(const char* command, const GlobalOptions& g, json config) {
    RunManifest m;
    m.command = command;
    m.config = std::move(config);
    m.config["threads"] = g.threads;
    m.seeds["seed"] = g.seed;
    return m.to_json();
}

inline void add_digest(json& manifest, const fs::path& p) { manifest["input_digests"][p.string()] = file_digest(p); }

inline std::string model_name(const fs::path& p) { return p.stem().string(); }

inline std::vector<std::string> model_names(const std::vector<fs::path>& inputs, const std::vector<std::string>& names) {
    if (!names.empty() && names.size() != inputs.size())
        throw ValidationError("--name must be given once per input");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) out.push_back(names.empty() ? model_name(inputs[i]) : names[i]);
    return out;
}

inline json interval_json(const Interval& iv) { return {{"low", iv.low}, {"high", iv.high}, {"level", iv.level}}; }

inline double replicate_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    return sem(v) * std::sqrt(static_cast<double>(v.size()));
}

}  // namespace detail

// ============================================================================
// evaluate
// ============================================================================

struct EvaluateOptions {
    fs::path input;
    std::string utility = "zero-one";
    std::size_t bins = kDefaultCalibrationBins;
    std::size_t bootstrap = 1000;  ///< 0 disables intervals
};

/// All metrics, curves and (optionally) bootstrap intervals for one model.
inline EvalReport build_eval_report(const LabeledScores& data, const CostCoefficients& coeffs, std::size_t bins) {
    EvalReport r;
    r.metrics["auc"] = auc_rank(data);
    r.metrics["brier"] = brier(data);
    r.metrics["accuracy"] = accuracy(data, DecisionRule{0.5});
    const auto cal = calibration_curve(data, bins);
    r.metrics["ece"] = ece(cal);
    r.metrics["net_trust"] = net_trust(data);
    const auto uc = utility_curve(data, coeffs);
    r.metrics["u_max"] = uc.u_max;
    r.metrics["argmax_threshold"] = uc.argmax_threshold;

    r.curves["roc"] = roc_points(data);
    Curve cc;
    for (const auto& b : cal.bins) cc.emplace_back(b.mean_predicted, b.observed_frequency);
    r.curves["calibration"] = cc;
    Curve u;
    for (const auto& p : uc.points) u.emplace_back(p.threshold, p.utility);
    r.curves["utility"] = u;
    return r;
}

inline std::vector<MetricSpec> interval_metrics(const CostCoefficients& coeffs, std::size_t bins) {
    return {MetricSpec::auc(), MetricSpec::brier(), MetricSpec::accuracy(), MetricSpec::ece(bins),
            MetricSpec::net_trust(), MetricSpec::u_max(coeffs)};
}

inline json cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o) {
    const auto data = read_scores(o.input);
    const auto spec = UtilitySpec::parse(o.utility);
    const auto coeffs = spec.resolve(data);
    auto report = build_eval_report(data, coeffs, o.bins);

    json doc;
    doc["manifest"] = detail::manifest_base(
        "evaluate", g, {{"input", o.input.string()}, {"utility", o.utility}, {"bins", o.bins}, {"bootstrap", o.bootstrap}});
    detail::add_digest(doc["manifest"], o.input);
    doc["n"] = data.size();
    doc["positives"] = data.positives();
    doc["utility"] = spec.name();
    if (!coeffs.contextual()) doc["bayes_threshold"] = bayes_threshold(coeffs);
    const auto c = confusion_at(data, DecisionRule{report.metrics["argmax_threshold"]});
    doc["confusion_at_argmax"] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};

    if (o.bootstrap > 0) {
        BootstrapConfig bc;
        bc.replicates = o.bootstrap;
        bc.seed = g.seed;
        bc.threads = g.threads;
        json se = json::object();
        for (const auto& m : interval_metrics(coeffs, o.bins)) {
            const auto res = bootstrap_ci(data, m, bc);
            report.intervals[m.name() + "_68"] = res.interval(BootstrapConfig::kLevel68);
            report.intervals[m.name() + "_95"] = res.interval(BootstrapConfig::kLevel95);
            se[m.name()] = detail::replicate_sd(res.values);
            if (res.redraws) doc["bootstrap_redraws"][m.name()] = res.redraws;
        }
        doc["bootstrap_se"] = se;
    }

    if (data.reference_scores) {
        const auto& ref = *data.reference_scores;
        json rj;
        rj["properly_ranked"] = check_properly_ranked(data.scores, ref);
        if (data.group) rj["groupwise_properly_ranked"] = check_groupwise_properly_ranked(data.scores, ref, *data.group);
        const auto ref_data = data.with_scores(ref);
        rj["auc"] = auc_rank(ref_data);
        rj["u_max"] = max_utility(ref_data, coeffs);
        rj["u_max_gap"] = rj["u_max"].get<double>() - report.metrics["u_max"];
        doc["reference"] = rj;
    }
    report.check();
    doc.update(report_json(report));

    CsvWriter roc({"fpr", "tpr"});
    for (const auto& [x, y] : report.curves["roc"]) roc.row({format_number(x), format_number(y)});
    CsvWriter cal({"bin", "mean_predicted", "observed_frequency", "count"});
    for (const auto& b : calibration_curve(data, o.bins).bins)
        cal.row({std::to_string(b.index), format_number(b.mean_predicted), format_number(b.observed_frequency),
                 std::to_string(b.count)});
    CsvWriter util({"threshold", "utility"});
    for (const auto& [x, y] : report.curves["utility"]) util.row({format_number(x), format_number(y)});
    write_json(g.out_dir / "report.json", doc);
    write_text(g.out_dir / "roc.csv", roc.str());
    write_text(g.out_dir / "calibration.csv", cal.str());
    write_text(g.out_dir / "utility.csv", util.str());
    return doc;
}

// ============================================================================
// compare
// ============================================================================

struct CompareOptions {
    std::vector<fs::path> inputs;
    std::vector<std::string> names;
    std::string utility = "zero-one";
    std::size_t bins = kDefaultCalibrationBins;
    std::size_t bootstrap = 1000;  ///< 0 disables intervals and paired tests
};

inline json cmd_compare(const GlobalOptions& g, const CompareOptions& o) {
    if (o.inputs.size() < 2) throw ValidationError("compare requires >= 2 models");
    const auto names = detail::model_names(o.inputs, o.names);
    const auto spec = UtilitySpec::parse(o.utility);
    std::vector<LabeledScores> data;
    std::vector<CostCoefficients> coeffs;
    for (const auto& p : o.inputs) {
        data.push_back(read_scores(p));
        if (data.back().labels != data.front().labels)
            throw ValidationError("label mismatch between '" + o.inputs.front().string() + "' and '" + p.string() + "'");
        coeffs.push_back(spec.resolve(data.back()));
    }

    json doc;
    doc["manifest"] = detail::manifest_base("compare", g,
                                            {{"inputs", [&] {
                                                  json a = json::array();
                                                  for (const auto& p : o.inputs) a.push_back(p.string());
                                                  return a;
                                              }()},
                                             {"names", names},
                                             {"utility", o.utility},
                                             {"bins", o.bins},
                                             {"bootstrap", o.bootstrap}});
    for (const auto& p : o.inputs) detail::add_digest(doc["manifest"], p);
    doc["utility"] = spec.name();
    doc["n"] = data.front().size();

    const std::vector<std::string> measures{"auc", "accuracy", "brier", "net_trust", "ece", "u_max"};
    BootstrapConfig bc;
    bc.replicates = std::max<std::size_t>(o.bootstrap, BootstrapConfig::kMinReplicates);
    bc.seed = g.seed;
    bc.threads = g.threads;

    json models = json::object();
    CsvWriter long_table({"model", "measure", "value", "se", "low68", "high68", "low95", "high95"});
    std::map<std::string, std::vector<double>> values;  // measure -> per model
    for (std::size_t m = 0; m < data.size(); ++m) {
        json mj;
        for (const auto& spec_m : interval_metrics(coeffs[m], o.bins)) {
            const auto name = spec_m.name();
            json entry;
            const double v = spec_m.evaluate(data[m]);
            entry["value"] = v;
            values[name].push_back(v);
            std::vector<std::string> row{names[m], name, format_number(v)};
            if (o.bootstrap > 0) {
                const auto res = bootstrap_ci(data[m], spec_m, bc);
                const auto i68 = res.interval(BootstrapConfig::kLevel68);
                const auto i95 = res.interval(BootstrapConfig::kLevel95);
                const double se = detail::replicate_sd(res.values);
                entry["se"] = se;
                entry["interval_68"] = detail::interval_json(i68);
                entry["interval_95"] = detail::interval_json(i95);
                for (double x : {se, i68.low, i68.high, i95.low, i95.high}) row.push_back(format_number(x));
            } else {
                row.insert(row.end(), 5, "");
            }
            mj[name] = entry;
            long_table.row(std::move(row));
        }
        models[names[m]] = mj;
    }
    doc["models"] = models;

    json winners;
    for (const auto& measure : measures) {
        const auto& v = values[measure];
        const bool lower_better = measure == "brier" || measure == "ece";
        std::size_t best = 0;
        for (std::size_t m = 1; m < v.size(); ++m)
            if (lower_better ? v[m] < v[best] : v[m] > v[best]) best = m;
        winners[measure] = names[best];
    }
    doc["winners"] = winners;

    json tests = json::array();
    if (o.bootstrap > 0) {
        for (std::size_t a = 0; a < data.size(); ++a)
            for (std::size_t b = a + 1; b < data.size(); ++b) {
                const auto t = paired_umax_test(data[a], data[b], coeffs[a], bc);
                tests.push_back({{"a", names[a]},
                                 {"b", names[b]},
                                 {"diff", t.diff},
                                 {"low", t.low},
                                 {"high", t.high},
                                 {"level", t.level},
                                 {"p_value", t.p_value}});
            }
    }
    doc["paired_umax_tests"] = tests;

    std::vector<std::string> header{"measure"};
    header.insert(header.end(), names.begin(), names.end());
    CsvWriter wide(header);
    for (const auto& measure : measures) {
        std::vector<std::string> row{measure};
        for (double v : values[measure]) row.push_back(format_number(v));
        wide.row(std::move(row));
    }
    write_json(g.out_dir / "compare.json", doc);
    write_text(g.out_dir / "table.csv", wide.str());
    write_text(g.out_dir / "table_long.csv", long_table.str());
    return doc;
}

// ============================================================================
// simulate
// ============================================================================

struct SimulateOptions {
    std::size_t n = 15000;
    std::size_t realizations = 400;
    double utility_c = 1.0;
    std::size_t bins = kDefaultCalibrationBins;
};

inline json band_json(const PercentileBand& b) { return {{"p16", b.low}, {"p50", b.mid}, {"p84", b.high}}; }

inline std::string curve_bands_csv(const std::array<ThresholdCurveBands, 3>& curves) {
    std::vector<std::string> header{"threshold"};
    for (const auto& c : curves)
        for (const char* s : {"_mean", "_p16", "_p84"}) header.push_back(c.name + s);
    CsvWriter w(header);
    for (std::size_t g = 0; g < curves[0].thresholds.size(); ++g) {
        std::vector<std::string> row{format_number(curves[0].thresholds[g])};
        for (const auto& c : curves)
            for (double v : {c.mean[g], c.low[g], c.high[g]}) row.push_back(format_number(v));
        w.row(std::move(row));
    }
    return w.str();
}

/// Emits the six study panels: calibration bands, 0-1 and U[c] utility
/// bands over thresholds, and per-realization Brier/accuracy/NetTrust.
inline json cmd_simulate(const GlobalOptions& g, const SimulateOptions& o) {
    SimStudyConfig cfg;
    cfg.n_samples = o.n;
    cfg.n_realizations = o.realizations;
    cfg.master_seed = g.seed;
    cfg.utility = uc_family(o.utility_c);
    cfg.calibration_bins = o.bins;
    cfg.threads = g.threads;
    cfg.check();
    const auto summary = run_study(cfg);
    const auto curve_count = std::max<std::size_t>(2, o.realizations);
    const auto zero_one = utility_threshold_curves(cfg, curve_count, CostCoefficients::zero_one());
    const auto general = utility_threshold_curves(cfg, curve_count, cfg.utility);

    json doc;
    doc["manifest"] = detail::manifest_base(
        "simulate", g, {{"n", o.n}, {"realizations", o.realizations}, {"utility_c", o.utility_c}, {"bins", o.bins}});
    doc["normal_method"] = kNormalMethod;
    doc["general_utility"] = "c:" + format_number(o.utility_c);
    json cls = json::object();
    for (const auto& c : summary.classifiers) {
        json cj;
        for (const auto& [metric, band] : c.bands) cj["bands"][metric] = band_json(band);
        cls[c.name] = cj;
    }
    doc["classifiers"] = cls;
    auto count_true = [](const std::vector<bool>& v) { return static_cast<std::size_t>(std::count(v.begin(), v.end(), true)); };
    doc["properly_ranked_vs_bayes"] = {{"properly_ranked", count_true(summary.pr_properly_ranked)},
                                       {"calibrated", count_true(summary.cal_properly_ranked)},
                                       {"realizations", summary.pr_properly_ranked.size()}};
    for (std::size_t c = 0; c < 3; ++c) {
        doc["utility_peaks"]["zero_one"][zero_one[c].name] = {{"threshold", zero_one[c].peak_threshold()},
                                                               {"mean_utility", zero_one[c].peak_value()}};
        doc["utility_peaks"]["general"][general[c].name] = {{"threshold", general[c].peak_threshold()},
                                                             {"mean_utility", general[c].peak_value()}};
    }

    CsvWriter cal({"classifier", "bin", "mean_predicted", "observed_p16", "observed_p50", "observed_p84", "realizations"});
    for (const auto& c : summary.classifiers)
        for (const auto& b : c.calibration)
            cal.row({c.name, std::to_string(b.bin), format_number(b.mean_predicted), format_number(b.observed.low),
                     format_number(b.observed.mid), format_number(b.observed.high), std::to_string(b.realizations)});
    std::vector<std::string> metric_names;
    for (const auto& [name, vals] : summary.classifiers[0].values) metric_names.push_back(name);
    std::vector<std::string> header{"realization", "classifier"};
    header.insert(header.end(), metric_names.begin(), metric_names.end());
    CsvWriter dist(header);
    for (std::size_t r = 0; r < o.realizations; ++r)
        for (const auto& c : summary.classifiers) {
            std::vector<std::string> row{std::to_string(r), c.name};
            for (const auto& m : metric_names) row.push_back(format_number(c.values.at(m)[r]));
            dist.row(std::move(row));
        }

    write_json(g.out_dir / "summary.json", doc);
    write_text(g.out_dir / "calibration.csv", cal.str());
    write_text(g.out_dir / "utility_zero_one.csv", curve_bands_csv(zero_one));
    write_text(g.out_dir / "utility_general.csv", curve_bands_csv(general));
    write_text(g.out_dir / "distributions.csv", dist.str());
    return doc;
}

// ============================================================================
// sweep-c
// ============================================================================

struct SweepCOptions {
    std::vector<fs::path> inputs;
    std::vector<std::string> names;
    std::vector<double> c_grid{0.0, 0.5, 1.0, 2.0};
    std::size_t repeats = 20;  ///< joint bootstrap resamples
};

/// Mean u_max and SEM per (model, c) over joint row resamples, plus the
/// full-sample value.
inline json cmd_sweep_c(const GlobalOptions& g, const SweepCOptions& o) {
    if (o.inputs.empty()) throw ValidationError("sweep-c requires at least one input");
    if (o.c_grid.empty()) throw ValidationError("empty c grid");
    if (o.repeats < 1) throw ValidationError("repeats must be >= 1");
    for (double c : o.c_grid)
        if (!(c >= 0.0)) throw ValidationError("c values must be >= 0");
    const auto names = detail::model_names(o.inputs, o.names);
    std::vector<LabeledScores> data;
    for (const auto& p : o.inputs) {
        data.push_back(read_scores(p));
        if (data.back().labels != data.front().labels)
            throw ValidationError("label mismatch between '" + o.inputs.front().string() + "' and '" + p.string() + "'");
    }
    const auto n = data.front().size();
    // [model][c][repeat]
    std::vector<std::vector<std::vector<double>>> u(data.size(),
                                                    std::vector<std::vector<double>>(o.c_grid.size(),
                                                                                     std::vector<double>(o.repeats)));
    utrust::detail::parallel_for(o.repeats, g.threads, [&](std::size_t r) {
        Rng rng(g.seed, r);
        const auto rows = utrust::detail::draw_rows(rng, n);
        for (std::size_t m = 0; m < data.size(); ++m) {
            const auto sub = data[m].subset(rows);
            for (std::size_t j = 0; j < o.c_grid.size(); ++j) u[m][j][r] = max_utility(sub, uc_family(o.c_grid[j]));
        }
    });

    json doc;
    doc["manifest"] = detail::manifest_base(
        "sweep-c", g, {{"inputs", [&] {
                            json a = json::array();
                            for (const auto& p : o.inputs) a.push_back(p.string());
                            return a;
                        }()},
                       {"names", names},
                       {"c_grid", o.c_grid},
                       {"repeats", o.repeats}});
    for (const auto& p : o.inputs) detail::add_digest(doc["manifest"], p);
    CsvWriter table({"model", "c", "point_u_max", "mean_u_max", "sem_u_max"});
    json rows = json::array();
    for (std::size_t m = 0; m < data.size(); ++m)
        for (std::size_t j = 0; j < o.c_grid.size(); ++j) {
            const double point = max_utility(data[m], uc_family(o.c_grid[j]));
            const auto ms = mean_sem(u[m][j]);
            rows.push_back({{"model", names[m]},
                            {"c", o.c_grid[j]},
                            {"point_u_max", point},
                            {"mean_u_max", ms.mean},
                            {"sem_u_max", optional_number(ms.sem)}});
            table.row({names[m], format_number(o.c_grid[j]), format_number(point), format_number(ms.mean),
                       ms.sem ? format_number(*ms.sem) : ""});
        }
    doc["rows"] = rows;
    write_json(g.out_dir / "sweep_c.json", doc);
    write_text(g.out_dir / "sweep_c.csv", table.str());
    return doc;
}

// ============================================================================
// tune
// ============================================================================

struct TuneCommandOptions {
    fs::path input;
    std::string label_column = "label";
    std::vector<std::size_t> k_grid{5, 25, 50, 100, 150, 200};
    std::size_t folds = 20;
    std::size_t repeats = 1;
    double train_fraction = 0.7;
    std::string utility = "zero-one";
};

inline json mean_sem_json(const MeanSem& m) { return {{"mean", m.mean}, {"sem", optional_number(m.sem)}}; }

/// Cross-validated k for kNN chosen by AUC and by accuracy, then compared by
/// test-set maximum utility over repeated splits.
inline json cmd_tune(const GlobalOptions& g, const TuneCommandOptions& o) {
    const auto fset = read_features(o.input, o.label_column);
    TuneOptions t;
    t.k_grid = o.k_grid;
    t.folds = o.folds;
    t.repeats = o.repeats;
    t.train_fraction = o.train_fraction;
    t.seed = g.seed;
    t.utility = UtilitySpec::parse(o.utility);
    t.threads = g.threads;
    if (t.utility.kind == UtilitySpec::Kind::Columns) throw ValidationError("tune does not support --utility columns");
    if (t.utility.kind == UtilitySpec::Kind::AgeContextual && !fset.age)
        throw ValidationError("--utility age-contextual needs an 'age' column");
    const auto rep = tune_and_compare(fset.features, fset.labels, fset.age, t);

    json doc;
    doc["manifest"] = detail::manifest_base("tune", g,
                                            {{"input", o.input.string()},
                                             {"label_column", o.label_column},
                                             {"k_grid", o.k_grid},
                                             {"folds", o.folds},
                                             {"repeats", o.repeats},
                                             {"train_fraction", o.train_fraction},
                                             {"utility", o.utility}});
    detail::add_digest(doc["manifest"], o.input);
    doc["features"] = fset.features.names;
    doc["n"] = fset.labels.size();
    json reps = json::array();
    for (const auto& r : rep.repeats)
        reps.push_back({{"k_auc", r.k_auc},
                        {"k_accuracy", r.k_accuracy},
                        {"u_max_auc", r.u_max_auc},
                        {"u_max_accuracy", r.u_max_accuracy},
                        {"skipped_auc_folds", r.cv.skipped_auc_folds}});
    doc["repeats"] = reps;
    doc["u_max_auc_selected"] = mean_sem_json(rep.u_max_auc);
    doc["u_max_accuracy_selected"] = mean_sem_json(rep.u_max_accuracy);
    doc["u_max_difference"] = mean_sem_json(rep.u_max_difference);
    doc["selected_k"] = {{"auc", rep.repeats.front().k_auc}, {"accuracy", rep.repeats.front().k_accuracy}};

    CsvWriter cv({"k", "mean_cv_auc", "sem_cv_auc", "mean_cv_accuracy", "sem_cv_accuracy"});
    for (std::size_t j = 0; j < rep.ks.size(); ++j) {
        const auto& a = rep.cv_auc[j];
        const auto& c = rep.cv_accuracy[j];
        cv.row({std::to_string(rep.ks[j]), format_number(a.mean), a.sem ? format_number(*a.sem) : "",
                format_number(c.mean), c.sem ? format_number(*c.sem) : ""});
    }
    CsvWriter curves({"threshold", "auc_selected_mean", "auc_selected_sem", "accuracy_selected_mean",
                      "accuracy_selected_sem"});
    for (std::size_t i = 0; i < rep.thresholds.size(); ++i) {
        const auto& a = rep.curve_auc[i];
        const auto& c = rep.curve_accuracy[i];
        curves.row({format_number(rep.thresholds[i]), format_number(a.mean), a.sem ? format_number(*a.sem) : "",
                    format_number(c.mean), c.sem ? format_number(*c.sem) : ""});
    }
    write_json(g.out_dir / "tune.json", doc);
    write_text(g.out_dir / "cv.csv", cv.str());
    write_text(g.out_dir / "utility_curves.csv", curves.str());
    return doc;
}

// ============================================================================
// generate
// ============================================================================

struct GenerateOptions {
    std::size_t n = 3000;
    fs::path output;
    bool with_age = false;
};

/// Synthetic feature file x1,x2,x3,label from the three-normal generative
/// model; optional integer age column in [18, 90] from an independent stream.
inline void cmd_generate(const GlobalOptions& g, const GenerateOptions& o) {
    SimStudyConfig cfg;
    cfg.n_samples = o.n;
    cfg.master_seed = g.seed;
    cfg.n_realizations = 1;
    const auto r = generate_realization(cfg, 0);
    std::vector<std::string> header{"x1", "x2", "x3"};
    if (o.with_age) header.push_back("age");
    header.push_back("label");
    CsvWriter w(header);
    Rng age_rng(g.seed, 0xA9Eull);
    for (std::size_t i = 0; i < o.n; ++i) {
        std::vector<std::string> row{format_number(r.x1[i]), format_number(r.x2[i]), format_number(r.x3[i])};
        if (o.with_age) row.push_back(std::to_string(18 + age_rng.below(73)));
        row.push_back(std::to_string(r.labels[i]));
        w.row(std::move(row));
    }
    write_text(o.output, w.str());
}

// ============================================================================
// equity
// ============================================================================

struct EquityOptions {
    fs::path input;
    std::size_t k = 0;
    fs::path gamma;
    bool oracle = false;
};

inline std::vector<double> read_number_list(const fs::path& path) {
    const auto text = read_file(path);
    std::vector<double> out;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size())
            throw ValidationError(path.string() + ": not a number '" + token + "'");
        out.push_back(v);
        token.clear();
    };
    for (char ch : text) {
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == ' ' || ch == '\t' || ch == ';') flush();
        else token += ch;
    }
    flush();
    return out;
}

inline json selection_json(const SelectionResult& s) {
    json profile = json::array();
    for (const auto& p : s.profile) profile.push_back(optional_number(p));
    return {{"chosen", s.chosen}, {"k1", s.k1}, {"total_utility", s.total_utility}, {"profile", profile}};
}

/// Top-K selection with a group-1 representation bonus. Benefit comes from a
/// `benefit` column when present, otherwise from `reference_score`.
inline json cmd_equity(const GlobalOptions& g, const EquityOptions& o) {
    const auto table = read_table(o.input);
    const auto data = scores_from_table(table);
    if (!data.reference_scores) throw ValidationError("equity needs a reference_score column");
    if (!data.group) throw ValidationError("equity needs a group column");
    EquityUtilitySpec spec;
    spec.benefit = table.column("benefit") ? table.numeric_column(*table.column("benefit")) : *data.reference_scores;
    spec.gamma_table = read_number_list(o.gamma);
    const auto sel = equity_select(*data.reference_scores, *data.group, o.k, spec);

    json doc;
    doc["manifest"] = detail::manifest_base(
        "equity", g, {{"input", o.input.string()}, {"k", o.k}, {"gamma", o.gamma.string()}, {"oracle", o.oracle}});
    detail::add_digest(doc["manifest"], o.input);
    detail::add_digest(doc["manifest"], o.gamma);
    doc["selection"] = selection_json(sel);
    if (o.oracle) {
        const auto bf = equity_brute_force(*data.reference_scores, *data.group, o.k, spec);
        doc["oracle"] = selection_json(bf);
        doc["oracle_match"] = bf.total_utility == sel.total_utility && bf.chosen == sel.chosen;
    }
    write_json(g.out_dir / "equity.json", doc);
    return doc;
}

}  // namespace utrust::cli
