#pragma once

// Pipeline stages behind the command-line subcommands. Each stage reads its
// inputs from the configured paths or from the output directory written by the
// previous stage, and writes plain CSV/JSON artifacts.

#include "telanom/common.hpp"
#include "telanom/csv.hpp"
#include "telanom/enet_glm.hpp"
#include "telanom/eval_tune.hpp"
#include "telanom/profiling.hpp"
#include "telanom/synthgen.hpp"
#include "telanom/tabular_prep.hpp"
#include "telanom/trip_prep.hpp"
#include "telanom/trip_store.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace telanom {

namespace fs = std::filesystem;

struct RunConfig {
    std::string trips_path;
    std::string policies_path;
    std::string out_dir = "out";
    Scheme scheme = Scheme::Global;
    Algorithm algorithm = Algorithm::Mahalanobis;
    DetectorParams detector{};
    std::optional<GridSpec> detector_grid;
    GridSpec lambdas = lambda_grid();
    GridSpec alphas = alpha_grid();
    std::size_t folds = 5;
    double split_ratio = 0.7;
    std::uint64_t seed = 42;
    unsigned jobs = 1;
    RecipeConfig recipe{};
    SolverConfig solver{};
    std::vector<std::string> models = {"baseline",          "local-mahalanobis", "local-lof",     "local-iforest",
                                       "global-mahalanobis", "global-lof",        "global-iforest"};
    SynthConfig synth{};

    std::uint64_t split_seed() const { return detail::mix_seed(seed, 1); }
    std::uint64_t fold_seed() const { return detail::mix_seed(seed, 2); }
};

// Stage seeds all derive from `seed`; `jobs` is pushed down to the stages.
inline void finalize(RunConfig& c) {
    c.recipe.seed = detail::mix_seed(c.seed, 3);
    c.detector.seed = detail::mix_seed(c.seed, 4);
    c.detector.jobs = c.jobs;
    c.synth.seed = detail::mix_seed(c.seed, 5);
    c.synth.jobs = c.jobs;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    auto get = [&](const nlohmann::json& obj, const char* key, auto& dst) {
        if (obj.contains(key)) obj.at(key).get_to(dst);
    };
    try {
        get(j, "trips", c.trips_path);
        get(j, "policies", c.policies_path);
        get(j, "out", c.out_dir);
        if (j.contains("scheme")) c.scheme = parse_scheme(j.at("scheme").get<std::string>());
        if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        get(j, "folds", c.folds);
        get(j, "split_ratio", c.split_ratio);
        get(j, "seed", c.seed);
        get(j, "jobs", c.jobs);
        get(j, "models", c.models);
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            get(d, "k_frac", c.detector.k_frac);
            get(d, "b_frac", c.detector.b_frac);
            get(d, "k", c.detector.k);
            get(d, "b", c.detector.b);
            get(d, "num_trees", c.detector.num_trees);
            get(d, "ridge_eps", c.detector.ridge_eps);
            get(d, "fallback_ridge", c.detector.fallback_ridge);
            if (d.contains("grid")) c.detector_grid = GridSpec{"value", d.at("grid").get<std::vector<double>>()};
        }
        if (j.contains("enet")) {
            const auto& e = j.at("enet");
            if (e.contains("lambdas")) c.lambdas.values = e.at("lambdas").get<std::vector<double>>();
            if (e.contains("alphas")) c.alphas.values = e.at("alphas").get<std::vector<double>>();
        }
        if (j.contains("recipe")) {
            const auto& r = j.at("recipe");
            get(r, "pool_threshold", c.recipe.pool_threshold);
            get(r, "clamp", c.recipe.clamp);
            get(r, "imputer_trees", c.recipe.imputer_trees);
            get(r, "min_leaf", c.recipe.tree.min_leaf);
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            get(s, "tol", c.solver.tol);
            get(s, "max_iter", c.solver.max_iter);
            get(s, "kkt_tol", c.solver.kkt_tol);
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            get(s, "num_vehicles", c.synth.num_vehicles);
            get(s, "min_trips", c.synth.min_trips);
            get(s, "max_trips", c.synth.max_trips);
            get(s, "fraction_routine", c.synth.fraction_routine);
            get(s, "fraction_peculiar", c.synth.fraction_peculiar);
            get(s, "peculiarity_claim_weight", c.synth.peculiarity_claim_weight);
            get(s, "base_claim_rate", c.synth.base_claim_rate);
            get(s, "trf_effect_scale", c.synth.trf_effect_scale);
            get(s, "commute_missing_rate", c.synth.commute_missing_rate);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("config: ") + e.what());
    }
    if (c.folds < 2) throw ArgumentError("config: folds must be >= 2");
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) throw ArgumentError("config: split_ratio must lie in (0,1)");
    if (c.jobs < 1) c.jobs = 1;
    c.lambdas.validate();
    c.alphas.validate();
    finalize(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DependencyError("missing config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

// --- model variants --------------------------------------------------------

struct ModelVariant {
    std::string name;
    bool baseline = true;
    Scheme scheme = Scheme::Global;
    Algorithm algorithm = Algorithm::Mahalanobis;
};

inline ModelVariant parse_model(const std::string& name) {
    if (name == "baseline") return {name, true, Scheme::Global, Algorithm::Mahalanobis};
    const auto dash = name.find('-');
    if (dash == std::string::npos) throw ArgumentError("unknown model '" + name + "'");
    return {name, false, parse_scheme(name.substr(0, dash)), parse_algorithm(name.substr(dash + 1))};
}

// --- shared data access ----------------------------------------------------

inline fs::path out_path(const RunConfig& c, const std::string& file) { return fs::path(c.out_dir) / file; }

inline void ensure_out_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec || !fs::is_directory(c.out_dir))
        throw ArgumentError("cannot create output directory '" + c.out_dir + "'");
}

inline void require_file(const fs::path& p, const std::string& stage_hint) {
    if (!fs::exists(p))
        throw DependencyError("missing artifact '" + p.string() + "'" +
                              (stage_hint.empty() ? std::string{} : " (run '" + stage_hint + "' first)"));
}

inline std::string scheme_algo_tag(Scheme s, Algorithm a) { return to_string(s) + "_" + to_string(a); }

struct Dataset {
    std::vector<TripRecord> trips;
    std::vector<PolicyRecord> policies;
    PortfolioSplit split;
    std::vector<std::string> all_vins;  // sorted
};

inline Dataset load_dataset(const RunConfig& c) {
    // Without explicit paths, the files written by `simulate` are used.
    const std::string trips = c.trips_path.empty() ? out_path(c, "trips.csv").string() : c.trips_path;
    const std::string policies = c.policies_path.empty() ? out_path(c, "policies.csv").string() : c.policies_path;
    require_file(trips, c.trips_path.empty() ? "simulate" : "");
    require_file(policies, c.policies_path.empty() ? "simulate" : "");
    Dataset d;
    d.trips = parse_trip_csv(trips);
    d.policies = parse_policy_csv(policies);
    d.split = split_by_vin(d.policies, c.split_ratio, c.split_seed());
    for (const auto& p : d.policies) d.all_vins.push_back(p.vin);
    std::sort(d.all_vins.begin(), d.all_vins.end());
    return d;
}

// Lazily computed profile features per (scheme, algorithm).
class FeatureCache {
public:
    FeatureCache(const Dataset& d, const RunConfig& c) : d_(d), c_(c) {}

    const ProfileMap& profiles(Scheme s, Algorithm a) {
        const auto key = scheme_algo_tag(s, a);
        auto it = profiles_.find(key);
        if (it == profiles_.end())
            it = profiles_.emplace(key, compute_profiles(d_.trips, d_.split.train_vins, s, a, c_.detector)).first;
        return it->second;
    }

    const std::map<std::string, ProfileFeatures>& features(Scheme s, Algorithm a) {
        const auto key = scheme_algo_tag(s, a);
        auto it = features_.find(key);
        if (it == features_.end()) it = features_.emplace(key, features_for(profiles(s, a), d_.all_vins)).first;
        return it->second;
    }

private:
    const Dataset& d_;
    const RunConfig& c_;
    std::map<std::string, ProfileMap> profiles_;
    std::map<std::string, std::map<std::string, ProfileFeatures>> features_;
};

inline DesignMatrix model_design(const ModelVariant& m, const Dataset& d, FeatureCache& cache,
                                 const std::set<std::string>& vins) {
    const auto dist = distance_by_vin(d.trips);
    if (m.baseline) return build_design_matrix(d.policies, vins, dist);
    return build_design_matrix(d.policies, vins, dist, &cache.features(m.scheme, m.algorithm));
}

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + p.string() + "'");
    out << text;
}

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DependencyError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fnv_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Reads a (lambda, alpha) tuning report back and applies the selection rule.
inline std::pair<double, double> best_from_tuning_csv(const fs::path& p) {
    std::istringstream in(read_text(p));
    std::string line;
    std::getline(in, line);
    TuneResult r;
    r.names = {"lambda", "alpha"};
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 4) throw ParseError("expected 4 fields in '" + p.string() + "'", lineno);
        const auto l = csv::to_double(f[0]), a = csv::to_double(f[1]), auc_v = csv::to_double(f[2]);
        if (!l || !a || !auc_v) throw ParseError("malformed number in '" + p.string() + "'", lineno);
        r.points.push_back({{*l, *a}, *auc_v, 0.0});
    }
    if (r.points.empty()) throw ValidationError("empty tuning report '" + p.string() + "'");
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.points.size(); ++i) {
        const auto& q = r.points[i];
        const auto& b = r.points[best];
        if (q.auc > b.auc || (q.auc == b.auc && (q.values[0] > b.values[0] ||
                                                  (q.values[0] == b.values[0] && q.values[1] > b.values[1]))))
            best = i;
    }
    return {r.points[best].values[0], r.points[best].values[1]};
}

// --- commands --------------------------------------------------------------

inline std::vector<std::string> cmd_simulate(const RunConfig& c) {
    ensure_out_dir(c);
    const Portfolio pf = generate_portfolio(c.synth);
    const auto trips = out_path(c, "trips.csv"), policies = out_path(c, "policies.csv"),
               truth = out_path(c, "ground_truth.csv");
    write_trip_csv(trips.string(), pf.trips);
    write_policy_csv(policies.string(), pf.policies);
    std::ostringstream gt;
    write_ground_truth_csv(gt, pf.truth);
    write_text(truth, gt.str());
    return {trips.string(), policies.string(), truth.string()};
}

inline std::vector<std::string> cmd_profile(const RunConfig& c) {
    const Dataset d = load_dataset(c);
    ensure_out_dir(c);
    FeatureCache cache(d, c);
    const auto tag = scheme_algo_tag(c.scheme, c.algorithm);
    std::ostringstream prof, feat;
    write_profiles_csv(prof, cache.profiles(c.scheme, c.algorithm));
    write_features_csv(feat, cache.features(c.scheme, c.algorithm));
    const auto p1 = out_path(c, "profiles_" + tag + ".csv"), p2 = out_path(c, "features_" + tag + ".csv");
    write_text(p1, prof.str());
    write_text(p2, feat.str());
    return {p1.string(), p2.string()};
}

inline std::vector<std::string> cmd_tune_detector(const RunConfig& c) {
    const Dataset d = load_dataset(c);
    ensure_out_dir(c);
    GridSpec grid = c.detector_grid ? *c.detector_grid : detector_grid(c.scheme, c.algorithm);
    grid.name = c.algorithm == Algorithm::Lof ? (c.scheme == Scheme::Local ? "k_frac" : "k")
                                              : (c.scheme == Scheme::Local ? "b_frac" : "b");
    if (c.algorithm == Algorithm::Mahalanobis) detector_grid(c.scheme, c.algorithm);  // throws
    TrainingData td;
    for (const auto& t : d.trips)
        if (d.split.train_vins.count(t.vin)) td.trips.push_back(t);
    for (const auto& p : d.policies)
        if (d.split.train_vins.count(p.vin)) td.policies.push_back(p);
    std::vector<std::string> vins(d.split.train_vins.begin(), d.split.train_vins.end());
    const FoldPlan plan = make_fold_plan(vins, c.folds, c.fold_seed());
    const TuneResult r = tune_detector(c.scheme, c.algorithm, grid, td, plan, c.detector, c.recipe, c.solver);
    std::ostringstream out;
    write_tuning_csv(out, r);
    const auto p = out_path(c, "tune_detector_" + scheme_algo_tag(c.scheme, c.algorithm) + ".csv");
    write_text(p, out.str());
    return {p.string()};
}

inline std::vector<std::string> cmd_tune_model(const RunConfig& c) {
    const Dataset d = load_dataset(c);
    ensure_out_dir(c);
    FeatureCache cache(d, c);
    std::vector<std::string> vins(d.split.train_vins.begin(), d.split.train_vins.end());
    const FoldPlan plan = make_fold_plan(vins, c.folds, c.fold_seed());
    std::vector<std::string> written;
    for (const auto& name : c.models) {
        const ModelVariant m = parse_model(name);
        const DesignMatrix dm = model_design(m, d, cache, d.split.train_vins);
        const TuneResult r = tune_enet(dm, plan, c.recipe, c.solver, c.jobs, c.lambdas, c.alphas);
        std::ostringstream out;
        write_tuning_csv(out, r);
        const auto p = out_path(c, "tune_model_" + name + ".csv");
        write_text(p, out.str());
        written.push_back(p.string());
    }
    return written;
}

inline std::vector<std::string> cmd_train(const RunConfig& c) {
    const Dataset d = load_dataset(c);
    ensure_out_dir(c);
    for (const auto& name : c.models) require_file(out_path(c, "tune_model_" + name + ".csv"), "tune-model");
    fs::create_directories(out_path(c, "models"));
    FeatureCache cache(d, c);
    std::vector<std::string> written;
    for (const auto& name : c.models) {
        const ModelVariant m = parse_model(name);
        const auto [lambda, alpha] = best_from_tuning_csv(out_path(c, "tune_model_" + name + ".csv"));
        const DesignMatrix dm = model_design(m, d, cache, d.split.train_vins);
        const Recipe recipe = Recipe::fit(dm, c.recipe);
        const nlohmann::json rj = recipe.to_json();
        FittedClassifier fit = enet_fit(recipe.apply(dm), labels_to_vector(dm.labels), lambda, alpha, c.solver);
        fit.recipe_ref = fnv_hex(rj.dump());
        fit.features = recipe.names();
        nlohmann::json artifact = {{"model", name}, {"recipe", rj}, {"classifier", to_json(fit)}};
        const auto p = out_path(c, "models/" + name + ".json");
        write_text(p, artifact.dump(1) + "\n");
        std::ostringstream coef;
        write_coefficients_csv(coef, fit);
        const auto pc = out_path(c, "coefficients_" + name + ".csv");
        write_text(pc, coef.str());
        written.push_back(p.string());
        written.push_back(pc.string());
    }
    return written;
}

struct LoadedModel {
    Recipe recipe;
    FittedClassifier classifier;
};

inline LoadedModel load_model(const RunConfig& c, const std::string& name) {
    const auto p = out_path(c, "models/" + name + ".json");
    require_file(p, "train");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(p));
        LoadedModel m{Recipe::from_json(j.at("recipe")), classifier_from_json(j.at("classifier"))};
        if (m.classifier.recipe_ref != fnv_hex(j.at("recipe").dump()))
            throw ValidationError("model '" + name + "': classifier does not belong to the stored recipe");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("model artifact '" + p.string() + "': " + e.what());
    }
}

struct EvaluationRow {
    std::string model;
    double auc = 0.0;
    ConfusionMetrics metrics;
};

inline std::string fmt_opt(const std::optional<double>& v) { return v ? csv::fmt(*v) : "NA"; }

inline std::string evaluation_csv(const std::vector<EvaluationRow>& rows) {
    std::ostringstream out;
    out << "model,auc,accuracy,sensitivity,specificity,delta_auc,delta_accuracy,delta_sensitivity,delta_specificity\n";
    const EvaluationRow* base = nullptr;
    for (const auto& r : rows)
        if (r.model == "baseline") base = &r;
    auto delta = [](const std::optional<double>& a, const std::optional<double>& b) -> std::optional<double> {
        if (!a || !b) return std::nullopt;
        return *a - *b;
    };
    for (const auto& r : rows) {
        out << r.model << ',' << csv::fmt(r.auc) << ',' << csv::fmt(r.metrics.accuracy) << ','
            << fmt_opt(r.metrics.sensitivity_value) << ',' << fmt_opt(r.metrics.specificity_value);
        if (base) {
            out << ',' << csv::fmt(r.auc - base->auc) << ',' << csv::fmt(r.metrics.accuracy - base->metrics.accuracy)
                << ',' << fmt_opt(delta(r.metrics.sensitivity_value, base->metrics.sensitivity_value)) << ','
                << fmt_opt(delta(r.metrics.specificity_value, base->metrics.specificity_value));
        } else {
            out << ",NA,NA,NA,NA";
        }
        out << '\n';
    }
    return out.str();
}

inline std::vector<std::string> cmd_evaluate(const RunConfig& c) {
    const Dataset d = load_dataset(c);
    ensure_out_dir(c);
    std::vector<LoadedModel> models;
    for (const auto& name : c.models) models.push_back(load_model(c, name));
    FeatureCache cache(d, c);
    std::vector<EvaluationRow> rows;
    std::vector<std::string> written;
    for (std::size_t i = 0; i < c.models.size(); ++i) {
        const ModelVariant m = parse_model(c.models[i]);
        const DesignMatrix test = model_design(m, d, cache, d.split.test_vins);
        const Vector p = predict_proba(models[i].classifier, models[i].recipe.apply(test));
        EvaluationRow row;
        row.model = m.name;
        row.auc = auc(p, test.labels);
        row.metrics = confusion_metrics(p, test.labels);
        rows.push_back(row);
        std::ostringstream pred;
        pred << "vin,claim_ind,probability\n";
        for (std::size_t r = 0; r < test.rows(); ++r)
            pred << test.vins[r] << ',' << test.labels[r] << ',' << csv::fmt(p(static_cast<Eigen::Index>(r))) << '\n';
        const auto pp = out_path(c, "predictions_" + m.name + ".csv");
        write_text(pp, pred.str());
        written.push_back(pp.string());
    }
    const auto pe = out_path(c, "evaluation.csv");
    write_text(pe, evaluation_csv(rows));
    written.insert(written.begin(), pe.string());
    return written;
}

// Pearson correlation of midranks.
inline double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ArgumentError("spearman: need two equal-length samples");
    const auto ra = midranks(a), rb = midranks(b);
    const auto [ma, sa] = mean_and_sd(ra);
    const auto [mb, sb] = mean_and_sd(rb);
    if (sa == 0.0 || sb == 0.0) throw UndefinedMetricError("spearman: constant sample");
    double s = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) s += (ra[i] - ma) * (rb[i] - mb);
    return s / (static_cast<double>(ra.size() - 1) * sa * sb);
}

// ROC points (fpr, tpr) at every distinct threshold, highest first.
inline std::string roc_csv(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double pos = 0, neg = 0;
    for (int y : labels) (y ? pos : neg) += 1;
    std::ostringstream out;
    out << "threshold,fpr,tpr\n";
    out << "inf,0,0\n";
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (labels[order[i]] ? tp : fp) += 1;
        if (i + 1 < order.size() && scores[order[i + 1]] == scores[order[i]]) continue;
        out << csv::fmt(scores[order[i]]) << ',' << csv::fmt(neg > 0 ? fp / neg : 0.0) << ','
            << csv::fmt(pos > 0 ? tp / pos : 0.0) << '\n';
    }
    return out.str();
}

inline std::vector<std::string> cmd_report(const RunConfig& c) {
    require_file(out_path(c, "evaluation.csv"), "evaluate");
    for (const auto& name : c.models) require_file(out_path(c, "predictions_" + name + ".csv"), "evaluate");
    const Dataset d = load_dataset(c);
    fs::create_directories(out_path(c, "report"));
    std::vector<std::string> written;

    for (const auto& name : c.models) {
        // ROC points from the stored predictions.
        std::istringstream in(read_text(out_path(c, "predictions_" + name + ".csv")));
        std::string line;
        std::getline(in, line);
        std::vector<double> s;
        std::vector<int> y;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto f = csv::split(line);
            const auto lab = f.size() == 3 ? csv::to_int(f[1]) : std::nullopt;
            const auto pr = f.size() == 3 ? csv::to_double(f[2]) : std::nullopt;
            if (!lab || !pr) throw ParseError("malformed prediction row", lineno);
            y.push_back(static_cast<int>(*lab));
            s.push_back(*pr);
        }
        const auto pr = out_path(c, "report/roc_" + name + ".csv");
        write_text(pr, roc_csv(s, y));
        written.push_back(pr.string());

        // Non-zero coefficients by magnitude.
        const LoadedModel m = load_model(c, name);
        std::vector<std::size_t> idx;
        for (Eigen::Index j = 0; j < m.classifier.coefficients.size(); ++j)
            if (m.classifier.coefficients(j) != 0.0) idx.push_back(static_cast<std::size_t>(j));
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(m.classifier.coefficients(static_cast<Eigen::Index>(a))) >
                   std::abs(m.classifier.coefficients(static_cast<Eigen::Index>(b)));
        });
        std::ostringstream coef;
        coef << "feature,coefficient,magnitude,sign\n";
        for (auto j : idx) {
            const double v = m.classifier.coefficients(static_cast<Eigen::Index>(j));
            coef << m.classifier.features[j] << ',' << csv::fmt(v) << ',' << csv::fmt(std::abs(v)) << ','
                 << (v > 0 ? "+" : "-") << '\n';
        }
        const auto pcoef = out_path(c, "report/coefficients_" + name + ".csv");
        write_text(pcoef, coef.str());
        written.push_back(pcoef.string());
    }

    // Score samples for the configured detector: the vehicles with the lowest
    // and highest median score.
    FeatureCache cache(d, c);
    const ProfileMap& prof = cache.profiles(c.scheme, c.algorithm);
    const auto& feats = cache.features(c.scheme, c.algorithm);
    std::string lo, hi;
    double lo_v = std::numeric_limits<double>::infinity(), hi_v = -lo_v;
    for (const auto& [vin, f] : feats) {
        if (!prof.count(vin)) continue;
        const double med = f.quantiles[5];
        if (med < lo_v) lo_v = med, lo = vin;
        if (med > hi_v) hi_v = med, hi = vin;
    }
    std::ostringstream dens;
    dens << "group,vin,scheme,algorithm,score\n";
    for (const auto& [group, vin] : {std::pair<std::string, std::string>{"low_median", lo}, {"high_median", hi}}) {
        if (vin.empty()) continue;
        for (double v : prof.at(vin).scores)
            dens << group << ',' << vin << ',' << to_string(c.scheme) << ',' << to_string(c.algorithm) << ','
                 << csv::fmt(v) << '\n';
    }
    const auto pd = out_path(c, "report/score_density_" + scheme_algo_tag(c.scheme, c.algorithm) + ".csv");
    write_text(pd, dens.str());
    written.push_back(pd.string());

    // Spearman correlation of global Mahalanobis scores with the raw trip attributes.
    const GlobalInputs gi = build_global_inputs(d.trips, d.split.train_vins);
    const auto model = mahalanobis_fit(gi.train.attributes, c.detector.ridge_eps);
    const Vector score = model.score_rows(gi.train.attributes);
    std::vector<TripRecord> train_trips;
    for (const auto& t : d.trips)
        if (d.split.train_vins.count(t.vin)) train_trips.push_back(t);
    const TripAttributes raw = derive_attributes(train_trips);
    std::ostringstream sp;
    sp << "attribute,spearman\n";
    const std::span<const double> ss(score.data(), static_cast<std::size_t>(score.size()));
    for (std::size_t j = 0; j < kNumTripAttributes; ++j) {
        const Vector col = raw.values.col(static_cast<Eigen::Index>(j));
        sp << kTripAttributeNames[j] << ','
           << csv::fmt(spearman(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), ss))
           << '\n';
    }
    const auto psp = out_path(c, "report/spearman_global_mahalanobis.csv");
    write_text(psp, sp.str());
    written.push_back(psp.string());
    return written;
}

inline std::vector<std::string> run_command(const std::string& name, const RunConfig& c) {
    if (name == "simulate") return cmd_simulate(c);
    if (name == "profile") return cmd_profile(c);
    if (name == "tune-detector") return cmd_tune_detector(c);
    if (name == "tune-model") return cmd_tune_model(c);
    if (name == "train") return cmd_train(c);
    if (name == "evaluate") return cmd_evaluate(c);
    if (name == "report") return cmd_report(c);
    throw ArgumentError("unknown command '" + name + "'");
}

}  // namespace telanom
