#pragma once

// Metrics, vehicle-level cross-validation with in-fold preprocessing, and the
// grid searches for detector and elastic-net hyperparameters.

#include "telanom/common.hpp"
#include "telanom/csv.hpp"
#include "telanom/enet_glm.hpp"
#include "telanom/profiling.hpp"
#include "telanom/tabular_prep.hpp"

#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace telanom {

// --- metrics ---------------------------------------------------------------

// Average (1-based) ranks; ties share the mean of their positions.
inline std::vector<double> midranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
        i = j + 1;
    }
    return r;
}

// Probability that a random positive outscores a random negative, ties
// counting one half (Mann-Whitney form).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ArgumentError("auc: length mismatch");
    double n1 = 0, n0 = 0;
    for (int y : labels) {
        if (y == 1) ++n1;
        else if (y == 0) ++n0;
        else throw ArgumentError("auc: labels must be 0/1");
    }
    if (n1 == 0 || n0 == 0) throw UndefinedMetricError("auc: both classes must be present");
    for (double s : scores)
        if (std::isnan(s)) throw ArgumentError("auc: NaN score");
    const auto r = midranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (labels[i] == 1) rank_sum += r[i];
    return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

inline double auc(const Vector& scores, std::span<const int> labels) {
    return auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), labels);
}

struct ConfusionMetrics {
    double accuracy = 0.0;
    std::optional<double> sensitivity_value;
    std::optional<double> specificity_value;
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    double sensitivity() const {
        if (!sensitivity_value) throw UndefinedMetricError("sensitivity: no positive cases");
        return *sensitivity_value;
    }
    double specificity() const {
        if (!specificity_value) throw UndefinedMetricError("specificity: no negative cases");
        return *specificity_value;
    }
};

// Hard prediction is 1 when the score reaches the threshold.
inline ConfusionMetrics confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                                          double threshold = 0.5) {
    if (scores.size() != labels.size()) throw ArgumentError("confusion_metrics: length mismatch");
    if (scores.empty()) throw UndefinedMetricError("confusion_metrics: no cases");
    ConfusionMetrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1) (pred ? m.tp : m.fn)++;
        else (pred ? m.fp : m.tn)++;
    }
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(scores.size());
    if (m.tp + m.fn > 0) m.sensitivity_value = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    if (m.tn + m.fp > 0) m.specificity_value = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
    return m;
}

inline ConfusionMetrics confusion_metrics(const Vector& scores, std::span<const int> labels,
                                          double threshold = 0.5) {
    return confusion_metrics(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                             labels, threshold);
}

// --- folds and grids -------------------------------------------------------

struct FoldPlan {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::map<std::string, std::size_t> assignments;

    // Row indices of `vins` per fold.
    std::vector<std::vector<std::size_t>> rows_by_fold(const std::vector<std::string>& vins) const {
        std::vector<std::vector<std::size_t>> out(k);
        for (std::size_t i = 0; i < vins.size(); ++i) {
            const auto it = assignments.find(vins[i]);
            if (it == assignments.end()) throw ArgumentError("fold plan has no entry for vin '" + vins[i] + "'");
            out[it->second].push_back(i);
        }
        return out;
    }
};

inline FoldPlan make_fold_plan(std::vector<std::string> vins, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError("folds: k must be >= 2");
    std::sort(vins.begin(), vins.end());
    vins.erase(std::unique(vins.begin(), vins.end()), vins.end());
    if (vins.size() < k) throw ArgumentError("folds: fewer vehicles than folds");
    std::mt19937_64 rng(seed);
    std::shuffle(vins.begin(), vins.end(), rng);
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    for (std::size_t i = 0; i < vins.size(); ++i) plan.assignments[vins[i]] = i % k;
    return plan;
}

struct GridSpec {
    std::string name;
    std::vector<double> values;

    void validate() const {
        if (values.empty()) throw ArgumentError("grid '" + name + "' is empty");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1])) throw ArgumentError("grid '" + name + "' is not strictly increasing");
    }
};

inline GridSpec lambda_grid() {
    GridSpec g{"lambda", {}};
    for (int i = 0; i < 50; ++i) g.values.push_back(std::pow(10.0, -10.0 + 10.0 * i / 49.0));
    g.values.front() = 1e-10;
    g.values.back() = 1.0;
    return g;
}

inline GridSpec alpha_grid() { return {"alpha", {0.0, 0.25, 0.5, 0.75, 1.0}}; }

inline GridSpec k_frac_grid() {
    GridSpec g{"k_frac", {}};
    for (int i = 1; i <= 12; ++i) g.values.push_back(0.05 * i);
    return g;
}

inline GridSpec b_frac_grid() {
    GridSpec g{"b_frac", {}};
    for (int i = 1; i <= 20; ++i) g.values.push_back(0.05 * i);
    return g;
}

inline GridSpec k_grid() {
    GridSpec g{"k", {}};
    for (int i = 1; i <= 10; ++i) g.values.push_back(5.0 * i);
    return g;
}

inline GridSpec b_grid() {
    GridSpec g{"b", {}};
    for (int i = 1; i <= 10; ++i) g.values.push_back(100.0 * i);
    return g;
}

// Mahalanobis has no hyperparameter to tune.
inline GridSpec detector_grid(Scheme scheme, Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::Lof: return scheme == Scheme::Local ? k_frac_grid() : k_grid();
        case Algorithm::IForest: return scheme == Scheme::Local ? b_frac_grid() : b_grid();
        case Algorithm::Mahalanobis: break;
    }
    throw ArgumentError("mahalanobis has no tunable hyperparameter");
}

inline DetectorParams with_grid_value(DetectorParams p, Scheme scheme, Algorithm algorithm, double v) {
    if (algorithm == Algorithm::Lof) {
        if (scheme == Scheme::Local) p.k_frac = v;
        else p.k = static_cast<std::size_t>(std::llround(v));
    } else if (algorithm == Algorithm::IForest) {
        if (scheme == Scheme::Local) p.b_frac = v;
        else p.b = static_cast<std::size_t>(std::llround(v));
    }
    return p;
}

struct TunePoint {
    std::vector<double> values;
    double auc = 0.0;  // AUC of the pooled out-of-fold predictions
    double sd = 0.0;   // standard deviation of the per-fold AUCs
};

struct TuneResult {
    std::vector<std::string> names;
    std::vector<TunePoint> points;
    std::size_t best = 0;

    const TunePoint& best_point() const {
        if (points.empty()) throw StateError("empty tuning result");
        return points[best];
    }
};

inline void write_tuning_csv(std::ostream& out, const TuneResult& r) {
    for (const auto& n : r.names) out << n << ',';
    out << "mean_auc,sd_auc\n";
    for (const auto& p : r.points) {
        for (double v : p.values) out << csv::fmt(v) << ',';
        out << csv::fmt(p.auc) << ',' << csv::fmt(p.sd) << '\n';
    }
}

// --- cross-validation ------------------------------------------------------

struct ModelSpec {
    bool penalized = true;
    double lambda = 0.0;
    double alpha = 0.0;
    SolverConfig solver{};
};

struct CvResult {
    double auc = 0.0;
    double sd = 0.0;
    Vector oof;                    // out-of-fold probabilities, design row order
    std::vector<double> fold_auc;  // NaN for skipped folds
};

namespace detail {

struct FoldData {
    Recipe recipe;
    Matrix x_train;
    Vector y_train;
    Matrix x_val;
    std::vector<std::size_t> val_rows;
};

inline FoldData prepare_fold(const DesignMatrix& dm, const std::vector<std::vector<std::size_t>>& folds,
                             std::size_t f, const RecipeConfig& rc) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g)
        if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());
    FoldData fd;
    const DesignMatrix tr = dm.subset(train);
    fd.recipe = Recipe::fit(tr, rc);
    fd.x_train = fd.recipe.apply(tr);
    fd.y_train = labels_to_vector(tr.labels);
    fd.val_rows = folds[f];
    fd.x_val = fd.recipe.apply(dm.subset(folds[f]));
    return fd;
}

// Pooled AUC plus the spread of per-fold AUCs; single-class folds are skipped.
inline void summarize_cv(const Vector& oof, const std::vector<int>& labels,
                         const std::vector<std::vector<std::size_t>>& folds, double& pooled, double& sd,
                         std::vector<double>* per_fold, bool warn_skips) {
    pooled = auc(oof, labels);
    std::vector<double> ok;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<double> s;
        std::vector<int> y;
        for (auto i : folds[f]) {
            s.push_back(oof(static_cast<Eigen::Index>(i)));
            y.push_back(labels[i]);
        }
        double a = std::numeric_limits<double>::quiet_NaN();
        try {
            a = auc(s, y);
            ok.push_back(a);
        } catch (const UndefinedMetricError&) {
            if (warn_skips) warn("cv: fold " + std::to_string(f) + " has a single class; skipped in the fold spread");
        }
        if (per_fold) per_fold->push_back(a);
    }
    sd = ok.size() > 1 ? mean_and_sd(ok).second : 0.0;
}

}  // namespace detail

// Fits recipe and model on k-1 folds and scores the held-out fold, for every
// fold; the AUC is taken over the concatenated out-of-fold predictions.
inline CvResult cross_validate(const DesignMatrix& dm, const FoldPlan& plan, const ModelSpec& model,
                               const RecipeConfig& rc = {}, unsigned jobs = 1) {
    const auto folds = plan.rows_by_fold(dm.vins);
    CvResult res;
    res.oof = Vector::Zero(static_cast<Eigen::Index>(dm.rows()));
    parallel_for(folds.size(), jobs, [&](std::size_t f) {
        if (folds[f].empty()) return;
        const auto fd = detail::prepare_fold(dm, folds, f, rc);
        SolverConfig sc = model.solver;
        const FittedClassifier fit = model.penalized
                                         ? enet_fit(fd.x_train, fd.y_train, model.lambda, model.alpha, sc)
                                         : fit_mle(fd.x_train, fd.y_train, sc);
        const Vector p = predict_proba(fit, fd.x_val);
        for (std::size_t i = 0; i < fd.val_rows.size(); ++i)
            res.oof(static_cast<Eigen::Index>(fd.val_rows[i])) = p(static_cast<Eigen::Index>(i));
    });
    detail::summarize_cv(res.oof, dm.labels, folds, res.auc, res.sd, &res.fold_auc, true);
    return res;
}

// All 250 (lambda, alpha) combinations. Each fold's recipe is fitted once and
// reused; lambdas run from large to small with warm starts.
inline TuneResult tune_enet(const DesignMatrix& dm, const FoldPlan& plan, const RecipeConfig& rc = {},
                            SolverConfig solver = {}, unsigned jobs = 1,
                            const GridSpec& lambdas = lambda_grid(), const GridSpec& alphas = alpha_grid()) {
    lambdas.validate();
    alphas.validate();
    const auto folds = plan.rows_by_fold(dm.vins);
    const std::size_t nl = lambdas.values.size(), na = alphas.values.size(), k = folds.size();
    std::vector<detail::FoldData> fds(k);
    parallel_for(k, jobs, [&](std::size_t f) {
        if (!folds[f].empty()) fds[f] = detail::prepare_fold(dm, folds, f, rc);
    });

    // oof[a * nl + l] holds the out-of-fold predictions for that combination.
    std::vector<Vector> oof(nl * na, Vector::Zero(static_cast<Eigen::Index>(dm.rows())));
    std::vector<int> unconverged(k * na, 0);
    solver.warn_nonconvergence = false;
    parallel_for(k * na, jobs, [&](std::size_t task) {
        const std::size_t f = task / na, a = task % na;
        if (folds[f].empty()) return;
        const auto& fd = fds[f];
        Vector warm = Vector::Zero(fd.x_train.cols());
        for (std::size_t li = nl; li-- > 0;) {
            const auto fit = enet_fit(fd.x_train, fd.y_train, lambdas.values[li], alphas.values[a], solver, &warm);
            if (!fit.converged) ++unconverged[task];
            warm = fit.coefficients;
            const Vector p = predict_proba(fit, fd.x_val);
            auto& dst = oof[a * nl + li];
            for (std::size_t i = 0; i < fd.val_rows.size(); ++i)
                dst(static_cast<Eigen::Index>(fd.val_rows[i])) = p(static_cast<Eigen::Index>(i));
        }
    });
    const int total_unconverged = std::accumulate(unconverged.begin(), unconverged.end(), 0);
    if (total_unconverged > 0)
        warn("tune_enet: " + std::to_string(total_unconverged) + " of " + std::to_string(k * na * nl) +
             " fits stopped before meeting the convergence criteria");

    TuneResult res;
    res.names = {lambdas.name, alphas.name};
    bool first = true;
    for (std::size_t li = 0; li < nl; ++li) {
        for (std::size_t a = 0; a < na; ++a) {
            TunePoint pt;
            pt.values = {lambdas.values[li], alphas.values[a]};
            detail::summarize_cv(oof[a * nl + li], dm.labels, folds, pt.auc, pt.sd, nullptr, false);
            res.points.push_back(pt);
        }
    }
    // Highest AUC; ties go to the larger lambda, then the larger alpha.
    for (std::size_t i = 0; i < res.points.size(); ++i) {
        const auto& p = res.points[i];
        if (first) {
            res.best = i;
            first = false;
            continue;
        }
        const auto& b = res.points[res.best];
        if (p.auc > b.auc || (p.auc == b.auc && (p.values[0] > b.values[0] ||
                                                  (p.values[0] == b.values[0] && p.values[1] > b.values[1]))))
            res.best = i;
    }
    return res;
}

// Training-side data for detector tuning.
struct TrainingData {
    std::vector<TripRecord> trips;      // trips of the training vehicles
    std::vector<PolicyRecord> policies; // training policies
};

// For each grid value: profiles on the training trips, 66 quantile features,
// then unpenalized logistic regression under k-fold CV.
inline TuneResult tune_detector(Scheme scheme, Algorithm algorithm, const GridSpec& grid, const TrainingData& data,
                                const FoldPlan& plan, DetectorParams base = {}, const RecipeConfig& rc = {},
                                SolverConfig solver = {}) {
    grid.validate();
    std::vector<std::string> vins;
    std::vector<int> labels;
    std::set<std::string> train_vins;
    {
        std::vector<const PolicyRecord*> pol;
        for (const auto& p : data.policies) pol.push_back(&p);
        std::sort(pol.begin(), pol.end(), [](auto* a, auto* b) { return a->vin < b->vin; });
        for (const auto* p : pol) {
            vins.push_back(p->vin);
            labels.push_back(p->claim_ind);
            train_vins.insert(p->vin);
        }
    }
    TuneResult res;
    res.names = {grid.name};
    ModelSpec spec;
    spec.penalized = false;
    spec.solver = solver;
    spec.solver.warn_nonconvergence = false;
    for (double v : grid.values) {
        const DetectorParams p = with_grid_value(base, scheme, algorithm, v);
        const ProfileMap profiles = compute_profiles(data.trips, train_vins, scheme, algorithm, p);
        const DesignMatrix dm = build_profile_design(vins, labels, features_for(profiles, vins));
        const CvResult cv = cross_validate(dm, plan, spec, rc, base.jobs);
        res.points.push_back({{v}, cv.auc, cv.sd});
    }
    // Ties go to the smaller value, which comes first.
    for (std::size_t i = 1; i < res.points.size(); ++i)
        if (res.points[i].auc > res.points[res.best].auc) res.best = i;
    return res;
}

}  // namespace telanom
