#include "telanom/eval_tune.hpp"
#include "telanom/synthgen.hpp"

#include "helpers.hpp"
#include "oracles/pairwise_auc.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace telanom;

namespace {

// Numeric-only design with labels drawn from a logistic model on the first column.
DesignMatrix numeric_design(std::size_t n, std::size_t p, double signal, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DesignMatrix dm;
    for (std::size_t j = 0; j < p; ++j) dm.columns.push_back({"x" + std::to_string(j), false, {}, {}});
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "V%05zu", i);
        dm.vins.push_back(buf);
        double eta = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double v = d(rng);
            dm.columns[j].numeric.push_back(v);
            if (j == 0) eta = signal * v;
        }
        dm.labels.push_back(u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0);
    }
    return dm;
}

ModelSpec ridge(double lambda) {
    ModelSpec m;
    m.lambda = lambda;
    m.alpha = 0.0;
    return m;
}

}  // namespace

TEST(Auc, Examples) {
    const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y = {0, 0, 1, 1};
    EXPECT_EQ(auc(s, y), 0.75);
    const std::vector<double> perfect = {0, 0, 1, 1};
    EXPECT_EQ(auc(perfect, y), 1.0);
    const std::vector<double> flat(4, 0.3);
    EXPECT_EQ(auc(flat, y), 0.5);
    const std::vector<int> one_class = {1, 1, 1, 1};
    EXPECT_THROW(auc(s, one_class), UndefinedMetricError);
}

TEST(Auc, MatchesPairwiseOracle) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng() % 300;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 20) / 4.0;  // many ties
            y[i] = static_cast<int>(rng() % 2);
        }
        y[0] = 0;
        y[1] = 1;
        EXPECT_NEAR(auc(s, y), oracle::pairwise_auc(s, y), 1e-12);
    }
}

TEST(Confusion, Examples) {
    const std::vector<int> y = {0, 0, 1, 1};
    const std::vector<double> hard = {0, 0, 1, 1};
    auto m = confusion_metrics(hard, y);
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(m.sensitivity(), 1.0);
    EXPECT_EQ(m.specificity(), 1.0);
    const std::vector<double> zeros(4, 0.0);
    m = confusion_metrics(zeros, y);
    EXPECT_EQ(m.accuracy, 0.5);
    EXPECT_EQ(m.sensitivity(), 0.0);
    EXPECT_EQ(m.specificity(), 1.0);
    const std::vector<double> s = {0.6, 0.4};
    const std::vector<int> pos = {1, 1};
    m = confusion_metrics(s, pos);
    EXPECT_EQ(m.accuracy, 0.5);
    EXPECT_EQ(m.sensitivity(), 0.5);
    EXPECT_THROW(m.specificity(), UndefinedMetricError);
}

TEST(Folds, DeterministicPartition) {
    std::vector<std::string> vins;
    for (int i = 0; i < 103; ++i) vins.push_back("V" + std::to_string(i));
    const auto a = make_fold_plan(vins, 5, 9), b = make_fold_plan(vins, 5, 9);
    EXPECT_EQ(a.assignments, b.assignments);
    const auto rows = a.rows_by_fold(vins);
    std::size_t total = 0;
    for (const auto& f : rows) {
        EXPECT_GE(f.size(), 20u);
        EXPECT_LE(f.size(), 21u);
        total += f.size();
    }
    EXPECT_EQ(total, vins.size());
    EXPECT_THROW(a.rows_by_fold({"nobody"}), ArgumentError);
    EXPECT_THROW(make_fold_plan({"a", "b"}, 5, 1), ArgumentError);
}

TEST(Grids, Cardinalities) {
    EXPECT_EQ(k_frac_grid().values.size(), 12u);
    EXPECT_EQ(b_frac_grid().values.size(), 20u);
    EXPECT_EQ(k_grid().values.size(), 10u);
    EXPECT_EQ(b_grid().values.size(), 10u);
    EXPECT_EQ(lambda_grid().values.size(), 50u);
    EXPECT_EQ(alpha_grid().values.size(), 5u);
    EXPECT_EQ(lambda_grid().values.front(), 1e-10);
    EXPECT_EQ(lambda_grid().values.back(), 1.0);
    EXPECT_NEAR(k_frac_grid().values.back(), 0.6, 1e-15);
    EXPECT_NEAR(b_frac_grid().values.back(), 1.0, 1e-15);
    EXPECT_EQ(k_grid().values.front(), 5.0);
    EXPECT_EQ(b_grid().values.back(), 1000.0);
    EXPECT_THROW(detector_grid(Scheme::Global, Algorithm::Mahalanobis), ArgumentError);
    EXPECT_NO_THROW(lambda_grid().validate());
}

TEST(Cv, ConstantModelGivesHalf) {
    const auto dm = numeric_design(300, 3, 2.0, 1);
    const auto plan = make_fold_plan(dm.vins, 5, 1);
    ModelSpec m;
    m.lambda = 1e3;
    m.alpha = 1.0;
    EXPECT_EQ(cross_validate(dm, plan, m).auc, 0.5);
}

TEST(Cv, StrongSignal) {
    const auto dm = numeric_design(2000, 4, 4.0, 2);
    EXPECT_GT(cross_validate(dm, make_fold_plan(dm.vins, 5, 2), ridge(1e-4)).auc, 0.9);
}

TEST(Cv, PermutedLabelsNearHalf) {
    auto dm = numeric_design(2000, 4, 4.0, 3);
    std::mt19937_64 rng(3);
    std::shuffle(dm.labels.begin(), dm.labels.end(), rng);
    const double a = cross_validate(dm, make_fold_plan(dm.vins, 5, 3), ridge(1e-4)).auc;
    EXPECT_GE(a, 0.45);
    EXPECT_LE(a, 0.55);
}

TEST(Cv, ValidationRowsDoNotTouchFoldRecipe) {
    const auto dm = testutil::baseline_design(200, 4);
    const auto plan = make_fold_plan(dm.vins, 5, 4);
    const auto folds = plan.rows_by_fold(dm.vins);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto before = detail::prepare_fold(dm, folds, f, {});
        auto mutated = dm;
        for (auto i : folds[f]) {
            for (auto& c : mutated.columns) {
                if (c.categorical) c.category[i] = "zzz";
                else c.numeric[i] = 12345.0;
            }
            mutated.labels[i] = 1 - mutated.labels[i];
        }
        const auto after = detail::prepare_fold(mutated, folds, f, {});
        EXPECT_EQ(before.recipe.to_json(), after.recipe.to_json());
        EXPECT_EQ(before.x_train, after.x_train);
    }
}

TEST(Tune, FullGridOnNoise) {
    const auto dm = numeric_design(400, 5, 0.0, 5);
    const auto r = tune_enet(dm, make_fold_plan(dm.vins, 5, 5));
    EXPECT_EQ(r.points.size(), 250u);
    const auto& best = r.best_point();
    EXPECT_GE(best.values[0], 1e-2);
    EXPECT_LT(best.auc, 0.6);
    std::ostringstream out;
    write_tuning_csv(out, r);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "lambda,alpha,mean_auc,sd_auc");
}

TEST(Tune, SignalPrefersWeakPenalty) {
    const auto dm = numeric_design(600, 5, 3.0, 6);
    const auto r = tune_enet(dm, make_fold_plan(dm.vins, 5, 6));
    EXPECT_GT(r.best_point().auc, 0.8);
    EXPECT_LT(r.best_point().values[0], 1.0);
}

TEST(Tune, ConstantScoresUninformative) {
    SynthConfig cfg;
    cfg.num_vehicles = 80;
    cfg.min_trips = 12;
    cfg.max_trips = 12;
    const auto pf = generate_portfolio(cfg);
    TrainingData td{{}, pf.policies};
    for (const auto& t : pf.trips) {
        // Every vehicle repeats one trip, so local LOF is 1 everywhere.
        TripRecord c = t;
        c.departure = 1451865600 + 3600;
        c.arrival = c.departure + 600;
        c.distance_km = 5;
        c.max_speed_kmh = 50;
        td.trips.push_back(c);
    }
    std::vector<std::string> vins;
    for (const auto& p : pf.policies) vins.push_back(p.vin);
    const GridSpec g{"k_frac", {0.1, 0.3}};
    const auto r = tune_detector(Scheme::Local, Algorithm::Lof, g, td, make_fold_plan(vins, 5, 1));
    ASSERT_EQ(r.points.size(), 2u);
    for (const auto& p : r.points) EXPECT_EQ(p.auc, 0.5);
    EXPECT_EQ(r.best, 0u);
}
