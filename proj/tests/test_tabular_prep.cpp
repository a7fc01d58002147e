#include "telanom/tabular_prep.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace telanom;

namespace {

double skewness(const std::vector<double>& v) {
    const auto [m, sd] = mean_and_sd(v);
    double s = 0.0;
    for (double x : v) s += std::pow((x - m) / sd, 3);
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST(Pooling, RareCategoryToOther) {
    std::vector<std::string> col;
    col.insert(col.end(), 50, "A");
    col.insert(col.end(), 46, "B");
    col.insert(col.end(), 4, "C");
    const auto pooler = fit_category_pooler(col);
    EXPECT_EQ(pooler.apply("A"), "A");
    EXPECT_EQ(pooler.apply("C"), "other");
    EXPECT_EQ(pooler.apply("never-seen"), "other");
}

TEST(Pooling, NothingRare) {
    std::vector<std::string> col = {"x", "y", "x", "y", "z", "z"};
    EXPECT_EQ(pool_rare_categories(col), col);
}

TEST(TargetEncoding, TableSix) {
    const std::vector<std::string> col = {"blue", "blue", "red", "red", "white", "white"};
    const std::vector<int> y = {0, 1, 1, 1, 0, 0};
    const auto enc = fit_target_encoder(col, y);
    EXPECT_EQ(enc.encode("blue"), 0.0);
    EXPECT_EQ(enc.encode("red"), kDefaultEncodingClamp);
    EXPECT_EQ(enc.encode("white"), -kDefaultEncodingClamp);
    EXPECT_EQ(enc.encode("green"), 0.0);
}

TEST(TargetEncoding, LogitInverse) {
    EXPECT_NEAR(logit(std::exp(1.0) / (1.0 + std::exp(1.0))), 1.0, 1e-12);
    std::vector<std::string> col(1000, "c");
    std::vector<int> y(1000, 0);
    for (int i = 0; i < 731; ++i) y[static_cast<std::size_t>(i)] = 1;
    EXPECT_NEAR(fit_target_encoder(col, y).encode("c"), 1.0, 2e-3);
}

TEST(YeoJohnson, Identities) {
    for (double x : {-7.5, -1.0, -1e-3, 0.0, 0.4, 3.0, 120.0}) {
        EXPECT_NEAR(yeo_johnson(x, 1.0), x, 1e-12 * std::max(1.0, std::abs(x)));
        if (x >= 0) {
            EXPECT_NEAR(yeo_johnson(x, 0.0), std::log(x + 1.0), 1e-12);
        }
    }
    for (double l : {-5.0, -1.0, 0.0, 0.5, 2.0, 3.5, 5.0}) EXPECT_EQ(yeo_johnson(0.0, l), 0.0);
    EXPECT_NEAR(yeo_johnson(-3.0, 2.0), -std::log(4.0), 1e-12);
}

TEST(YeoJohnson, NormalDataNearIdentity) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> x(10000);
    for (auto& v : x) v = d(rng);
    EXPECT_NEAR(fit_yeo_johnson(x), 1.0, 0.3);
}

TEST(YeoJohnson, SkewReduced) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = std::exp(d(rng));
    const double l = fit_yeo_johnson(x);
    EXPECT_LT(l, 1.0);
    std::vector<double> t;
    for (double v : x) t.push_back(yeo_johnson(v, l));
    EXPECT_LT(std::abs(skewness(t)), std::abs(skewness(x)));
}

TEST(Imputer, ConstantTarget) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d(0.0, 1.0);
    Matrix x(100, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = d(rng);
    const auto imp = fit_bagged_imputer(x, Vector::Constant(100, 7.0), 1);
    for (Eigen::Index i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(imp.predict(x.row(i)), 7.0);
}

TEST(Imputer, BeatsMeanImputation) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> d(0.0, 1.0);
    const Eigen::Index n = 600;
    Matrix x(n, 2);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 10000 + 3000 * d(rng);
        x(i, 1) = d(rng);
        y(i) = 0.5 * x(i, 0) + 100 * d(rng);
    }
    const Eigen::Index ntr = 400;
    const auto imp = fit_bagged_imputer(x.topRows(ntr), y.head(ntr), 5);
    const double mean = y.head(ntr).mean(), lo = y.head(ntr).minCoeff(), hi = y.head(ntr).maxCoeff();
    double se_tree = 0, se_mean = 0;
    for (Eigen::Index i = ntr; i < n; ++i) {
        const double p = imp.predict(x.row(i));
        EXPECT_GE(p, lo);
        EXPECT_LE(p, hi);
        se_tree += (p - y(i)) * (p - y(i));
        se_mean += (mean - y(i)) * (mean - y(i));
    }
    EXPECT_LT(se_tree, se_mean);
}

TEST(Recipe, TrainingColumnsStandardized) {
    const auto dm = testutil::baseline_design(300, 1);
    const auto r = Recipe::fit(dm);
    const Matrix z = r.apply(dm);
    ASSERT_EQ(z.cols(), 11);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        if (r.stds()[static_cast<std::size_t>(j)] == 0.0) {
            EXPECT_TRUE((z.col(j).array() == 0.0).all());
            continue;
        }
        EXPECT_LT(std::abs(z.col(j).mean()), 1e-9) << r.names()[static_cast<std::size_t>(j)];
        const double sd = std::sqrt((z.col(j).array() - z.col(j).mean()).square().sum() / (z.rows() - 1.0));
        EXPECT_LT(std::abs(sd - 1.0), 1e-9) << r.names()[static_cast<std::size_t>(j)];
    }
    EXPECT_EQ(z, r.apply(dm));
}

TEST(Recipe, HeldOutUsesTrainStatistics) {
    const auto dm = testutil::baseline_design(400, 2);
    const auto tr = dm.subset(testutil::iota(0, 300)), ho = dm.subset(testutil::iota(300, 400));
    const auto r = Recipe::fit(tr);
    const Matrix z = r.apply(ho);
    ASSERT_TRUE(z.allFinite());
    double worst = 0.0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) worst = std::max(worst, std::abs(z.col(j).mean()));
    EXPECT_GT(worst, 1e-6);
}

TEST(Recipe, MissingCommuteImputed) {
    const auto dm = testutil::baseline_design(200, 3);
    const auto* c = dm.find(kCommuteColumn);
    ASSERT_NE(c, nullptr);
    std::size_t missing = 0;
    for (double v : c->numeric) missing += std::isnan(v);
    EXPECT_GT(missing, 0u);
    EXPECT_TRUE(Recipe::fit(dm).apply(dm).allFinite());
}

TEST(Recipe, JsonRoundTrip) {
    const auto dm = testutil::baseline_design(200, 4);
    const auto r = Recipe::fit(dm);
    const auto back = Recipe::from_json(nlohmann::json::parse(r.to_json().dump()));
    EXPECT_EQ(back.apply(dm), r.apply(dm));
    EXPECT_EQ(back.to_json(), r.to_json());
}

TEST(Recipe, Errors) {
    EXPECT_THROW(Recipe().apply(testutil::baseline_design(10, 1)), StateError);
    auto dm = testutil::baseline_design(50, 5);
    const auto r = Recipe::fit(dm);
    dm.columns.pop_back();
    EXPECT_THROW(r.apply(dm), ArgumentError);
    EXPECT_THROW(Recipe::fit(testutil::baseline_design(2, 1)), ArgumentError);
}

TEST(Recipe, FitSeesOnlyItsRows) {
    const auto dm = testutil::baseline_design(300, 6);
    const auto tr_idx = testutil::iota(0, 240);
    const auto before = Recipe::fit(dm.subset(tr_idx)).to_json();
    auto mutated = dm;
    for (auto& c : mutated.columns)
        for (std::size_t i = 240; i < 300; ++i) {
            if (c.categorical) c.category[i] = "mutated";
            else c.numeric[i] = 1e6;
        }
    for (std::size_t i = 240; i < 300; ++i) mutated.labels[i] = 1 - mutated.labels[i];
    EXPECT_EQ(Recipe::fit(mutated.subset(tr_idx)).to_json(), before);
}

TEST(Recipe, TiedCategoryRatesGiveZeroColumn) {
    auto dm = testutil::baseline_design(100, 7);
    auto& g = const_cast<DesignColumn&>(*dm.find("gender"));
    for (std::size_t i = 0; i < dm.rows(); ++i) {
        g.category[i] = i % 2 ? "M" : "F";
        dm.labels[i] = (i / 2) % 2;
    }
    std::size_t warnings = 0;
    auto old = warning_sink();
    warning_sink() = [&](const std::string&) { ++warnings; };
    const auto r = Recipe::fit(dm);
    warning_sink() = old;
    EXPECT_GE(warnings, 1u);
    const Matrix z = r.apply(dm);
    EXPECT_TRUE((z.col(3).array() == 0.0).all());
}
