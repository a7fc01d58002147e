#include "telanom/enet_glm.hpp"

#include "helpers.hpp"
#include "oracles/logistic.hpp"

#include <gtest/gtest.h>

using namespace telanom;

namespace {

SolverConfig quiet() {
    SolverConfig c;
    c.warn_nonconvergence = false;
    return c;
}

}  // namespace

TEST(Risk, Examples) {
    const auto d = testutil::logistic_data(50, 3, 1);
    EXPECT_NEAR(empirical_risk(Vector::Zero(3), d.x, d.y), std::log(2.0), 1e-15);
    Matrix x(1, 1);
    x << 0.5;
    Vector y(1);
    y << 1;
    EXPECT_NEAR(empirical_risk(Vector::Ones(1), x, y), std::log1p(std::exp(-0.5)), 1e-15);
    EXPECT_NEAR(empirical_risk(Vector::Ones(1), x, y), 0.4741, 1e-4);
    Vector big(1);
    big << 1e3;
    EXPECT_LT(empirical_risk(big, x, y), 1e-100);
}

TEST(Fit, LambdaZeroMatchesNewton) {
    const auto d = testutil::logistic_data(2000, 10, 2);
    const auto want = oracle::newton_logistic(d.rows, d.labels);
    for (double alpha : {0.0, 0.5, 1.0}) {
        const auto fit = enet_fit(d.x, d.y, 0.0, alpha);
        ASSERT_TRUE(fit.converged);
        for (std::size_t j = 0; j < want.size(); ++j)
            EXPECT_NEAR(fit.coefficients(static_cast<Eigen::Index>(j)), want[j], 1e-4);
    }
    const auto mle = fit_mle(d.x, d.y);
    for (std::size_t j = 0; j < want.size(); ++j)
        EXPECT_NEAR(mle.coefficients(static_cast<Eigen::Index>(j)), want[j], 1e-6);
}

TEST(Fit, HugeLambdaLassoIsZero) {
    const auto d = testutil::logistic_data(500, 6, 3);
    const auto fit = enet_fit(d.x, d.y, 1e3, 1.0);
    EXPECT_TRUE(fit.converged);
    for (Eigen::Index j = 0; j < 6; ++j) EXPECT_EQ(fit.coefficients(j), 0.0);
}

TEST(Fit, ScalarGoldenSection) {
    const auto d = testutil::logistic_data(5000, 1, 4, 1.0);
    const Vector col = d.x.col(0) / std::sqrt(d.x.col(0).squaredNorm() / (d.x.rows() - 1.0));
    Matrix x = col;
    std::vector<double> xs(col.data(), col.data() + col.size());
    for (double alpha : {1.0, 0.5}) {
        for (double lambda : {0.01, 0.1}) {
            const double want = oracle::scalar_enet(xs, d.labels, lambda, alpha);
            const auto fit = enet_fit(x, d.y, lambda, alpha);
            EXPECT_NEAR(fit.coefficients(0), want, 1e-6) << lambda << " " << alpha;
        }
    }
}

TEST(Fit, RidgeMatchesGradientDescent) {
    const auto d = testutil::logistic_data(400, 4, 5);
    for (double lambda : {1e-3, 0.05}) {
        const auto want = oracle::ridge_gd(d.rows, d.labels, lambda);
        const auto fit = enet_fit(d.x, d.y, lambda, 0.0);
        for (std::size_t j = 0; j < want.size(); ++j)
            EXPECT_NEAR(fit.coefficients(static_cast<Eigen::Index>(j)), want[j], 1e-7);
    }
}

TEST(Fit, KktAcrossGrid) {
    const auto d = testutil::logistic_data(600, 8, 6);
    for (int i = 0; i < 50; i += 7) {
        const double lambda = std::pow(10.0, -10.0 + 10.0 * i / 49.0);
        for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const auto fit = enet_fit(d.x, d.y, lambda, alpha);
            ASSERT_TRUE(fit.converged) << lambda << " " << alpha;
            EXPECT_LE(kkt_check(fit, d.x, d.y), 1e-6);
        }
    }
}

TEST(Kkt, PerturbationIncreasesResidual) {
    const auto d = testutil::logistic_data(600, 5, 7);
    const auto fit = enet_fit(d.x, d.y, 0.01, 0.5);
    const double base = kkt_check(fit, d.x, d.y);
    for (Eigen::Index j = 0; j < 5; ++j) {
        Vector b = fit.coefficients;
        b(j) += 0.1;
        EXPECT_GT(kkt_residual(b, d.x, d.y, 0.01, 0.5), base);
    }
}

TEST(Kkt, LambdaZeroIsMaxGradient) {
    const auto d = testutil::logistic_data(100, 3, 8);
    Vector b(3);
    b << 0.2, -0.1, 0.4;
    const Vector eta = d.x * b;
    Vector r(eta.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = sigmoid(eta(i)) - d.y(i);
    const Vector g = d.x.transpose() * r / 100.0;
    EXPECT_NEAR(kkt_residual(b, d.x, d.y, 0.0, 0.3), g.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fit, DuplicatedColumnsShareWeight) {
    const auto d = testutil::logistic_data(800, 3, 9);
    Matrix x(d.x.rows(), 4);
    x << d.x, d.x.col(1);
    for (double lambda : {1e-4, 1e-2}) {
        const auto fit = enet_fit(x, d.y, lambda, 0.0);
        EXPECT_NEAR(fit.coefficients(1), fit.coefficients(3), 1e-6);
    }
}

TEST(Fit, ObjectiveNeverIncreases) {
    const auto d = testutil::logistic_data(1000, 30, 10);
    Matrix x(d.x.rows(), 40);
    x << d.x, d.x.leftCols(10) + 1e-3 * d.x.rightCols(10);  // near-collinear block
    x.rowwise() -= x.colwise().mean();
    for (double alpha : {0.0, 0.5, 1.0}) {
        for (double lambda : {1e-8, 1e-3, 0.1}) {
            detail::FitTrace trace;
            const auto fit = enet_fit(x, d.y, lambda, alpha, quiet(), nullptr, &trace);
            ASSERT_FALSE(trace.objective.empty());
            for (std::size_t i = 1; i < trace.objective.size(); ++i)
                EXPECT_LE(trace.objective[i], trace.objective[i - 1]);
            EXPECT_LE(fit.final_objective, enet_objective(Vector::Zero(40), x, d.y, lambda, alpha));
        }
    }
}

TEST(Fit, WarmStartSameAnswer) {
    const auto d = testutil::logistic_data(500, 6, 11);
    const auto cold = enet_fit(d.x, d.y, 1e-3, 0.75);
    const Vector start = Vector::Constant(6, 0.3);
    const auto warm = enet_fit(d.x, d.y, 1e-3, 0.75, {}, &start);
    EXPECT_LT((cold.coefficients - warm.coefficients).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Fit, InputErrors) {
    const auto d = testutil::logistic_data(50, 2, 12);
    EXPECT_THROW(enet_fit(d.x, d.y, -1.0, 0.5), ArgumentError);
    EXPECT_THROW(enet_fit(d.x, d.y, 0.1, 1.5), ArgumentError);
    Matrix shifted = d.x.array() + 1.0;
    EXPECT_THROW(enet_fit(shifted, d.y, 0.1, 0.5), ArgumentError);
    EXPECT_THROW(enet_fit(d.x, d.y.head(10), 0.1, 0.5), ArgumentError);
}

TEST(Predict, Examples) {
    FittedClassifier f;
    f.coefficients = Vector::Zero(2);
    std::vector<double> x = {3.0, -7.0};
    EXPECT_EQ(predict_proba(f, x), 0.5);
    f.coefficients << std::log(3.0), 0.0;
    std::vector<double> one = {1.0, 5.0};
    EXPECT_NEAR(predict_proba(f, one), 0.75, 1e-15);
    std::vector<double> more = {1.5, 5.0};
    EXPECT_GT(predict_proba(f, more), predict_proba(f, one));
    std::vector<double> bad = {1.0};
    EXPECT_THROW(predict_proba(f, bad), ArgumentError);
}

TEST(Serialize, JsonRoundTrip) {
    const auto d = testutil::logistic_data(300, 4, 13);
    auto fit = enet_fit(d.x, d.y, 1e-2, 0.5);
    fit.features = {"a", "b", "c", "d"};
    fit.recipe_ref = "abc";
    const auto back = classifier_from_json(nlohmann::json::parse(to_json(fit).dump()));
    EXPECT_EQ(back.coefficients, fit.coefficients);
    EXPECT_EQ(back.features, fit.features);
    EXPECT_EQ(back.lambda, fit.lambda);
    EXPECT_EQ(back.recipe_ref, fit.recipe_ref);
    EXPECT_THROW(classifier_from_json(nlohmann::json{{"format", "x"}}), ValidationError);
}
