#include "telanom/trip_prep.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace telanom;

namespace {

TripRecord trip(const std::string& dep, const std::string& arr, double km) {
    TripRecord t;
    t.vin = "A";
    t.trip_id = 1;
    t.departure = *parse_timestamp(dep);
    t.arrival = *parse_timestamp(arr);
    t.distance_km = km;
    t.max_speed_kmh = 100;
    return t;
}

}  // namespace

TEST(Attributes, TableRowA1) {
    const auto a = derive_attributes({trip("2017-05-02 19:04:15", "2017-05-02 19:24:24", 25.0)});
    EXPECT_NEAR(a.values(0, 0), 20.15, 1e-12);
    EXPECT_NEAR(a.values(0, 2), 74.44, 5e-3);
    const auto t = *parse_timestamp("2017-05-02 19:04:15");
    EXPECT_DOUBLE_EQ(time_of_day_seconds(t), 68655.0);
    EXPECT_NEAR(time_of_week_days(t), 1.7946, 1e-4);
}

TEST(Attributes, TableRowA2DurationFloor) {
    const auto a = derive_attributes({trip("2017-05-02 19:04:15", "2017-05-02 19:04:15", 6.4)});
    EXPECT_DOUBLE_EQ(a.values(0, 0), 0.0);
    EXPECT_NEAR(a.values(0, 2), 384.0, 1e-9);
}

TEST(Attributes, MondayMidnightOrigin) {
    const auto t = *parse_timestamp("2017-05-01 00:00:00");
    EXPECT_EQ(time_of_day_seconds(t), 0.0);
    EXPECT_EQ(time_of_week_days(t), 0.0);
}

TEST(Cyclic, Examples) {
    auto c = encode_cyclic(0, 86400);
    EXPECT_NEAR(c.sin_component, 0, 1e-15);
    EXPECT_NEAR(c.cos_component, 1, 1e-15);
    c = encode_cyclic(43200, 86400);
    EXPECT_NEAR(c.sin_component, 0, 1e-12);
    EXPECT_NEAR(c.cos_component, -1, 1e-15);
    c = encode_cyclic(21600, 86400);
    EXPECT_NEAR(c.sin_component, 1, 1e-15);
    EXPECT_NEAR(c.cos_component, 0, 1e-12);
    EXPECT_THROW(encode_cyclic(1, 0), ArgumentError);
}

TEST(Cyclic, UnitCircle) {
    for (int s = 0; s < 86400; s += 7) {
        const auto c = encode_cyclic(s, 86400);
        EXPECT_NEAR(c.sin_component * c.sin_component + c.cos_component * c.cos_component, 1.0, 1e-12);
    }
}

TEST(Normalizer, SmallColumn) {
    Matrix m(3, 1);
    m << 1, 2, 3;
    const auto nz = fit_normalizer(m);
    EXPECT_DOUBLE_EQ(nz.means(0), 2.0);
    EXPECT_DOUBLE_EQ(nz.stds(0), 1.0);
}

TEST(Normalizer, ConstantColumnRejected) {
    Matrix m(3, 2);
    m << 5, 1, 5, 2, 5, 3;
    try {
        fit_normalizer(m);
        FAIL();
    } catch (const DegenerateScaleError& e) {
        EXPECT_EQ(e.column(), 0u);
    }
    EXPECT_NO_THROW(fit_normalizer(m, true));
}

TEST(Normalizer, SelfApplicationStandardizes) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d(4.0, 3.0);
    Matrix m(200, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = d(rng);
    const Matrix z = apply_normalizer(fit_normalizer(m), m);
    for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_NEAR(z.col(j).mean(), 0.0, 1e-12);
        EXPECT_NEAR(std::sqrt(z.col(j).squaredNorm() / 199.0), 1.0, 1e-12);
    }
    const auto again = fit_normalizer(z);
    EXPECT_NEAR(again.means(0), 0.0, 1e-12);
    EXPECT_NEAR(again.stds(0), 1.0, 1e-12);
}

TEST(Normalizer, Arithmetic) {
    Normalizer nz{Vector::Constant(1, 10.0), Vector::Constant(1, 2.0)};
    Matrix m(1, 1);
    m << 14;
    EXPECT_DOUBLE_EQ(apply_normalizer(nz, m)(0, 0), 2.0);
}

TEST(Normalizer, HeldOutMeansNotZero) {
    Matrix tr(3, 1), ho(2, 1);
    tr << 1, 2, 3;
    ho << 10, 12;
    EXPECT_GT(std::abs(apply_normalizer(fit_normalizer(tr), ho).mean()), 1.0);
}
