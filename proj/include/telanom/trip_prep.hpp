#pragma once

// The eight trip attributes fed to the anomaly detectors, plus z-score
// normalization.

#include "telanom/common.hpp"
#include "telanom/trip_store.hpp"

#include <array>
#include <numbers>
#include <string>
#include <vector>

namespace telanom {

inline constexpr std::size_t kNumTripAttributes = 8;

inline constexpr std::array<const char*, kNumTripAttributes> kTripAttributeNames = {
    "duration",         "distance",         "avg_speed",        "max_speed",
    "time_of_day_sin",  "time_of_day_cos",  "time_of_week_sin", "time_of_week_cos"};

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDaysPerWeek = 7.0;
// Average speed divides by at least one minute of driving.
inline constexpr double kMinDurationHours = 1.0 / 60.0;

struct CyclicPair {
    double sin_component;
    double cos_component;
};

inline CyclicPair encode_cyclic(double value, double period) {
    if (!(period > 0.0)) throw ArgumentError("cyclic period must be positive");
    const double angle = 2.0 * std::numbers::pi * value / period;
    return {std::sin(angle), std::cos(angle)};
}

// Seconds since midnight of t, in [0, 86400).
inline double time_of_day_seconds(Timestamp t) {
    Timestamp r = t % 86400;
    if (r < 0) r += 86400;
    return static_cast<double>(r);
}

// Days since the preceding Monday 00:00:00, in [0, 7). 1970-01-01 was a Thursday.
inline double time_of_week_days(Timestamp t) {
    const Timestamp secs_per_week = 7 * 86400;
    Timestamp r = (t + 3 * 86400) % secs_per_week;
    if (r < 0) r += secs_per_week;
    return static_cast<double>(r) / kSecondsPerDay;
}

// Raw (pre-normalization) attribute rows, aligned with the input trip order.
struct TripAttributes {
    std::vector<std::string> vins;
    std::vector<std::int64_t> trip_ids;
    Matrix values;  // n x 8, columns in kTripAttributeNames order
};

inline void fill_attribute_row(const TripRecord& t, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
    const double minutes = static_cast<double>(t.arrival - t.departure) / 60.0;
    const double hours = std::max(minutes / 60.0, kMinDurationHours);
    const auto tod = encode_cyclic(time_of_day_seconds(t.departure), kSecondsPerDay);
    const auto tow = encode_cyclic(time_of_week_days(t.departure), kDaysPerWeek);
    row << minutes, t.distance_km, t.distance_km / hours, t.max_speed_kmh, tod.sin_component,
        tod.cos_component, tow.sin_component, tow.cos_component;
}

inline TripAttributes derive_attributes(const std::vector<TripRecord>& trips) {
    TripAttributes out;
    out.values.resize(static_cast<Eigen::Index>(trips.size()), kNumTripAttributes);
    out.vins.reserve(trips.size());
    out.trip_ids.reserve(trips.size());
    for (std::size_t i = 0; i < trips.size(); ++i) {
        out.vins.push_back(trips[i].vin);
        out.trip_ids.push_back(trips[i].trip_id);
        fill_attribute_row(trips[i], out.values.row(static_cast<Eigen::Index>(i)));
    }
    return out;
}

struct Normalizer {
    Vector means;
    Vector stds;  // sample standard deviation, strictly positive
};

// Per-column mean and (n-1) standard deviation. A zero-variance column is an
// error unless allow_constant is set, in which case its scale is taken as 1 so
// the normalized column is identically zero.
inline Normalizer fit_normalizer(const Matrix& m, bool allow_constant = false) {
    if (m.rows() < 2) throw ArgumentError("normalizer needs at least 2 rows");
    Normalizer nz;
    nz.means = m.colwise().mean().transpose();
    nz.stds.resize(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double ss = (m.col(j).array() - nz.means(j)).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(m.rows() - 1));
        // Relative threshold so accumulated rounding in a constant column is not mistaken
        // for spread.
        const double scale = std::max(1.0, std::abs(nz.means(j)));
        if (!(sd > 1e-12 * scale)) {
            if (!allow_constant)
                throw DegenerateScaleError(
                    "column " + std::to_string(j) +
                        (static_cast<std::size_t>(m.cols()) == kNumTripAttributes
                             ? std::string(" (") + kTripAttributeNames[static_cast<std::size_t>(j)] + ")"
                             : std::string{}) +
                        " has zero variance",
                    static_cast<std::size_t>(j));
            nz.stds(j) = 1.0;
        } else {
            nz.stds(j) = sd;
        }
    }
    return nz;
}

inline Matrix apply_normalizer(const Normalizer& nz, const Matrix& m) {
    if (m.cols() != nz.means.size()) throw ArgumentError("normalizer column count mismatch");
    return ((m.rowwise() - nz.means.transpose()).array().rowwise() / nz.stds.transpose().array())
        .matrix();
}

struct TripFeatureMatrix {
    std::vector<std::string> vins;
    std::vector<std::int64_t> trip_ids;
    Matrix attributes;  // normalized
    Normalizer normalization;
};

inline TripFeatureMatrix apply_normalizer(const Normalizer& nz, const TripAttributes& raw) {
    return {raw.vins, raw.trip_ids, apply_normalizer(nz, raw.values), nz};
}

inline void write_attributes_csv(std::ostream& out, const TripAttributes& a) {
    out << "vin,trip_id";
    for (const auto* name : kTripAttributeNames) out << ',' << name;
    out << '\n';
    for (Eigen::Index i = 0; i < a.values.rows(); ++i) {
        out << a.vins[static_cast<std::size_t>(i)] << ',' << a.trip_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < a.values.cols(); ++j) out << ',' << csv::fmt(a.values(i, j));
        out << '\n';
    }
}

}  // namespace telanom
