#pragma once

// Routine (local) and peculiarity (global) anomaly profiles, and the quantile
// features summarizing them.

#include "telanom/anomaly/iforest.hpp"
#include "telanom/anomaly/lof.hpp"
#include "telanom/anomaly/mahalanobis.hpp"
#include "telanom/common.hpp"
#include "telanom/trip_prep.hpp"
#include "telanom/trip_store.hpp"

#include <array>
#include <map>
#include <numeric>
#include <span>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace telanom {

enum class Scheme { Local, Global };
enum class Algorithm { Mahalanobis, Lof, IForest };

inline std::string to_string(Scheme s) { return s == Scheme::Local ? "local" : "global"; }

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Mahalanobis: return "mahalanobis";
        case Algorithm::Lof: return "lof";
        case Algorithm::IForest: return "iforest";
    }
    return "?";
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "local") return Scheme::Local;
    if (s == "global") return Scheme::Global;
    throw ArgumentError("unknown scheme '" + s + "' (expected local|global)");
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "mahalanobis") return Algorithm::Mahalanobis;
    if (s == "lof") return Algorithm::Lof;
    if (s == "iforest" || s == "if") return Algorithm::IForest;
    throw ArgumentError("unknown algorithm '" + s + "' (expected mahalanobis|lof|iforest)");
}

struct AnomalyProfile {
    std::string vin;
    Scheme scheme = Scheme::Local;
    Algorithm algorithm = Algorithm::Mahalanobis;
    std::vector<std::int64_t> trip_ids;  // ascending
    std::vector<double> scores;          // aligned with trip_ids
};

using ProfileMap = std::map<std::string, AnomalyProfile>;

// Local parameters are fractions of each vehicle's trip count; global ones
// are absolute.
struct DetectorParams {
    double k_frac = 0.35;
    double b_frac = 0.85;
    std::size_t k = 50;
    std::size_t b = 400;
    std::size_t num_trees = 100;
    double ridge_eps = 0.0;
    // Used only in the local scheme when a vehicle's covariance is singular.
    double fallback_ridge = 1e-6;
    std::uint64_t seed = 42;
    unsigned jobs = 1;
};

inline constexpr std::size_t kMinLocalTrips = 5;

inline std::size_t local_k(double k_frac, std::size_t n) {
    const auto k = static_cast<std::size_t>(std::max<long long>(1, std::llround(k_frac * static_cast<double>(n))));
    return std::min(k, n - 1);
}

inline std::size_t local_b(double b_frac, std::size_t n) {
    const auto b = static_cast<std::size_t>(std::max<long long>(2, std::llround(b_frac * static_cast<double>(n))));
    return std::min(b, n);
}

inline std::size_t local_min_trips(Algorithm a) {
    return a == Algorithm::Mahalanobis ? std::max(kMinLocalTrips, kNumTripAttributes + 1)
                                       : kMinLocalTrips;
}

namespace detail {

// FNV-1a; a stable per-vehicle seed stream.
inline std::uint64_t hash_vin(const std::string& vin) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : vin) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Mahalanobis on the columns that vary in the raw data; constant columns
// carry no information about a vehicle's own trips.
inline Vector local_mahalanobis(const Matrix& raw, const Matrix& z, const DetectorParams& p,
                                bool& used_fallback) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
        if (raw.col(j).maxCoeff() > raw.col(j).minCoeff()) keep.push_back(j);
    if (keep.empty()) return Vector::Zero(z.rows());
    Matrix sub(z.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = z.col(keep[c]);
    try {
        return mahalanobis_fit(sub, p.ridge_eps).score_rows(sub);
    } catch (const SingularityError&) {
        used_fallback = true;
        return mahalanobis_fit(sub, std::max(p.ridge_eps, p.fallback_ridge)).score_rows(sub);
    }
}

}  // namespace detail

// Scores one vehicle's trips against that vehicle's own trips only.
inline AnomalyProfile local_profile(const std::string& vin, const std::vector<TripRecord>& trips,
                                    Algorithm algorithm, const DetectorParams& p,
                                    bool* used_fallback = nullptr, bool* too_few = nullptr) {
    AnomalyProfile prof;
    prof.vin = vin;
    prof.scheme = Scheme::Local;
    prof.algorithm = algorithm;
    for (const auto& t : trips) prof.trip_ids.push_back(t.trip_id);
    const std::size_t n = trips.size();
    if (n < local_min_trips(algorithm)) {
        prof.scores.assign(n, 0.0);
        if (too_few) *too_few = true;
        return prof;
    }
    const TripAttributes raw = derive_attributes(trips);
    const Normalizer nz = fit_normalizer(raw.values, /*allow_constant=*/true);
    const Matrix z = apply_normalizer(nz, raw.values);
    Vector s;
    switch (algorithm) {
        case Algorithm::Mahalanobis: {
            bool fb = false;
            s = detail::local_mahalanobis(raw.values, z, p, fb);
            if (fb && used_fallback) *used_fallback = true;
            break;
        }
        case Algorithm::Lof:
            s = lof_scores(z, LofParams{local_k(p.k_frac, n)});
            break;
        case Algorithm::IForest: {
            const auto forest = iforest_fit(z, p.num_trees, local_b(p.b_frac, n),
                                            detail::mix_seed(p.seed, detail::hash_vin(vin)));
            s = forest.score_rows(z);
            break;
        }
    }
    prof.scores.assign(s.data(), s.data() + s.size());
    return prof;
}

inline ProfileMap local_profiles(const std::map<std::string, std::vector<TripRecord>>& trips_by_vin,
                                 Algorithm algorithm, const DetectorParams& p) {
    std::vector<const std::pair<const std::string, std::vector<TripRecord>>*> items;
    for (const auto& kv : trips_by_vin) items.push_back(&kv);
    std::vector<AnomalyProfile> out(items.size());
    std::vector<char> fallback(items.size(), 0), few(items.size(), 0);
    parallel_for(items.size(), p.jobs, [&](std::size_t i) {
        bool fb = false, tf = false;
        out[i] = local_profile(items[i]->first, items[i]->second, algorithm, p, &fb, &tf);
        fallback[i] = fb;
        few[i] = tf;
    });
    ProfileMap result;
    std::size_t n_fb = 0, n_few = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        n_fb += fallback[i];
        n_few += few[i];
        result.emplace(out[i].vin, std::move(out[i]));
    }
    if (n_few > 0)
        warn(std::to_string(n_few) + " vehicle(s) have fewer than " +
             std::to_string(local_min_trips(algorithm)) + " trips; assigned zero routine profiles");
    if (n_fb > 0)
        warn(std::to_string(n_fb) + " vehicle(s) had a singular trip covariance; refitted with ridge " +
             csv::fmt(std::max(p.ridge_eps, p.fallback_ridge)));
    return result;
}

// Portfolio-level inputs for the global scheme: one normalizer fitted on the
// training trips, applied to both training and held-out trips.
struct GlobalInputs {
    TripFeatureMatrix train;
    TripFeatureMatrix holdout;
};

inline GlobalInputs build_global_inputs(const std::vector<TripRecord>& trips,
                                        const std::set<std::string>& train_vins) {
    std::vector<TripRecord> tr, ho;
    for (const auto& t : trips) (train_vins.count(t.vin) ? tr : ho).push_back(t);
    const TripAttributes raw_tr = derive_attributes(tr);
    const Normalizer nz = fit_normalizer(raw_tr.values);
    return {apply_normalizer(nz, raw_tr), apply_normalizer(nz, derive_attributes(ho))};
}

// One model fitted on the training trips; training trips are scored in-sample,
// held-out trips against the fitted model. Scores are regrouped per vehicle.
inline ProfileMap global_profiles(const TripFeatureMatrix& train, const TripFeatureMatrix& holdout,
                                  Algorithm algorithm, const DetectorParams& p) {
    const Eigen::Index n = train.attributes.rows();
    Vector s_train, s_hold;
    switch (algorithm) {
        case Algorithm::Mahalanobis: {
            const auto model = mahalanobis_fit(train.attributes, p.ridge_eps);
            s_train = model.score_rows(train.attributes);
            s_hold = model.score_rows(holdout.attributes);
            break;
        }
        case Algorithm::Lof: {
            if (p.k >= static_cast<std::size_t>(n))
                throw ArgumentError("global lof: k = " + std::to_string(p.k) +
                                    " must be below the training trip count " + std::to_string(n));
            const LofModel model(train.attributes, LofParams{p.k}, p.jobs);
            s_train = model.training_scores();
            s_hold = model.score_rows(holdout.attributes, p.jobs);
            break;
        }
        case Algorithm::IForest: {
            const auto forest = iforest_fit(train.attributes, p.num_trees, p.b, p.seed, p.jobs);
            s_train = forest.score_rows(train.attributes, p.jobs);
            s_hold = forest.score_rows(holdout.attributes, p.jobs);
            break;
        }
    }
    ProfileMap out;
    auto add = [&](const TripFeatureMatrix& m, const Vector& s) {
        for (std::size_t i = 0; i < m.vins.size(); ++i) {
            auto& prof = out[m.vins[i]];
            prof.vin = m.vins[i];
            prof.scheme = Scheme::Global;
            prof.algorithm = algorithm;
            prof.trip_ids.push_back(m.trip_ids[i]);
            prof.scores.push_back(s(static_cast<Eigen::Index>(i)));
        }
    };
    add(train, s_train);
    add(holdout, s_hold);
    for (auto& [vin, prof] : out) {
        std::vector<std::size_t> order(prof.trip_ids.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return prof.trip_ids[a] < prof.trip_ids[b]; });
        AnomalyProfile sorted = prof;
        for (std::size_t i = 0; i < order.size(); ++i) {
            sorted.trip_ids[i] = prof.trip_ids[order[i]];
            sorted.scores[i] = prof.scores[order[i]];
        }
        prof = std::move(sorted);
    }
    return out;
}

// Profiles for every vehicle with trips. Global models are fitted on the
// trips of `train_vins` only; local ones never look beyond a vehicle.
inline ProfileMap compute_profiles(const std::vector<TripRecord>& trips, const std::set<std::string>& train_vins,
                                   Scheme scheme, Algorithm algorithm, const DetectorParams& p) {
    if (scheme == Scheme::Local) return local_profiles(group_by_vin(trips), algorithm, p);
    const GlobalInputs in = build_global_inputs(trips, train_vins);
    return global_profiles(in.train, in.holdout, algorithm, p);
}

// --- quantile features ---------------------------------------------------

inline constexpr std::size_t kNumQuantiles = 11;
inline constexpr std::size_t kNumInteractions = kNumQuantiles * (kNumQuantiles - 1) / 2;

using Quantiles = std::array<double, kNumQuantiles>;
using Interactions = std::array<double, kNumInteractions>;

// Linear interpolation between order statistics (type 7).
inline double quantile_type7(const std::vector<double>& sorted, double prob) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Quantiles extract_quantiles(const std::vector<double>& scores) {
    if (scores.empty()) throw ArgumentError("extract_quantiles: empty profile");
    std::vector<double> s = scores;
    std::sort(s.begin(), s.end());
    Quantiles q{};
    for (std::size_t i = 0; i < kNumQuantiles; ++i)
        q[i] = quantile_type7(s, static_cast<double>(i) / 10.0);
    q.front() = s.front();
    q.back() = s.back();
    return q;
}

inline Quantiles extract_quantiles(const AnomalyProfile& p) { return extract_quantiles(p.scores); }

inline Interactions pairwise_interactions(std::span<const double> q) {
    if (q.size() != kNumQuantiles)
        throw ArgumentError("pairwise_interactions: expected 11 quantiles, got " + std::to_string(q.size()));
    Interactions out{};
    std::size_t e = 0;
    for (std::size_t i = 0; i < kNumQuantiles; ++i)
        for (std::size_t j = i + 1; j < kNumQuantiles; ++j) out[e++] = q[i] * q[j];
    return out;
}

inline std::string quantile_name(std::size_t i) { return "q" + std::to_string(10 * i); }

inline std::vector<std::string> quantile_names() {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kNumQuantiles; ++i) out.push_back(quantile_name(i));
    return out;
}

inline std::vector<std::string> interaction_names() {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kNumQuantiles; ++i)
        for (std::size_t j = i + 1; j < kNumQuantiles; ++j)
            out.push_back(quantile_name(i) + "_x_" + quantile_name(j));
    return out;
}

struct ProfileFeatures {
    std::string vin;
    Quantiles quantiles{};
    Interactions interactions{};
};

inline ProfileFeatures profile_features(const AnomalyProfile& p) {
    ProfileFeatures f;
    f.vin = p.vin;
    f.quantiles = extract_quantiles(p);
    f.interactions = pairwise_interactions(f.quantiles);
    return f;
}

// Features for every vin in `vins`; a vin without trips gets all-zero features.
inline std::map<std::string, ProfileFeatures> features_for(const ProfileMap& profiles,
                                                           const std::vector<std::string>& vins) {
    std::map<std::string, ProfileFeatures> out;
    for (const auto& vin : vins) {
        const auto it = profiles.find(vin);
        if (it == profiles.end() || it->second.scores.empty()) {
            ProfileFeatures f;
            f.vin = vin;
            out.emplace(vin, f);
        } else {
            out.emplace(vin, profile_features(it->second));
        }
    }
    return out;
}

inline void write_profiles_csv(std::ostream& out, const ProfileMap& profiles) {
    out << "vin,scheme,algorithm,trip_id,score\n";
    for (const auto& [vin, p] : profiles)
        for (std::size_t i = 0; i < p.scores.size(); ++i)
            out << vin << ',' << to_string(p.scheme) << ',' << to_string(p.algorithm) << ','
                << p.trip_ids[i] << ',' << csv::fmt(p.scores[i]) << '\n';
}

inline void write_features_csv(std::ostream& out,
                               const std::map<std::string, ProfileFeatures>& features) {
    out << "vin";
    for (const auto& n : quantile_names()) out << ',' << n;
    for (const auto& n : interaction_names()) out << ',' << n;
    out << '\n';
    for (const auto& [vin, f] : features) {
        out << vin;
        for (double v : f.quantiles) out << ',' << csv::fmt(v);
        for (double v : f.interactions) out << ',' << csv::fmt(v);
        out << '\n';
    }
}

}  // namespace telanom
