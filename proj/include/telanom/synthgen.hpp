#pragma once

// Synthetic portfolios. Each vehicle is routine (trips from 1-3 tight
// clusters) or not (diffuse trips), and carries a latent peculiarity u: each
// trip is, with probability u, drawn from a peculiar mode (night, very long or
// very fast). Claims follow
//   P(claim) = sigmoid(logit(base) + trf_effect + weight * u)
// where trf_effect is a centered linear score of the risk factors.

#include "telanom/common.hpp"
#include "telanom/anomaly/iforest.hpp"
#include "telanom/csv.hpp"
#include "telanom/trip_store.hpp"

#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace telanom {

struct SynthConfig {
    std::size_t num_vehicles = 1000;
    std::size_t min_trips = 200;
    std::size_t max_trips = 800;
    double fraction_routine = 0.5;
    double fraction_peculiar = 0.3;
    double peculiarity_claim_weight = 6.0;
    double base_claim_rate = 0.3;
    double trf_effect_scale = 0.3;
    double commute_missing_rate = 0.215;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

struct GroundTruth {
    std::string vin;
    bool is_routine = false;
    double latent_peculiarity = 0.0;
};

struct Portfolio {
    std::vector<TripRecord> trips;
    std::vector<PolicyRecord> policies;
    std::vector<GroundTruth> truth;
};

namespace detail {

inline constexpr Timestamp kSynthEpoch = 1451865600;  // Monday 2016-01-04 00:00:00
inline constexpr int kSynthDays = 364;

struct TripCluster {
    double hour, hour_sd;
    double log_km, log_km_sd;
    std::vector<int> weekdays;  // 0 = Monday
};

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

inline TripRecord make_trip(const std::string& vin, double hour, int day, double km, double avg_speed,
                            double max_speed) {
    TripRecord t;
    t.vin = vin;
    t.departure = kSynthEpoch + static_cast<Timestamp>(day) * 86400 +
                  static_cast<Timestamp>(std::llround(clamp(hour, 0.0, 23.99) * 3600.0));
    const double seconds = std::max(60.0, km / avg_speed * 3600.0);
    t.arrival = t.departure + static_cast<Timestamp>(std::llround(seconds));
    t.distance_km = std::round(km * 100.0) / 100.0;
    t.max_speed_kmh = std::round(max_speed * 10.0) / 10.0;
    return t;
}

// Typical speed profile: short trips are slow, long ones use highways.
inline double typical_avg_speed(double km, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 4.0);
    return clamp(18.0 + 9.0 * std::log1p(km) + noise(rng), 8.0, 95.0);
}

inline double typical_max_speed(double avg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> f(1.3, 1.9);
    return clamp(avg * f(rng), avg + 1.0, 125.0);
}

struct VehicleDraw {
    std::vector<TripRecord> trips;
    PolicyRecord policy;
    GroundTruth truth;
    double trf_score = 0.0;
};

inline VehicleDraw draw_vehicle(const SynthConfig& cfg, std::size_t index) {
    std::mt19937_64 rng(mix_seed(cfg.seed, index));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    char buf[32];
    std::snprintf(buf, sizeof buf, "V%06zu", index + 1);
    VehicleDraw v;
    const std::string vin = buf;
    v.truth.vin = vin;
    v.truth.is_routine = unit(rng) < cfg.fraction_routine;
    const bool peculiar = unit(rng) < cfg.fraction_peculiar;
    v.truth.latent_peculiarity = peculiar ? 0.1 + 0.4 * unit(rng) : 0.03 * unit(rng);

    // Vehicle-level habits.
    const double log_km_center = std::log(8.0) + 0.6 * normal(rng);
    std::vector<TripCluster> clusters;
    if (v.truth.is_routine) {
        const int nc = 1 + static_cast<int>(unit(rng) * 3.0);
        for (int c = 0; c < nc; ++c) {
            TripCluster cl{7.0 + 12.0 * unit(rng), 0.3, log_km_center + 0.4 * normal(rng), 0.1, {}};
            if (unit(rng) < 0.6) cl.weekdays = {0, 1, 2, 3, 4};
            else cl.weekdays = {static_cast<int>(unit(rng) * 7.0) % 7};
            clusters.push_back(cl);
        }
    } else {
        for (int c = 0; c < 4; ++c)
            clusters.push_back({6.0 + 16.0 * unit(rng), 2.5, log_km_center + 0.3 * normal(rng), 0.8,
                                {0, 1, 2, 3, 4, 5, 6}});
    }

    const std::size_t n_trips =
        cfg.min_trips + static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.max_trips - cfg.min_trips + 1));
    std::vector<TripRecord> trips;
    trips.reserve(n_trips);
    for (std::size_t i = 0; i < n_trips; ++i) {
        double hour, km, avg, vmax;
        int day;
        if (unit(rng) < v.truth.latent_peculiarity) {
            const int mode = static_cast<int>(unit(rng) * 3.0) % 3;
            day = static_cast<int>(unit(rng) * kSynthDays) % kSynthDays;
            hour = 8.0 + 12.0 * unit(rng);
            km = std::exp(log_km_center + 0.5 * normal(rng));
            avg = typical_avg_speed(km, rng);
            vmax = typical_max_speed(avg, rng);
            if (mode == 0) {
                hour = 4.0 * unit(rng);  // night
            } else if (mode == 1) {
                km = 60.0 + 60.0 * unit(rng);  // long
                avg = typical_avg_speed(km, rng);
                vmax = typical_max_speed(avg, rng);
            } else {
                vmax = 135.0 + 35.0 * unit(rng);  // fast
                avg = std::min(avg * 1.4, vmax - 5.0);
            }
        } else {
            const auto& cl = clusters[static_cast<std::size_t>(unit(rng) * static_cast<double>(clusters.size())) %
                                      clusters.size()];
            const int week = static_cast<int>(unit(rng) * (kSynthDays / 7)) % (kSynthDays / 7);
            const int wd = cl.weekdays[static_cast<std::size_t>(unit(rng) * static_cast<double>(cl.weekdays.size())) %
                                       cl.weekdays.size()];
            day = week * 7 + wd;
            hour = clamp(cl.hour + cl.hour_sd * normal(rng), 5.0, 23.5);
            km = clamp(std::exp(cl.log_km + cl.log_km_sd * normal(rng)), 0.3, 150.0);
            avg = typical_avg_speed(km, rng);
            vmax = typical_max_speed(avg, rng);
        }
        trips.push_back(make_trip(vin, hour, day, km, avg, vmax));
    }
    std::sort(trips.begin(), trips.end(),
              [](const TripRecord& a, const TripRecord& b) { return a.departure < b.departure; });
    for (std::size_t i = 0; i < trips.size(); ++i) trips[i].trip_id = static_cast<std::int64_t>(i + 1);
    v.trips = std::move(trips);

    // Traditional risk factors.
    auto& p = v.policy;
    p.vin = vin;
    p.annual_distance = std::round(std::exp(std::log(15000.0) + 0.4 * normal(rng)));
    const double commute = std::round(clamp(std::exp(std::log(15.0) + 0.7 * normal(rng)), 0.5, 120.0) * 10.0) / 10.0;
    if (unit(rng) >= cfg.commute_missing_rate) p.commute_distance = commute;
    std::poisson_distribution<int> conv(0.3);
    p.conv_count_3_yrs_minor = conv(rng);
    p.gender = unit(rng) < 0.5 ? "M" : "F";
    const double ms = unit(rng);
    p.marital_status = ms < 0.45 ? "married" : ms < 0.85 ? "single" : ms < 0.97 ? "divorced" : "widowed";
    const double pp = unit(rng);
    p.pmt_plan = pp < 0.6 ? "monthly" : pp < 0.97 ? "annual" : "quarterly";
    p.veh_age = std::round(20.0 * unit(rng));
    const double vu = unit(rng);
    p.veh_use = vu < 0.55 ? "personal" : vu < 0.97 ? "commute" : "business";
    p.years_licensed = std::round(1.0 + 49.0 * unit(rng));
    p.years_claim_free = std::round(unit(rng) * p.years_licensed);

    // Centered linear effect of the risk factors (roughly unit variance before scaling).
    v.trf_score = -0.8 * (p.years_licensed - 25.5) / 14.1 + 0.6 * (p.conv_count_3_yrs_minor - 0.3) / 0.55 +
                  0.4 * (p.gender == "M" ? 0.5 : -0.5) * 2.0 + 0.3 * (p.marital_status == "single" ? 0.6 : -0.4) +
                  0.3 * (std::log(p.annual_distance) - std::log(15000.0)) / 0.4;
    return v;
}

}  // namespace detail

inline Portfolio generate_portfolio(const SynthConfig& cfg) {
    if (cfg.num_vehicles < 1) throw ArgumentError("synth: need at least one vehicle");
    if (cfg.min_trips < 1 || cfg.max_trips < cfg.min_trips) throw ArgumentError("synth: invalid trip range");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(cfg.fraction_routine) || !in01(cfg.fraction_peculiar) || !in01(cfg.commute_missing_rate))
        throw ArgumentError("synth: fractions must lie in [0,1]");
    if (!(cfg.base_claim_rate > 0.0 && cfg.base_claim_rate < 1.0))
        throw ArgumentError("synth: base claim rate must lie in (0,1)");
    if (!std::isfinite(cfg.peculiarity_claim_weight) || !std::isfinite(cfg.trf_effect_scale))
        throw ArgumentError("synth: non-finite weight");

    std::vector<detail::VehicleDraw> draws(cfg.num_vehicles);
    parallel_for(cfg.num_vehicles, cfg.jobs, [&](std::size_t i) { draws[i] = detail::draw_vehicle(cfg, i); });

    // Claims use a separate stream so habits and labels stay decoupled.
    std::mt19937_64 rng(detail::mix_seed(cfg.seed, 0xC1A1Au));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double base = std::log(cfg.base_claim_rate / (1.0 - cfg.base_claim_rate));
    Portfolio out;
    for (auto& d : draws) {
        const double eta = base + cfg.trf_effect_scale * d.trf_score +
                           cfg.peculiarity_claim_weight * d.truth.latent_peculiarity;
        d.policy.claim_ind = unit(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
        out.trips.insert(out.trips.end(), std::make_move_iterator(d.trips.begin()),
                         std::make_move_iterator(d.trips.end()));
        out.policies.push_back(std::move(d.policy));
        out.truth.push_back(d.truth);
    }
    return out;
}

inline void write_ground_truth_csv(std::ostream& out, const std::vector<GroundTruth>& truth) {
    out << "vin,is_routine,latent_peculiarity\n";
    for (const auto& g : truth) out << g.vin << ',' << (g.is_routine ? 1 : 0) << ',' << csv::fmt(g.latent_peculiarity) << '\n';
}

}  // namespace telanom
