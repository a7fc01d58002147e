#pragma once

#include "telanom/synthgen.hpp"
#include "telanom/tabular/design_matrix.hpp"

#include <set>

namespace testutil {

// Small synthetic portfolio (few trips per vehicle) turned into a baseline design.
inline telanom::DesignMatrix baseline_design(std::size_t vehicles, std::uint64_t seed) {
    telanom::SynthConfig cfg;
    cfg.num_vehicles = vehicles;
    cfg.min_trips = 5;
    cfg.max_trips = 10;
    cfg.seed = seed;
    const auto pf = telanom::generate_portfolio(cfg);
    std::set<std::string> vins;
    for (const auto& p : pf.policies) vins.insert(p.vin);
    return telanom::build_design_matrix(pf.policies, vins, telanom::distance_by_vin(pf.trips));
}

inline std::vector<std::size_t> iota(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> out;
    for (std::size_t i = lo; i < hi; ++i) out.push_back(i);
    return out;
}

}  // namespace testutil

#include "telanom/common.hpp"
#include "oracles/logistic.hpp"

#include <random>

namespace testutil {

struct LogisticData {
    telanom::Matrix x;
    telanom::Vector y;
    oracle::Rows rows;
    std::vector<double> labels;
};

// Centered, mildly correlated Gaussian design with labels from a logistic model.
inline LogisticData logistic_data(std::size_t n, std::size_t p, std::uint64_t seed, double signal = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LogisticData out;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < out.x.rows(); ++i) {
        const double common = d(rng);
        for (Eigen::Index j = 0; j < out.x.cols(); ++j) out.x(i, j) = 0.4 * common + d(rng);
    }
    out.x.rowwise() -= out.x.colwise().mean();
    telanom::Vector beta(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < beta.size(); ++j) beta(j) = signal * (j % 2 ? -1.0 : 1.0) / (1.0 + 0.3 * j);
    out.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < out.x.rows(); ++i) {
        const double eta = out.x.row(i).dot(beta);
        out.y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        out.rows.emplace_back();
        for (Eigen::Index j = 0; j < out.x.cols(); ++j) out.rows.back().push_back(out.x(i, j));
        out.labels.push_back(out.y(i));
    }
    return out;
}

}  // namespace testutil
