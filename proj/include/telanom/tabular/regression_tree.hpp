#pragma once

// CART regression trees and the bagged committee used to impute a missing
// numeric column.

#include "telanom/common.hpp"

#include <json.hpp>

#include <numeric>
#include <random>
#include <vector>

namespace telanom {

struct TreeConfig {
    std::size_t min_leaf = 5;
    std::size_t max_depth = 0;  // 0 = unlimited
};

struct RegressionTree {
    std::vector<int> feature;  // < 0 marks a leaf
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        std::size_t node = 0;
        while (feature[node] >= 0)
            node = static_cast<std::size_t>(x(feature[node]) <= threshold[node] ? left[node] : right[node]);
        return value[node];
    }
};

namespace detail {

class CartBuilder {
public:
    CartBuilder(const Matrix& x, const Vector& y, TreeConfig cfg) : x_(x), y_(y), cfg_(cfg) {}

    RegressionTree build(std::vector<Eigen::Index> rows) {
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<Eigen::Index>& rows, std::size_t depth) {
        const int id = static_cast<int>(tree_.feature.size());
        double sum = 0.0;
        for (auto r : rows) sum += y_(r);
        const double mean = sum / static_cast<double>(rows.size());
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.value.push_back(mean);

        const std::size_t n = rows.size();
        if (n < 2 * cfg_.min_leaf || (cfg_.max_depth > 0 && depth >= cfg_.max_depth)) return id;

        double node_sse = 0.0;
        for (auto r : rows) node_sse += (y_(r) - mean) * (y_(r) - mean);
        if (node_sse <= 0.0) return id;

        // Best split by SSE reduction; threshold at the midpoint of adjacent distinct values.
        double best_gain = 0.0;
        int best_feat = -1;
        double best_thr = 0.0;
        std::vector<Eigen::Index> sorted = rows;
        for (Eigen::Index f = 0; f < x_.cols(); ++f) {
            std::sort(sorted.begin(), sorted.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return x_(a, f) < x_(b, f); });
            double left_sum = 0.0, left_sq = 0.0;
            double total_sq = 0.0;
            for (auto r : sorted) total_sq += y_(r) * y_(r);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double yi = y_(sorted[i]);
                left_sum += yi;
                left_sq += yi * yi;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) continue;
                const double xa = x_(sorted[i], f), xb = x_(sorted[i + 1], f);
                if (!(xb > xa)) continue;
                const double right_sum = sum - left_sum;
                const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                                   ((total_sq - left_sq) - right_sum * right_sum / static_cast<double>(nr));
                const double gain = node_sse - sse;
                if (gain > best_gain + 1e-12 * node_sse) {
                    best_gain = gain;
                    best_feat = static_cast<int>(f);
                    best_thr = 0.5 * (xa + xb);
                    if (!(best_thr > xa && best_thr < xb)) best_thr = xa;
                }
            }
        }
        if (best_feat < 0) return id;

        std::vector<Eigen::Index> lrows, rrows;
        for (auto r : rows) (x_(r, best_feat) <= best_thr ? lrows : rrows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(lrows, depth + 1);
        const int r = grow(rrows, depth + 1);
        const auto u = static_cast<std::size_t>(id);
        tree_.feature[u] = best_feat;
        tree_.threshold[u] = best_thr;
        tree_.left[u] = l;
        tree_.right[u] = r;
        return id;
    }

    const Matrix& x_;
    const Vector& y_;
    TreeConfig cfg_;
    RegressionTree tree_;
};

}  // namespace detail

inline RegressionTree fit_regression_tree(const Matrix& x, const Vector& y, TreeConfig cfg = {}) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(x.rows()));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    return detail::CartBuilder(x, y, cfg).build(std::move(rows));
}

inline constexpr std::size_t kImputerTrees = 25;

// Committee of regression trees on bootstrap resamples; prediction is the
// committee mean.
struct BaggedImputer {
    std::vector<RegressionTree> trees;

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        if (trees.empty()) throw StateError("bagged imputer is not fitted");
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(x);
        return s / static_cast<double>(trees.size());
    }
};

inline BaggedImputer fit_bagged_imputer(const Matrix& x, const Vector& y, std::uint64_t seed,
                                        std::size_t num_trees = kImputerTrees, TreeConfig cfg = {}) {
    if (x.rows() != y.size()) throw ArgumentError("bagged imputer: row mismatch");
    if (static_cast<std::size_t>(x.rows()) < num_trees)
        throw ArgumentError("bagged imputer: need at least " + std::to_string(num_trees) +
                            " complete rows, got " + std::to_string(x.rows()));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, x.rows() - 1);
    BaggedImputer imp;
    for (std::size_t t = 0; t < num_trees; ++t) {
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(x.rows()));
        for (auto& r : rows) r = pick(rng);
        imp.trees.push_back(detail::CartBuilder(x, y, cfg).build(std::move(rows)));
    }
    return imp;
}

inline nlohmann::json to_json(const RegressionTree& t) {
    return {{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left},
            {"right", t.right}, {"value", t.value}};
}

inline RegressionTree regression_tree_from_json(const nlohmann::json& j) {
    RegressionTree t;
    j.at("feature").get_to(t.feature);
    j.at("threshold").get_to(t.threshold);
    j.at("left").get_to(t.left);
    j.at("right").get_to(t.right);
    j.at("value").get_to(t.value);
    return t;
}

}  // namespace telanom
