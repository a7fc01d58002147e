#pragma once

// Isolation Forest. Trees grow on samples drawn without replacement, up to a
// height limit of ceil(log2(b)); a leaf still holding m > 1 rows contributes
// c(m) on top of its depth.

#include "telanom/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace telanom {

inline constexpr double kEulerGamma = 0.5772156649;

// Harmonic-number estimate H(i) = ln(i) + gamma.
inline double harmonic_estimate(double i) { return std::log(i) + kEulerGamma; }

// Expected path length of an unsuccessful search in a BST of n nodes.
inline double c_factor(std::size_t n) {
    if (n < 2) throw ArgumentError("c_factor: n must be >= 2");
    const double nn = static_cast<double>(n);
    return 2.0 * harmonic_estimate(nn - 1.0) - 2.0 * (nn - 1.0) / nn;
}

// Anomaly score from a mean path length and the per-tree sample size.
inline double iforest_score_from_path(double mean_path, std::size_t sample_size) {
    return std::exp2(-mean_path / c_factor(sample_size));
}

struct IsolationTree {
    // Flat node arrays; feature < 0 marks a leaf holding `size` rows.
    std::vector<int> feature;
    std::vector<double> split;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<int> size;

    double path_length(std::span<const double> x) const {
        int node = 0;
        int depth = 0;
        while (feature[static_cast<std::size_t>(node)] >= 0) {
            const auto u = static_cast<std::size_t>(node);
            node = x[static_cast<std::size_t>(feature[u])] < split[u] ? left[u] : right[u];
            ++depth;
        }
        const int m = size[static_cast<std::size_t>(node)];
        return depth + (m > 1 ? c_factor(static_cast<std::size_t>(m)) : 0.0);
    }

    // Depth of the leaf x falls into.
    int leaf_depth(std::span<const double> x) const {
        int node = 0, depth = 0;
        while (feature[static_cast<std::size_t>(node)] >= 0) {
            const auto u = static_cast<std::size_t>(node);
            node = x[static_cast<std::size_t>(feature[u])] < split[u] ? left[u] : right[u];
            ++depth;
        }
        return depth;
    }

    friend bool operator==(const IsolationTree&, const IsolationTree&) = default;
};

struct IsolationForest {
    std::vector<IsolationTree> trees;
    std::size_t sample_size = 0;
    std::size_t num_trees = 0;
    std::uint64_t seed = 0;
    std::size_t dims = 0;

    double mean_path_length(std::span<const double> x) const {
        if (x.size() != dims) throw ArgumentError("iforest: dimension mismatch");
        double sum = 0.0;
        for (const auto& t : trees) sum += t.path_length(x);
        return sum / static_cast<double>(trees.size());
    }

    double score(std::span<const double> x) const {
        return iforest_score_from_path(mean_path_length(x), sample_size);
    }

    Vector score_rows(const Matrix& m, unsigned jobs = 1) const {
        if (static_cast<std::size_t>(m.cols()) != dims) throw ArgumentError("iforest: dimension mismatch");
        const RowMatrix rm = m;
        Vector out(m.rows());
        parallel_for(static_cast<std::size_t>(m.rows()), jobs, [&](std::size_t i) {
            out(static_cast<Eigen::Index>(i)) = score({rm.data() + i * dims, dims});
        });
        return out;
    }

    friend bool operator==(const IsolationForest&, const IsolationForest&) = default;
};

namespace detail {

// SplitMix64 finalizer: derives independent per-tree seeds from the forest seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class TreeGrower {
public:
    TreeGrower(const RowMatrix& data, int height_limit, std::mt19937_64& rng)
        : data_(data), limit_(height_limit), rng_(rng) {}

    IsolationTree grow(std::vector<std::uint32_t> rows) {
        grow_node(rows, 0, rows.size(), 0);
        return std::move(tree_);
    }

private:
    double at(std::uint32_t r, std::size_t j) const { return data_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)); }

    int grow_node(std::vector<std::uint32_t>& rows, std::size_t begin, std::size_t end, int depth) {
        const int id = static_cast<int>(tree_.feature.size());
        tree_.feature.push_back(-1);
        tree_.split.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.size.push_back(static_cast<int>(end - begin));
        if (end - begin <= 1 || depth >= limit_) return id;

        // Candidate variables: those with spread in this node's sample.
        const auto p = static_cast<std::size_t>(data_.cols());
        std::vector<std::size_t> candidates;
        std::vector<double> lo(p), hi(p);
        for (std::size_t j = 0; j < p; ++j) {
            lo[j] = hi[j] = at(rows[begin], j);
            for (std::size_t i = begin + 1; i < end; ++i) {
                lo[j] = std::min(lo[j], at(rows[i], j));
                hi[j] = std::max(hi[j], at(rows[i], j));
            }
            if (hi[j] > lo[j]) candidates.push_back(j);
        }
        if (candidates.empty()) return id;  // duplicates only

        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const std::size_t var = candidates[pick(rng_)];
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double value;
        do {
            value = lo[var] + unit(rng_) * (hi[var] - lo[var]);
        } while (!(value > lo[var] && value <= hi[var]));

        const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                        rows.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::uint32_t r) { return at(r, var) < value; });
        const auto split_at = static_cast<std::size_t>(mid - rows.begin());
        const int l = grow_node(rows, begin, split_at, depth + 1);
        const int r = grow_node(rows, split_at, end, depth + 1);
        const auto u = static_cast<std::size_t>(id);
        tree_.feature[u] = static_cast<int>(var);
        tree_.split[u] = value;
        tree_.left[u] = l;
        tree_.right[u] = r;
        return id;
    }

    const RowMatrix& data_;
    int limit_;
    std::mt19937_64& rng_;
    IsolationTree tree_;
};

}  // namespace detail

inline int iforest_height_limit(std::size_t sample_size) {
    return static_cast<int>(std::ceil(std::log2(static_cast<double>(sample_size))));
}

inline IsolationForest iforest_fit(const Matrix& m, std::size_t num_trees, std::size_t sample_size,
                                   std::uint64_t seed, unsigned jobs = 1) {
    const auto n = static_cast<std::size_t>(m.rows());
    if (sample_size < 2) throw ArgumentError("iforest: sample size b must be >= 2");
    if (sample_size > n)
        throw ArgumentError("iforest: sample size " + std::to_string(sample_size) +
                            " exceeds row count " + std::to_string(n));
    if (num_trees < 1) throw ArgumentError("iforest: need at least one tree");
    const RowMatrix data = m;
    IsolationForest forest;
    forest.sample_size = sample_size;
    forest.num_trees = num_trees;
    forest.seed = seed;
    forest.dims = static_cast<std::size_t>(m.cols());
    forest.trees.resize(num_trees);
    const int limit = iforest_height_limit(sample_size);
    parallel_for(num_trees, jobs, [&](std::size_t t) {
        std::mt19937_64 rng(detail::mix_seed(seed, t));
        // Partial Fisher-Yates: first b entries form the sample.
        std::vector<std::uint32_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0u);
        for (std::size_t i = 0; i < sample_size; ++i) {
            std::uniform_int_distribution<std::size_t> d(i, n - 1);
            std::swap(idx[i], idx[d(rng)]);
        }
        idx.resize(sample_size);
        forest.trees[t] = detail::TreeGrower(data, limit, rng).grow(std::move(idx));
    });
    return forest;
}

// Versioned JSON artifact.
inline constexpr int kForestFormatVersion = 1;

inline nlohmann::json to_json(const IsolationForest& f) {
    nlohmann::json j;
    j["format"] = "telanom.iforest";
    j["version"] = kForestFormatVersion;
    j["sample_size"] = f.sample_size;
    j["num_trees"] = f.num_trees;
    j["seed"] = f.seed;
    j["dims"] = f.dims;
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& t : f.trees)
        trees.push_back({{"feature", t.feature},
                         {"split", t.split},
                         {"left", t.left},
                         {"right", t.right},
                         {"size", t.size}});
    return j;
}

inline IsolationForest forest_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "telanom.iforest")
        throw ValidationError("not an isolation forest artifact");
    if (j.at("version").get<int>() != kForestFormatVersion)
        throw ValidationError("unsupported isolation forest version");
    IsolationForest f;
    f.sample_size = j.at("sample_size").get<std::size_t>();
    f.num_trees = j.at("num_trees").get<std::size_t>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.dims = j.at("dims").get<std::size_t>();
    for (const auto& t : j.at("trees")) {
        IsolationTree tree;
        t.at("feature").get_to(tree.feature);
        t.at("split").get_to(tree.split);
        t.at("left").get_to(tree.left);
        t.at("right").get_to(tree.right);
        t.at("size").get_to(tree.size);
        f.trees.push_back(std::move(tree));
    }
    if (f.trees.size() != f.num_trees) throw ValidationError("isolation forest tree count mismatch");
    return f;
}

}  // namespace telanom
