#pragma once

// Local Outlier Factor with exact neighborhoods. N_k(x) holds every point at
// distance <= k-distance(x), so ties can make it larger than k.

#include "telanom/anomaly/kdtree.hpp"
#include "telanom/common.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace telanom {

struct LofParams {
    std::size_t k = 10;
};

// Mean reachability distances below this floor are clamped, so a point with
// k or more exact duplicates gets a large finite density instead of infinity.
inline constexpr double kLofMinMeanReach = 1e-12;

// Below this size the neighbor search is a plain scan over all pairs.
inline constexpr std::size_t kLofBruteForceLimit = 2048;

class LofModel {
public:
    LofModel(const Matrix& m, LofParams params, unsigned jobs = 1)
        : data_(m), k_(params.k) {
        const auto n = static_cast<std::size_t>(data_.rows());
        if (k_ < 1 || k_ + 1 > n)
            throw ArgumentError("lof: k = " + std::to_string(k_) + " outside [1, n-1] with n = " +
                                std::to_string(n));
        if (n > kLofBruteForceLimit) tree_ = std::make_unique<KdTree>(data_);

        // Pass 1: k-distances. Pass 2: neighborhoods (CSR) and densities.
        kdist_.resize(n);
        std::vector<double> kd2(n);
        parallel_for(n, jobs, [&](std::size_t i) {
            kd2[i] = kth_sq(row(i), i);
            kdist_[i] = std::sqrt(kd2[i]);
        });
        std::vector<std::vector<std::uint32_t>> nbrs(n);
        lrd_.resize(n);
        parallel_for(n, jobs, [&](std::size_t i) {
            neighbors(row(i), kd2[i], i, nbrs[i]);
            lrd_[i] = density(row(i), nbrs[i]);
        });
        offsets_.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + nbrs[i].size();
        flat_.reserve(offsets_[n]);
        for (auto& v : nbrs) {
            flat_.insert(flat_.end(), v.begin(), v.end());
            std::vector<std::uint32_t>().swap(v);
        }
    }

    std::size_t k() const { return k_; }
    std::size_t size() const { return kdist_.size(); }
    const std::vector<double>& k_distances() const { return kdist_; }
    const std::vector<double>& densities() const { return lrd_; }

    // LOF of every fitted point (each point excluded from its own neighborhood).
    Vector training_scores() const {
        const std::size_t n = size();
        Vector out(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) sum += lrd_[flat_[e]];
            const double cnt = static_cast<double>(offsets_[i + 1] - offsets_[i]);
            out(static_cast<Eigen::Index>(i)) = (sum / cnt) / lrd_[i];
        }
        return out;
    }

    // LOF of a new point against the fitted set.
    double score(std::span<const double> q) const {
        if (q.size() != static_cast<std::size_t>(data_.cols())) throw ArgumentError("lof: dimension mismatch");
        std::vector<std::uint32_t> nb;
        neighbors(q, kth_sq(q, KdTree::npos), KdTree::npos, nb);
        const double own = density(q, nb);
        double sum = 0.0;
        for (auto j : nb) sum += lrd_[j];
        return (sum / static_cast<double>(nb.size())) / own;
    }

    Vector score_rows(const Matrix& m, unsigned jobs = 1) const {
        const RowMatrix rm = m;
        Vector out(m.rows());
        parallel_for(static_cast<std::size_t>(m.rows()), jobs, [&](std::size_t i) {
            out(static_cast<Eigen::Index>(i)) = score(
                {rm.data() + i * static_cast<std::size_t>(rm.cols()), static_cast<std::size_t>(rm.cols())});
        });
        return out;
    }

private:
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * static_cast<std::size_t>(data_.cols()), static_cast<std::size_t>(data_.cols())};
    }

    double kth_sq(std::span<const double> q, std::size_t exclude) const {
        if (tree_) return tree_->kth_squared_distance(q, k_, exclude);
        std::vector<double> d2;
        d2.reserve(size());
        for (std::size_t j = 0; j < static_cast<std::size_t>(data_.rows()); ++j)
            if (j != exclude) d2.push_back(squared_distance(q, row(j)));
        std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k_ - 1), d2.end());
        return d2[k_ - 1];
    }

    void neighbors(std::span<const double> q, double r2, std::size_t exclude,
                   std::vector<std::uint32_t>& out) const {
        out.clear();
        if (tree_) {
            tree_->within(q, r2, exclude, out);
            std::sort(out.begin(), out.end());
            return;
        }
        for (std::size_t j = 0; j < static_cast<std::size_t>(data_.rows()); ++j)
            if (j != exclude && squared_distance(q, row(j)) <= r2)
                out.push_back(static_cast<std::uint32_t>(j));
    }

    // 1 / mean reachability distance of q from its neighbors.
    double density(std::span<const double> q, const std::vector<std::uint32_t>& nb) const {
        double sum = 0.0;
        for (auto j : nb) sum += std::max(kdist_[j], std::sqrt(squared_distance(q, row(j))));
        return 1.0 / std::max(sum / static_cast<double>(nb.size()), kLofMinMeanReach);
    }

    RowMatrix data_;
    std::size_t k_;
    std::unique_ptr<KdTree> tree_;
    std::vector<double> kdist_;
    std::vector<double> lrd_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> flat_;
};

inline Vector lof_scores(const Matrix& m, LofParams params, unsigned jobs = 1) {
    return LofModel(m, params, jobs).training_scores();
}

}  // namespace telanom
