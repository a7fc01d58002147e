#pragma once

#include "telanom/common.hpp"

#include <cstdint>
#include <queue>
#include <span>
#include <vector>

namespace telanom {

// Squared Euclidean distance. Every neighbor computation in the library goes
// through this one function so tie detection is consistent across search paths.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// Exact k-d tree over the rows of a row-major matrix. The matrix's storage must
// outlive the tree (moving the matrix is fine; its buffer is kept).
class KdTree {
public:
    static constexpr std::size_t kLeafSize = 16;

    explicit KdTree(const RowMatrix& points)
        : data_(points.data()), cols_(static_cast<std::size_t>(points.cols())) {
        const auto n = static_cast<std::size_t>(points.rows());
        perm_.resize(n);
        for (std::size_t i = 0; i < n; ++i) perm_[i] = static_cast<std::uint32_t>(i);
        if (n > 0) build(0, n);
    }

    // k-th smallest squared distance from q to the indexed points, skipping
    // index `exclude` (pass npos to keep all).
    double kth_squared_distance(std::span<const double> q, std::size_t k,
                                std::size_t exclude = npos) const {
        std::priority_queue<double> heap;
        knn(0, q, k, exclude, heap);
        return heap.top();
    }

    // All indices whose squared distance to q is <= r2, skipping `exclude`.
    void within(std::span<const double> q, double r2, std::size_t exclude,
                std::vector<std::uint32_t>& out) const {
        radius(0, q, r2, exclude, out);
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    struct Node {
        std::size_t begin, end;
        int dim = -1;  // -1 marks a leaf
        double split = 0.0;
        std::size_t left = 0, right = 0;
    };

    std::span<const double> row(std::uint32_t i) const {
        return {data_ + static_cast<std::size_t>(i) * cols_, cols_};
    }

    std::size_t build(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;
        const std::size_t p = cols_;
        int best_dim = -1;
        double best_spread = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            double lo = row(perm_[begin])[j], hi = lo;
            for (std::size_t i = begin + 1; i < end; ++i) {
                const double v = row(perm_[i])[j];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                best_dim = static_cast<int>(j);
            }
        }
        if (best_dim < 0) return id;  // all points identical
        const std::size_t mid = begin + (end - begin) / 2;
        const auto dim = static_cast<std::size_t>(best_dim);
        std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                         perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                         perm_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) { return row(a)[dim] < row(b)[dim]; });
        const double split = row(perm_[mid])[dim];
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].dim = best_dim;
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void knn(std::size_t id, std::span<const double> q, std::size_t k, std::size_t exclude,
             std::priority_queue<double>& heap) const {
        const Node& nd = nodes_[id];
        if (nd.dim < 0) {
            for (std::size_t i = nd.begin; i < nd.end; ++i) {
                if (perm_[i] == exclude) continue;
                const double d2 = squared_distance(q, row(perm_[i]));
                if (heap.size() < k) {
                    heap.push(d2);
                } else if (d2 < heap.top()) {
                    heap.pop();
                    heap.push(d2);
                }
            }
            return;
        }
        const double diff = q[static_cast<std::size_t>(nd.dim)] - nd.split;
        const std::size_t near = diff < 0 ? nd.left : nd.right;
        const std::size_t far = diff < 0 ? nd.right : nd.left;
        knn(near, q, k, exclude, heap);
        if (heap.size() < k || diff * diff <= heap.top()) knn(far, q, k, exclude, heap);
    }

    void radius(std::size_t id, std::span<const double> q, double r2, std::size_t exclude,
                std::vector<std::uint32_t>& out) const {
        const Node& nd = nodes_[id];
        if (nd.dim < 0) {
            for (std::size_t i = nd.begin; i < nd.end; ++i)
                if (perm_[i] != exclude && squared_distance(q, row(perm_[i])) <= r2)
                    out.push_back(perm_[i]);
            return;
        }
        const double diff = q[static_cast<std::size_t>(nd.dim)] - nd.split;
        const std::size_t near = diff < 0 ? nd.left : nd.right;
        const std::size_t far = diff < 0 ? nd.right : nd.left;
        radius(near, q, r2, exclude, out);
        if (diff * diff <= r2) radius(far, q, r2, exclude, out);
    }

    const double* data_;
    std::size_t cols_;
    std::vector<std::uint32_t> perm_;
    std::vector<Node> nodes_;
};

}  // namespace telanom
