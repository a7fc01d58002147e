#pragma once

// Reference fits for logistic regression without intercept, written against
// plain std::vector. Objectives use the mean log-loss.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double mean_logloss(const std::vector<double>& b, const Rows& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) eta += x[i][j] * b[j];
        s += log1pexp(eta) - y[i] * eta;
    }
    return s / static_cast<double>(x.size());
}

// Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> r) {
    const std::size_t p = r.size();
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t i = c + 1; i < p; ++i)
            if (std::abs(a[i][c]) > std::abs(a[piv][c])) piv = i;
        std::swap(a[c], a[piv]);
        std::swap(r[c], r[piv]);
        if (a[c][c] == 0.0) throw std::runtime_error("oracle: singular system");
        for (std::size_t i = c + 1; i < p; ++i) {
            const double f = a[i][c] / a[c][c];
            for (std::size_t j = c; j < p; ++j) a[i][j] -= f * a[c][j];
            r[i] -= f * r[c];
        }
    }
    std::vector<double> out(p);
    for (std::size_t c = p; c-- > 0;) {
        double s = r[c];
        for (std::size_t j = c + 1; j < p; ++j) s -= a[c][j] * out[j];
        out[c] = s / a[c][c];
    }
    return out;
}

// Plain Newton-Raphson on the log-likelihood.
inline std::vector<double> newton_logistic(const Rows& x, const std::vector<double>& y, int iters = 100) {
    const std::size_t p = x[0].size();
    std::vector<double> b(p, 0.0);
    for (int it = 0; it < iters; ++it) {
        std::vector<double> g(p, 0.0);
        std::vector<std::vector<double>> h(p, std::vector<double>(p, 0.0));
        for (std::size_t i = 0; i < x.size(); ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j < p; ++j) eta += x[i][j] * b[j];
            const double pr = 1.0 / (1.0 + std::exp(-eta));
            for (std::size_t j = 0; j < p; ++j) {
                g[j] += (y[i] - pr) * x[i][j];
                for (std::size_t l = 0; l < p; ++l) h[j][l] += pr * (1.0 - pr) * x[i][j] * x[i][l];
            }
        }
        const auto step = solve(h, g);
        double m = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            b[j] += step[j];
            m = std::max(m, std::abs(step[j]));
        }
        if (m < 1e-14) break;
    }
    return b;
}

// Ridge (alpha = 0) objective minimized by gradient descent with a fixed step.
inline std::vector<double> ridge_gd(const Rows& x, const std::vector<double>& y, double lambda, int iters = 200000,
                                    double step = 0.5) {
    const std::size_t p = x[0].size(), n = x.size();
    std::vector<double> b(p, 0.0);
    for (int it = 0; it < iters; ++it) {
        std::vector<double> g(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j < p; ++j) eta += x[i][j] * b[j];
            const double r = 1.0 / (1.0 + std::exp(-eta)) - y[i];
            for (std::size_t j = 0; j < p; ++j) g[j] += r * x[i][j] / static_cast<double>(n);
        }
        double m = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            g[j] += 2.0 * lambda * b[j];
            b[j] -= step * g[j];
            m = std::max(m, std::abs(g[j]));
        }
        if (m < 1e-13) break;
    }
    return b;
}

// Golden-section minimum of a unimodal f on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// One-feature elastic net: R(b) + lambda*((1-alpha) b^2 + alpha |b|).
inline double scalar_enet(const std::vector<double>& x, const std::vector<double>& y, double lambda, double alpha) {
    Rows rows;
    for (double v : x) rows.push_back({v});
    auto f = [&](double b) {
        return mean_logloss({b}, rows, y) + lambda * ((1.0 - alpha) * b * b + alpha * std::abs(b));
    };
    return golden_min(f, -20.0, 20.0);
}

}  // namespace oracle
