#pragma once

#include "telanom/common.hpp"

#include <limits>
#include <span>
#include <vector>

namespace telanom {

// Yeo-Johnson power transform. The lambda != 0 / != 2 branches are evaluated
// through expm1/log1p so they stay accurate as lambda approaches 0 or 2.
inline double yeo_johnson(double x, double lambda) {
    if (x >= 0.0) {
        if (lambda == 0.0) return std::log1p(x);
        return std::expm1(lambda * std::log1p(x)) / lambda;
    }
    if (lambda == 2.0) return -std::log1p(-x);
    return -std::expm1((2.0 - lambda) * std::log1p(-x)) / (2.0 - lambda);
}

inline constexpr double kYeoJohnsonLambdaMin = -5.0;
inline constexpr double kYeoJohnsonLambdaMax = 5.0;
inline constexpr double kYeoJohnsonTol = 1e-6;

// Gaussian profile log-likelihood of the transformed sample, Jacobian included.
inline double yeo_johnson_loglik(std::span<const double> x, double lambda) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    std::vector<double> t(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        t[i] = yeo_johnson(x[i], lambda);
        mean += t[i];
    }
    mean /= n;
    double var = 0.0, jac = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        var += (t[i] - mean) * (t[i] - mean);
        jac += std::copysign(std::log1p(std::abs(x[i])), x[i]);
    }
    var /= n;
    if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
    return -0.5 * n * std::log(var) + (lambda - 1.0) * jac;
}

// Maximum-likelihood lambda by golden-section search on [-5, 5].
inline double fit_yeo_johnson(std::span<const double> x) {
    if (x.size() < 3) throw ArgumentError("fit_yeo_johnson: need at least 3 values");
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    if (*lo_it == *hi_it) {
        warn("fit_yeo_johnson: constant column, using lambda = 1");
        return 1.0;
    }
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = kYeoJohnsonLambdaMin, b = kYeoJohnsonLambdaMax;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = yeo_johnson_loglik(x, c), fd = yeo_johnson_loglik(x, d);
    while (b - a > kYeoJohnsonTol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = yeo_johnson_loglik(x, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = yeo_johnson_loglik(x, d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace telanom
