#pragma once

// Elastic-net penalized logistic regression without intercept:
//   minimize  R(b) + lambda * [(1 - alpha) * sum b_j^2 + alpha * sum |b_j|]
// with R the mean binary cross-entropy. The ridge part has no 1/2 factor.

#include "telanom/common.hpp"
#include "telanom/csv.hpp"

#include <json.hpp>

#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace telanom {

struct SolverConfig {
    double tol = 1e-8;        // relative objective change
    int max_iter = 10000;     // outer (Newton) iterations
    double kkt_tol = 1e-6;
    bool warn_nonconvergence = true;
};

struct FittedClassifier {
    Vector coefficients;
    double lambda = 0.0;
    double alpha = 0.0;
    bool converged = false;
    double final_objective = 0.0;
    int iterations = 0;
    std::string recipe_ref;
    std::vector<std::string> features;
};

// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

inline double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

inline Vector labels_to_vector(std::span<const int> y) {
    Vector v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw ArgumentError("labels must be 0/1");
        v(static_cast<Eigen::Index>(i)) = y[i];
    }
    return v;
}

namespace detail {

inline double risk_from_eta(const Vector& eta, const Vector& y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += y(i) > 0.5 ? softplus(-eta(i)) : softplus(eta(i));
    return s / static_cast<double>(eta.size());
}

inline double penalty(const Vector& b, double lambda, double alpha) {
    if (lambda == 0.0) return 0.0;
    return lambda * ((1.0 - alpha) * b.squaredNorm() + alpha * b.lpNorm<1>());
}

inline void check_inputs(const Matrix& x, const Vector& y) {
    if (x.rows() != y.size()) throw ArgumentError("enet: X has " + std::to_string(x.rows()) +
                                                  " rows but y has " + std::to_string(y.size()));
    if (x.rows() == 0) throw ArgumentError("enet: empty design");
    if (!x.allFinite() || !y.allFinite()) throw ArgumentError("enet: non-finite input");
}

// Gradient of R at eta = X b.
inline Vector risk_gradient(const Matrix& x, const Vector& y, const Vector& eta) {
    Vector r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) r(i) = sigmoid(eta(i)) - y(i);
    return x.transpose() * r / static_cast<double>(x.rows());
}

}  // namespace detail

inline double empirical_risk(const Vector& beta, const Matrix& x, const Vector& y) {
    if (x.cols() != beta.size() || x.rows() != y.size()) throw ArgumentError("empirical_risk: dimension mismatch");
    return detail::risk_from_eta(x * beta, y);
}

inline double enet_objective(const Vector& beta, const Matrix& x, const Vector& y, double lambda, double alpha) {
    return empirical_risk(beta, x, y) + detail::penalty(beta, lambda, alpha);
}

// Largest KKT violation of the penalized problem at `beta`.
inline double kkt_residual(const Vector& beta, const Matrix& x, const Vector& y, double lambda, double alpha) {
    const Vector g = detail::risk_gradient(x, y, x * beta);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        double r;
        if (beta(j) != 0.0) {
            const double sgn = beta(j) > 0 ? 1.0 : -1.0;
            r = std::abs(g(j) + 2.0 * lambda * (1.0 - alpha) * beta(j) + lambda * alpha * sgn);
        } else {
            r = std::max(0.0, std::abs(g(j)) - lambda * alpha);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

inline double kkt_check(const FittedClassifier& f, const Matrix& x, const Vector& y) {
    return kkt_residual(f.coefficients, x, y, f.lambda, f.alpha);
}

inline constexpr double kMinIrlsWeight = 1e-5;
inline constexpr double kCenteringTol = 1e-6;

namespace detail {

// Objective trace of the last fit, one entry per accepted outer step. Used by
// tests to check monotonic descent.
struct FitTrace {
    std::vector<double> objective;
};

// Minimizes g'd + d'Hd/2 + lambda*[(1-a)|b+d|^2 + a|b+d|_1] over d by cyclic
// coordinate descent. Returns the new coefficient vector b + d.
inline Vector cd_quadratic(const Matrix& h, const Vector& g, const Vector& b, double lambda, double alpha,
                           double tol, int max_sweeps, bool* done = nullptr) {
    const Eigen::Index p = b.size();
    Vector nb = b;
    Vector hd = Vector::Zero(p);  // H (nb - b)
    const double l1 = lambda * alpha;
    const double l2 = 2.0 * lambda * (1.0 - alpha);
    if (done) *done = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_move = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double hjj = h(j, j);
            const double q = g(j) + hd(j) - hjj * (nb(j) - b(j));  // gradient of smooth part without j's own term
            // Minimize over v: (q - hjj*b_j) v + (hjj + l2) v^2 / 2 + l1 |v|
            const double u = hjj * b(j) - q;
            double v = 0.0;
            if (u > l1) v = (u - l1) / (hjj + l2);
            else if (u < -l1) v = (u + l1) / (hjj + l2);
            const double delta = v - nb(j);
            if (delta != 0.0) {
                hd += delta * h.col(j);
                nb(j) = v;
                max_move = std::max(max_move, std::abs(delta) * std::sqrt(hjj + l2));
            }
        }
        if (max_move < tol) {
            if (done) *done = true;
            break;
        }
    }
    return nb;
}

// Exact minimizer of  v'Qv/2 - c'v + l1 |v|_1  by feature-sign search
// (active-set steps between sign changes), started from v0. Returns false if
// it fails to settle, leaving v at the best point found.
inline bool feature_sign(const Matrix& q, const Vector& c, double l1, Vector& v) {
    const Eigen::Index p = v.size();
    auto objective = [&](const Vector& x) { return 0.5 * x.dot(q * x) - c.dot(x) + l1 * x.lpNorm<1>(); };
    auto smooth_grad = [&](const Vector& x) -> Vector { return q * x - c; };
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    const double opt_tol = 1e-11 * scale;
    for (int iter = 0; iter < 20 * static_cast<int>(p) + 50; ++iter) {
        Vector grad = smooth_grad(v);
        // Optimality on the nonzero set?
        bool nonzero_ok = true;
        for (Eigen::Index j = 0; j < p; ++j)
            if (v(j) != 0.0 && std::abs(grad(j) + l1 * (v(j) > 0 ? 1.0 : -1.0)) > opt_tol) nonzero_ok = false;
        std::vector<double> theta(static_cast<std::size_t>(p));
        for (Eigen::Index j = 0; j < p; ++j) theta[static_cast<std::size_t>(j)] = (v(j) > 0) - (v(j) < 0);
        if (nonzero_ok) {
            Eigen::Index worst = -1;
            double worst_val = l1 + opt_tol;
            for (Eigen::Index j = 0; j < p; ++j)
                if (v(j) == 0.0 && std::abs(grad(j)) > worst_val) {
                    worst_val = std::abs(grad(j));
                    worst = j;
                }
            if (worst < 0) return true;
            theta[static_cast<std::size_t>(worst)] = grad(worst) > 0 ? -1.0 : 1.0;
        }
        std::vector<Eigen::Index> act;
        for (Eigen::Index j = 0; j < p; ++j)
            if (theta[static_cast<std::size_t>(j)] != 0.0) act.push_back(j);
        const auto na = static_cast<Eigen::Index>(act.size());
        Matrix qa(na, na);
        Vector rhs(na), cur(na);
        for (Eigen::Index a = 0; a < na; ++a) {
            for (Eigen::Index b2 = 0; b2 < na; ++b2) qa(a, b2) = q(act[a], act[b2]);
            rhs(a) = c(act[a]) - l1 * theta[static_cast<std::size_t>(act[a])];
            cur(a) = v(act[a]);
        }
        const Vector target = qa.ldlt().solve(rhs);
        if (!target.allFinite()) return false;
        // Discrete line search over the target and every zero crossing on the segment.
        std::vector<double> ts = {1.0};
        for (Eigen::Index a = 0; a < na; ++a) {
            const double d = target(a) - cur(a);
            if (d != 0.0 && cur(a) != 0.0 && (cur(a) > 0) != (target(a) > 0)) {
                const double t = -cur(a) / d;
                if (t > 0.0 && t < 1.0) ts.push_back(t);
            }
        }
        Vector best = v;
        double best_obj = objective(v);
        bool moved = false;
        for (double t : ts) {
            Vector cand = v;
            for (Eigen::Index a = 0; a < na; ++a) {
                double val = cur(a) + t * (target(a) - cur(a));
                if (t < 1.0 && std::abs(val) <= 1e-15 * std::max(1.0, std::abs(cur(a)))) val = 0.0;
                cand(act[a]) = val;
            }
            // Exact zero at the crossing coordinate.
            for (Eigen::Index a = 0; a < na; ++a) {
                const double d = target(a) - cur(a);
                if (d != 0.0 && cur(a) != 0.0 && t == -cur(a) / d) cand(act[a]) = 0.0;
            }
            const double o = objective(cand);
            if (o < best_obj) {
                best_obj = o;
                best = cand;
                moved = true;
            }
        }
        if (!moved) return true;  // no representable improvement left
        v = best;
    }
    return false;
}

}  // namespace detail

// Proximal Newton: each outer step builds the IRLS quadratic model of R at the
// current coefficients, minimizes model + penalty (coordinate descent, or a
// direct solve when alpha = 0), then backtracks until the objective does not
// increase.
inline FittedClassifier enet_fit(const Matrix& x, const Vector& y, double lambda, double alpha,
                                 const SolverConfig& cfg = {}, const Vector* warm_start = nullptr,
                                 detail::FitTrace* trace = nullptr) {
    detail::check_inputs(x, y);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("enet: lambda must be finite and >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("enet: alpha must lie in [0,1]");
    if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw ArgumentError("enet: invalid solver config");
    const Vector means = x.colwise().mean();
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (std::abs(means(j)) > kCenteringTol)
            throw ArgumentError("enet: column " + std::to_string(j) +
                                " is not centered; standardize the design first");

    const auto n = static_cast<double>(x.rows());
    const Eigen::Index p = x.cols();
    FittedClassifier fit;
    fit.lambda = lambda;
    fit.alpha = alpha;
    Vector b = Vector::Zero(p);
    if (warm_start) {
        if (warm_start->size() != p) throw ArgumentError("enet: warm start has wrong length");
        b = *warm_start;
    }
    Vector eta = x * b;
    double obj = detail::risk_from_eta(eta, y) + detail::penalty(b, lambda, alpha);
    if (trace) trace->objective.push_back(obj);

    Vector w(x.rows());
    Matrix xw(x.rows(), p);
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        Vector resid(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double pi = sigmoid(eta(i));
            w(i) = std::max(pi * (1.0 - pi), kMinIrlsWeight);
            resid(i) = pi - y(i);
        }
        const Vector g = x.transpose() * resid / n;

        // Stationarity check before doing any work.
        const double kkt0 = kkt_residual(b, x, y, lambda, alpha);
        if (kkt0 <= cfg.kkt_tol * 1e-2) {
            fit.converged = true;
            break;
        }

        xw = x.array().colwise() * w.array();
        const Matrix h = x.transpose() * xw / n;
        Vector nb;
        if (alpha == 0.0) {
            Matrix a = h;
            a.diagonal().array() += 2.0 * lambda;
            Eigen::LDLT<Matrix> ldlt(a);
            Vector rhs = -(g + 2.0 * lambda * b);
            Vector d = ldlt.solve(rhs);
            if (!d.allFinite() || ldlt.info() != Eigen::Success) {
                a.diagonal().array() += 1e-10 * std::max(1.0, h.diagonal().maxCoeff());
                d = Eigen::LDLT<Matrix>(a).solve(rhs);
            }
            nb = b + d;
        } else {
            bool done = false;
            nb = detail::cd_quadratic(h, g, b, lambda, alpha, 1e-12, 50, &done);
            if (!done) {
                // Coordinate descent crawls on strongly correlated columns;
                // finish the subproblem with exact active-set steps.
                Matrix q = h;
                q.diagonal().array() += 2.0 * lambda * (1.0 - alpha);
                const Vector c = h * b - g;
                Vector v = nb;
                if (detail::feature_sign(q, c, lambda * alpha, v)) nb = v;
                else nb = detail::cd_quadratic(h, g, b, lambda, alpha, 1e-12, 2000);
            }
        }

        // Backtracking: never accept an increase.
        Vector d = nb - b;
        Vector xd = x * d;
        double t = 1.0;
        double new_obj = obj;
        Vector cand = b;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            cand = b + t * d;
            const Vector ceta = eta + t * xd;
            new_obj = detail::risk_from_eta(ceta, y) + detail::penalty(cand, lambda, alpha);
            if (new_obj <= obj) {
                eta = ceta;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No descent possible at machine precision.
            fit.converged = kkt0 <= cfg.kkt_tol;
            break;
        }
        const double rel = std::abs(obj - new_obj) / std::max(1.0, std::abs(new_obj));
        b = cand;
        obj = new_obj;
        if (trace) trace->objective.push_back(obj);
        if (rel < cfg.tol && kkt_residual(b, x, y, lambda, alpha) <= cfg.kkt_tol) {
            fit.converged = true;
            ++it;
            break;
        }
    }
    fit.coefficients = b;
    fit.final_objective = obj;
    fit.iterations = it;
    if (!fit.converged && cfg.warn_nonconvergence)
        warn("enet: no convergence for lambda=" + csv::fmt(lambda) + ", alpha=" + csv::fmt(alpha) + " after " +
             std::to_string(it) + " iterations");
    return fit;
}

// Unpenalized maximum likelihood by damped Newton. Collinear columns are
// handled by a tiny Levenberg term; the fitted probabilities are unique even
// when the coefficients are not.
inline FittedClassifier fit_mle(const Matrix& x, const Vector& y, const SolverConfig& cfg = {}) {
    detail::check_inputs(x, y);
    const auto n = static_cast<double>(x.rows());
    const Eigen::Index p = x.cols();
    FittedClassifier fit;
    Vector b = Vector::Zero(p);
    Vector eta = Vector::Zero(x.rows());
    double obj = detail::risk_from_eta(eta, y);
    Vector w(x.rows());
    int it = 0;
    const int max_newton = std::min(cfg.max_iter, 200);
    for (; it < max_newton; ++it) {
        Vector resid(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double pi = sigmoid(eta(i));
            w(i) = std::max(pi * (1.0 - pi), kMinIrlsWeight);
            resid(i) = pi - y(i);
        }
        const Vector g = x.transpose() * resid / n;
        if (g.cwiseAbs().maxCoeff() <= cfg.kkt_tol) {
            fit.converged = true;
            break;
        }
        Matrix h = x.transpose() * (x.array().colwise() * w.array()).matrix() / n;
        h.diagonal().array() += 1e-10 * std::max(1.0, h.diagonal().maxCoeff());
        const Vector d = -Eigen::LDLT<Matrix>(h).solve(g);
        const Vector xd = x * d;
        double t = 1.0;
        bool accepted = false;
        double new_obj = obj;
        for (int halving = 0; halving < 60; ++halving) {
            const Vector ceta = eta + t * xd;
            new_obj = detail::risk_from_eta(ceta, y);
            if (new_obj <= obj) {
                eta = ceta;
                b += t * d;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        const double rel = std::abs(obj - new_obj) / std::max(1.0, std::abs(new_obj));
        obj = new_obj;
        if (rel < cfg.tol * 1e-4) {
            fit.converged = true;
            ++it;
            break;
        }
    }
    fit.coefficients = b;
    fit.final_objective = obj;
    fit.iterations = it;
    if (!fit.converged && cfg.warn_nonconvergence) warn("mle: Newton iterations did not converge");
    return fit;
}

inline double predict_proba(const FittedClassifier& f, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(f.coefficients.size()))
        throw ArgumentError("predict_proba: expected " + std::to_string(f.coefficients.size()) +
                            " features, got " + std::to_string(x.size()));
    double eta = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * f.coefficients(static_cast<Eigen::Index>(j));
    return sigmoid(eta);
}

inline Vector predict_proba(const FittedClassifier& f, const Matrix& x) {
    if (x.cols() != f.coefficients.size()) throw ArgumentError("predict_proba: dimension mismatch");
    Vector eta = x * f.coefficients;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = sigmoid(eta(i));
    return eta;
}

inline void write_coefficients_csv(std::ostream& out, const FittedClassifier& f) {
    out << "feature,coefficient\n";
    for (Eigen::Index j = 0; j < f.coefficients.size(); ++j) {
        const auto u = static_cast<std::size_t>(j);
        out << (u < f.features.size() ? f.features[u] : "x" + std::to_string(j)) << ','
            << csv::fmt(f.coefficients(j)) << '\n';
    }
}

inline constexpr int kClassifierFormatVersion = 1;

inline nlohmann::json to_json(const FittedClassifier& f) {
    return {{"format", "telanom.classifier"},
            {"version", kClassifierFormatVersion},
            {"coefficients", std::vector<double>(f.coefficients.data(), f.coefficients.data() + f.coefficients.size())},
            {"lambda", f.lambda},
            {"alpha", f.alpha},
            {"converged", f.converged},
            {"final_objective", f.final_objective},
            {"iterations", f.iterations},
            {"recipe_ref", f.recipe_ref},
            {"features", f.features}};
}

inline FittedClassifier classifier_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "telanom.classifier") throw ValidationError("not a classifier artifact");
    if (j.at("version").get<int>() != kClassifierFormatVersion)
        throw ValidationError("unsupported classifier version");
    FittedClassifier f;
    const auto c = j.at("coefficients").get<std::vector<double>>();
    f.coefficients = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
    f.lambda = j.at("lambda");
    f.alpha = j.at("alpha");
    f.converged = j.at("converged");
    f.final_objective = j.at("final_objective");
    f.iterations = j.at("iterations");
    f.recipe_ref = j.at("recipe_ref");
    j.at("features").get_to(f.features);
    return f;
}

}  // namespace telanom
