#pragma once

#include "telanom/common.hpp"

#include <Eigen/Eigenvalues>

namespace telanom {

struct MahalanobisModel {
    Vector centroid;
    Matrix precision;  // inverse of (sample covariance + ridge_eps * I)
    double ridge_eps = 0.0;

    double score(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != centroid.size())
            throw ArgumentError("mahalanobis: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(centroid.size()) + ")");
        const Vector d = x - centroid;
        return std::sqrt(std::max(0.0, d.dot(precision * d)));
    }

    Vector score_rows(const Matrix& m) const {
        if (m.cols() != centroid.size()) throw ArgumentError("mahalanobis: dimension mismatch");
        const Matrix d = m.rowwise() - centroid.transpose();
        const Vector q = ((d * precision).array() * d.array()).rowwise().sum();
        return q.cwiseMax(0.0).cwiseSqrt();
    }
};

// Reciprocal condition threshold below which the covariance is declared singular.
inline constexpr double kSingularRcond = 1e-12;

inline MahalanobisModel mahalanobis_fit(const Matrix& m, double ridge_eps = 0.0) {
    if (m.rows() < 2) throw ArgumentError("mahalanobis: need at least 2 rows");
    if (ridge_eps < 0.0) throw ArgumentError("mahalanobis: ridge_eps must be non-negative");
    MahalanobisModel model;
    model.ridge_eps = ridge_eps;
    model.centroid = m.colwise().mean().transpose();
    const Matrix centered = m.rowwise() - model.centroid.transpose();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(m.rows() - 1);
    cov.diagonal().array() += ridge_eps;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw SingularityError("mahalanobis: eigendecomposition failed");
    const Vector& ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    if (!(top > 0.0) || !(ev.minCoeff() > kSingularRcond * top))
        throw SingularityError(
            "mahalanobis: covariance matrix is singular; refit with a positive ridge_eps");
    const Matrix& v = eig.eigenvectors();
    model.precision = v * ev.cwiseInverse().asDiagonal() * v.transpose();
    model.precision = 0.5 * (model.precision + model.precision.transpose());
    return model;
}

}  // namespace telanom
