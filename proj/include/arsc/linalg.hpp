#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace arsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerance for (semi)definiteness tests on symmetric eigenvalues.
inline constexpr double kDefinitenessTol = 1e-10;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

inline bool is_psd(const Matrix& m, double tol = kDefinitenessTol) { return min_eigenvalue(m) >= -tol; }
inline bool is_pd(const Matrix& m, double tol = kDefinitenessTol) { return min_eigenvalue(m) > tol; }

/// Inverse of a symmetric positive definite matrix via LDLT.
inline Matrix spd_inverse(const Matrix& m) {
    return Eigen::LDLT<Matrix>(symmetrized(m)).solve(Matrix::Identity(m.rows(), m.cols()));
}

inline double frobenius(const Matrix& m) { return m.norm(); }

}  // namespace arsc
