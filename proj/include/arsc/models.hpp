#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/grid.hpp"
#include "arsc/linalg.hpp"
#include "arsc/path.hpp"

namespace arsc {

/// Symmetric risk-sensitivity matrix with cached extreme eigenvalues.
/// Construction accepts any square matrix; definiteness is a validation
/// concern so that invalid inputs can be reported instead of thrown.
class GammaMatrix {
public:
    explicit GammaMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols() || m_.rows() == 0) throw ModelError("Gamma must be a non-empty square matrix");
        symmetric_ = is_symmetric(m_);
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m_), Eigen::EigenvaluesOnly);
        min_ = es.eigenvalues().minCoeff();
        max_ = es.eigenvalues().maxCoeff();
    }

    static GammaMatrix scalar(double gamma, std::size_t d) {
        return GammaMatrix(gamma * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    }

    const Matrix& matrix() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }
    double gamma_min() const noexcept { return min_; }
    double gamma_max() const noexcept { return max_; }
    bool symmetric() const noexcept { return symmetric_; }
    bool positive_definite() const noexcept { return symmetric_ && min_ > kDefinitenessTol; }

    /// If Gamma equals c·I within `tol` (relative), returns c.
    std::optional<double> scalar_value(double tol = 1e-12) const {
        const double c = m_(0, 0);
        const Matrix diff = m_ - c * Matrix::Identity(dim(), dim());
        if (diff.cwiseAbs().maxCoeff() <= tol * std::max(1.0, std::abs(c))) return c;
        return std::nullopt;
    }

private:
    Matrix m_;
    double min_ = 0.0;
    double max_ = 0.0;
    bool symmetric_ = false;
};

/// Coefficients of the asymmetric LQ risk-sensitive problem
///   dX = (A X + B u) dt + Σ dW,
///   dY = -(Zᵀ Γ Z + ½ Xᵀ M X + ½ uᵀ N u) dt + Zᵀ dW,  Y(T) = ½ X(T)ᵀ H X(T).
struct LqModel {
    MatrixPath A;      // n×n
    MatrixPath B;      // n×k
    MatrixPath Sigma;  // n×d
    MatrixPath M;      // n×n, symmetric
    MatrixPath N;      // k×k, symmetric
    Matrix H;          // n×n, symmetric
    GammaMatrix Gamma; // d×d
    Vector x0;         // n

    const TimeGrid& grid() const noexcept { return A.grid(); }
    Eigen::Index state_dim() const noexcept { return A.front().rows(); }
    Eigen::Index control_dim() const noexcept { return B.front().cols(); }
    Eigen::Index noise_dim() const noexcept { return Sigma.front().cols(); }

    /// Δ = ∫₀ᵀ ΣΣᵀ dt (trapezoid on the grid).
    Matrix integrated_noise_covariance() const {
        const auto& g = grid();
        Matrix acc = Matrix::Zero(state_dim(), state_dim());
        for (std::size_t i = 0; i < g.steps(); ++i) {
            acc += 0.5 * g.dt() * (Sigma[i] * Sigma[i].transpose() + Sigma[i + 1] * Sigma[i + 1].transpose());
        }
        return acc;
    }
};

/// Factor-driven market for the risk-sensitized growth problem.
struct FactorMarketModel {
    Vector a;          // m, excess-return intercept
    Vector b;          // n, factor drift intercept
    Matrix A;          // m×n, factor loading
    Matrix B;          // n×n, factor mean reversion
    Matrix Lambda;     // n×d, factor volatility
    Matrix Sigma;      // m×d, asset volatility
    ScalarPath r;      // risk-free rate
    GammaMatrix Gamma; // d×d
    Vector x0;         // n

    const TimeGrid& grid() const noexcept { return r.grid(); }
    Eigen::Index assets() const noexcept { return Sigma.rows(); }
    Eigen::Index factors() const noexcept { return B.rows(); }
    Eigen::Index noise_dim() const noexcept { return Sigma.cols(); }

    /// a − r(t)·1
    Vector excess_intercept(double rate) const { return a - rate * Vector::Ones(a.size()); }
};

struct Violation {
    std::string condition;   // short identifier, e.g. "N>=deltaI"
    std::string message;
    std::vector<std::size_t> time_indices;
};

struct ValidationReport {
    std::vector<Violation> violations;
    /// δ in N(t) ≥ δI: min eigenvalue of N over the grid minus the tolerance.
    double delta = 0.0;

    bool ok() const noexcept { return violations.empty(); }
    bool flags(const std::string& condition) const {
        for (const auto& v : violations)
            if (v.condition == condition) return true;
        return false;
    }
};

namespace detail {

inline std::string describe_indices(const std::vector<std::size_t>& idx, std::size_t total) {
    if (idx.size() == total) return "at all t";
    return "at " + std::to_string(idx.size()) + " of " + std::to_string(total) + " grid times (first index " +
           std::to_string(idx.front()) + ")";
}

template <typename Pred>
void check_path(ValidationReport& rep, const MatrixPath& p, const std::string& cond, const std::string& what,
                Pred pred) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!pred(p[i])) bad.push_back(i);
    if (!bad.empty()) rep.violations.push_back({cond, what + " fails " + describe_indices(bad, p.size()), bad});
}

inline void check_dims(ValidationReport& rep, const std::string& name, const Matrix& m, Eigen::Index rows,
                       Eigen::Index cols) {
    if (m.rows() != rows || m.cols() != cols) {
        rep.violations.push_back({"dimension", name + " has shape " + std::to_string(m.rows()) + "x" +
                                                   std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                                                   "x" + std::to_string(cols),
                                  {}});
    }
}

inline void check_gamma(ValidationReport& rep, const GammaMatrix& g) {
    if (!g.symmetric()) rep.violations.push_back({"Gamma>0", "Gamma not symmetric", {}});
    else if (!g.positive_definite())
        rep.violations.push_back(
            {"Gamma>0", "Gamma not positive definite (min eigenvalue " + std::to_string(g.gamma_min()) + ")", {}});
}

}  // namespace detail

/// Lists every violated standing assumption of the LQ problem. Pure.
inline ValidationReport validate_lq_model(const LqModel& m) {
    ValidationReport rep;
    const auto n = m.state_dim(), k = m.control_dim(), d = m.noise_dim();
    const auto& g = m.grid();
    for (const MatrixPath* p : {&m.B, &m.Sigma, &m.M, &m.N}) {
        if (!(p->grid() == g)) rep.violations.push_back({"grid", "coefficient paths use different grids", {}});
    }
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        detail::check_dims(rep, "A", m.A[i], n, n);
        detail::check_dims(rep, "B", m.B[i], n, k);
        detail::check_dims(rep, "Sigma", m.Sigma[i], n, d);
        detail::check_dims(rep, "M", m.M[i], n, n);
        detail::check_dims(rep, "N", m.N[i], k, k);
        if (!rep.ok()) return rep;
    }
    detail::check_dims(rep, "H", m.H, n, n);
    detail::check_dims(rep, "Gamma", m.Gamma.matrix(), d, d);
    if (m.x0.size() != n) rep.violations.push_back({"dimension", "x0 has wrong length", {}});
    if (!rep.ok()) return rep;

    if (!is_symmetric(m.H) || !is_psd(m.H)) rep.violations.push_back({"H>=0", "H not symmetric positive semidefinite", {}});
    detail::check_path(rep, m.M, "M>=0", "M(t) >= 0",
                       [](const Matrix& x) { return is_symmetric(x) && is_psd(x); });
    double nmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.N.size(); ++i) nmin = std::min(nmin, min_eigenvalue(m.N[i]));
    rep.delta = nmin - kDefinitenessTol;
    detail::check_path(rep, m.N, "N>=deltaI", "N(t) >= deltaI",
                       [](const Matrix& x) { return is_symmetric(x) && is_pd(x); });
    detail::check_path(rep, m.Sigma, "SigmaSigma'>0", "(Sigma Sigma')(t) > 0",
                       [](const Matrix& s) { return is_pd(s * s.transpose()); });
    detail::check_gamma(rep, m.Gamma);
    return rep;
}

inline ValidationReport validate_factor_model(const FactorMarketModel& m) {
    ValidationReport rep;
    const auto mm = m.Sigma.rows(), n = m.B.rows(), d = m.Sigma.cols();
    if (m.a.size() != mm) rep.violations.push_back({"dimension", "a must have one entry per asset", {}});
    if (m.b.size() != n) rep.violations.push_back({"dimension", "b must have one entry per factor", {}});
    detail::check_dims(rep, "A", m.A, mm, n);
    detail::check_dims(rep, "B", m.B, n, n);
    detail::check_dims(rep, "Lambda", m.Lambda, n, d);
    detail::check_dims(rep, "Gamma", m.Gamma.matrix(), d, d);
    if (m.x0.size() != n) rep.violations.push_back({"dimension", "x0 must have one entry per factor", {}});
    if (!rep.ok()) return rep;
    if (!is_pd(m.Sigma * m.Sigma.transpose()))
        rep.violations.push_back({"SigmaSigma'>0", "Sigma Sigma' not strictly positive definite", {}});
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < m.r.size(); ++i)
        if (m.r[i] < 0.0) neg.push_back(i);
    if (!neg.empty())
        rep.violations.push_back({"r>=0", "r(t) >= 0 fails " + detail::describe_indices(neg, m.r.size()), neg});
    detail::check_gamma(rep, m.Gamma);
    return rep;
}

inline void require_valid(const ValidationReport& rep, const std::string& what) {
    if (rep.ok()) return;
    std::string msg = what + " invalid:";
    for (const auto& v : rep.violations) msg += " [" + v.condition + "] " + v.message + ";";
    throw ModelError(msg);
}

/// Largest eigenvalue of 2ΣΓΣᵀ − BN⁻¹Bᵀ at each grid time; negative
/// everywhere certifies the comparison-bound hypothesis for the Riccati solve.
inline ScalarPath riccati_wellposedness_indicator(const LqModel& m) {
    std::vector<double> out;
    out.reserve(m.grid().nodes());
    for (std::size_t i = 0; i < m.grid().nodes(); ++i) {
        Eigen::LDLT<Matrix> ldlt(symmetrized(m.N[i]));
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || min_eigenvalue(m.N[i]) <= kDefinitenessTol) {
            throw ModelError("N(t) not invertible at grid index " + std::to_string(i));
        }
        const Matrix bnb = m.B[i] * ldlt.solve(m.B[i].transpose());
        const Matrix s = 2.0 * m.Sigma[i] * m.Gamma.matrix() * m.Sigma[i].transpose() - bnb;
        out.push_back(max_eigenvalue(s));
    }
    return ScalarPath(m.grid(), std::move(out));
}

inline bool wellposedness_holds(const ScalarPath& indicator) {
    for (double v : indicator.values())
        if (!(v < 0.0)) return false;
    return true;
}

}  // namespace arsc
