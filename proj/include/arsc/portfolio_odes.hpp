#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "arsc/models.hpp"
#include "arsc/quadrature.hpp"
#include "arsc/riccati.hpp"

namespace arsc {

/// Θ = Σ(2Γ + I)Σᵀ, Ξ = 2ΣΓΛᵀ, Ψ = 2ΛΓΛᵀ and the derived blocks used by
/// the Π/φ/κ equations.
struct MarketCoefficients {
    Matrix theta;      // m×m
    Matrix xi;         // m×n
    Matrix psi;        // n×n
    Matrix theta_inv;  // m×m
    Matrix schur;      // Ψ − ΞᵀΘ⁻¹Ξ
    Matrix drift;      // F = B − ΞᵀΘ⁻¹A
    Matrix source;     // AᵀΘ⁻¹A
    /// Smallest eigenvalue of Ψ − ΞᵀΘ⁻¹Ξ; positive means the Π bound applies.
    double schur_min_eigenvalue = 0.0;

    bool bound_hypothesis() const noexcept { return schur_min_eigenvalue > kDefinitenessTol; }
};

inline MarketCoefficients build_theta_xi_psi(const FactorMarketModel& m) {
    require_valid(validate_factor_model(m), "factor market model");
    const Matrix& g = m.Gamma.matrix();
    const auto d = m.noise_dim();
    MarketCoefficients c;
    c.theta = symmetrized(m.Sigma * (2.0 * g + Matrix::Identity(d, d)) * m.Sigma.transpose());
    c.xi = 2.0 * m.Sigma * g * m.Lambda.transpose();
    c.psi = symmetrized(2.0 * m.Lambda * g * m.Lambda.transpose());
    c.theta_inv = spd_inverse(c.theta);
    c.schur = symmetrized(c.psi - c.xi.transpose() * c.theta_inv * c.xi);
    c.drift = m.B - c.xi.transpose() * c.theta_inv * m.A;
    c.source = symmetrized(m.A.transpose() * c.theta_inv * m.A);
    c.schur_min_eigenvalue = min_eigenvalue(c.schur);
    return c;
}

/// B_Π = exp{2(|B| + |Ξ||Θ⁻¹||A|)T}|A|²|Θ⁻¹|T with Frobenius norms.
inline double pi_bound(const FactorMarketModel& m, const MarketCoefficients& c) {
    const double T = m.grid().horizon();
    const double an = m.A.norm(), ti = c.theta_inv.norm();
    return std::exp(2.0 * (m.B.norm() + c.xi.norm() * ti * an) * T) * an * an * ti * T;
}

/// dΠ/dt = −[FᵀΠ + ΠF − Π(Ψ − ΞᵀΘ⁻¹Ξ)Π + AᵀΘ⁻¹A], F = B − ΞᵀΘ⁻¹A.
inline Matrix pi_rhs(const MarketCoefficients& c, const Matrix& p) {
    return -(c.drift.transpose() * p + p * c.drift - p * c.schur * p + c.source);
}

/// Backward RK4 solve of the Π Riccati equation with Π(T) = 0.
inline RiccatiSolution solve_pi(const FactorMarketModel& m, const MarketCoefficients& c) {
    const auto& g = m.grid();
    const auto n = m.factors();
    const double bound = pi_bound(m, c);
    const bool verified = c.bound_hypothesis();
    const double threshold = verified ? 1e6 * bound : 1e9 * std::max(1.0, bound);
    auto rhs = [&](double, const Matrix& p) -> Matrix { return pi_rhs(c, p); };
    RiccatiSolution sol{g, {}, 0, false, 0.0, threshold, verified};
    auto bs = integrate_backward(g, Matrix(Matrix::Zero(n, n)), rhs, detail::symmetrize_in_place, threshold);
    sol.values = std::move(bs.values);
    sol.valid_from = bs.valid_from;
    sol.blowup = bs.blowup;
    sol.max_norm = bs.max_norm;
    return sol;
}

inline RiccatiSolution solve_pi(const FactorMarketModel& m) { return solve_pi(m, build_theta_xi_psi(m)); }

/// dφ/dt = −{[Bᵀ − Π(Ψ − ΞᵀΘ⁻¹Ξ) − AᵀΘ⁻¹Ξ]φ + Π[b − ΞᵀΘ⁻¹(a − r𝟏)] + AᵀΘ⁻¹(a − r𝟏)}
inline Vector phi_rhs(const FactorMarketModel& m, const MarketCoefficients& c, const Matrix& pi, double rate,
                      const Vector& phi) {
    const Vector excess = m.excess_intercept(rate);
    const Matrix lin = m.B.transpose() - pi * c.schur - m.A.transpose() * c.theta_inv * c.xi;
    return -(lin * phi + pi * (m.b - c.xi.transpose() * c.theta_inv * excess) +
             m.A.transpose() * c.theta_inv * excess);
}

inline HermitePath<Matrix> smooth_pi(const MarketCoefficients& c, const RiccatiSolution& pi) {
    MatrixPath p = pi.path();
    std::vector<Matrix> dp;
    dp.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) dp.push_back(pi_rhs(c, p[i]));
    return HermitePath<Matrix>(std::move(p), std::move(dp));
}

/// Backward RK4 solve of the linear φ equation with φ(T) = 0.
inline VectorPath solve_phi(const FactorMarketModel& m, const MarketCoefficients& c, const RiccatiSolution& pi) {
    const auto smooth = smooth_pi(c, pi);
    const auto& g = m.grid();
    auto rhs = [&](double t, const Vector& phi) -> Vector {
        return phi_rhs(m, c, smooth.evaluate(t), m.r.evaluate(t), phi);
    };
    auto bs = integrate_backward(g, Vector(Vector::Zero(m.factors())), rhs);
    if (bs.blowup) throw NumericalError("phi integration produced non-finite values");
    return VectorPath(g, std::move(bs.values));
}

inline VectorPath solve_phi(const FactorMarketModel& m, const RiccatiSolution& pi) {
    return solve_phi(m, build_theta_xi_psi(m), pi);
}

/// Integrand l(t) of the κ coefficient:
///   l = −½[tr{ΛΛᵀΠ} + 2r + 2bᵀφ − φᵀ(Ψ − ΞᵀΘ⁻¹Ξ)φ − 2φᵀΞᵀΘ⁻¹(a − r𝟏) + (a − r𝟏)ᵀΘ⁻¹(a − r𝟏)]
inline double kappa_integrand(const FactorMarketModel& m, const MarketCoefficients& c, const Matrix& pi,
                              const Vector& phi, double rate) {
    const Vector excess = m.excess_intercept(rate);
    const double bracket = (m.Lambda * m.Lambda.transpose() * pi).trace() + 2.0 * rate + 2.0 * m.b.dot(phi) -
                           phi.dot(c.schur * phi) - 2.0 * phi.dot(c.xi.transpose() * c.theta_inv * excess) +
                           excess.dot(c.theta_inv * excess);
    return -0.5 * bracket;
}

/// κ(t) = ∫_t^T l(s) ds by composite Simpson on the grid; κ(T) = 0.
inline ScalarPath solve_kappa(const FactorMarketModel& m, const MarketCoefficients& c, const RiccatiSolution& pi,
                              const VectorPath& phi) {
    const auto& g = m.grid();
    const MatrixPath p = pi.path();
    std::vector<double> l;
    l.reserve(g.nodes());
    for (std::size_t i = 0; i < g.nodes(); ++i) l.push_back(kappa_integrand(m, c, p[i], phi[i], m.r[i]));
    return ScalarPath(g, tail_integrals(std::span<const double>(l), g.dt()));
}

inline ScalarPath solve_kappa(const FactorMarketModel& m, const RiccatiSolution& pi, const VectorPath& phi) {
    return solve_kappa(m, build_theta_xi_psi(m), pi, phi);
}

}  // namespace arsc
