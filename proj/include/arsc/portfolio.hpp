#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/estimators.hpp"
#include "arsc/lq_control.hpp"
#include "arsc/portfolio_odes.hpp"
#include "arsc/quadrature.hpp"
#include "arsc/sde.hpp"

namespace arsc {

struct PortfolioSolution {
    MarketCoefficients coefficients;
    RiccatiSolution pi;
    VectorPath phi;
    ScalarPath kappa;
    AffineStrategy strategy;
    double optimal_growth = 0.0;

    const Matrix& theta_m() const { return coefficients.theta; }
    const Matrix& xi_m() const { return coefficients.xi; }
    const Matrix& psi_m() const { return coefficients.psi; }
    std::string hypothesis_label() const { return pi.hypothesis_verified ? "verified" : "hypothesis-unverified"; }
};

/// ū(t, x) = Θ⁻¹[(A − ΞΠ(t))x − Ξφ(t) + (a − r(t)𝟏)] as an affine strategy.
inline AffineStrategy optimal_strategy(const FactorMarketModel& m, const MarketCoefficients& c, const MatrixPath& pi,
                                       const VectorPath& phi) {
    const auto& g = m.grid();
    std::vector<Matrix> slope;
    std::vector<Vector> offset;
    slope.reserve(g.nodes());
    offset.reserve(g.nodes());
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        slope.push_back(c.theta_inv * (m.A - c.xi * pi[i]));
        offset.push_back(c.theta_inv * (m.excess_intercept(m.r[i]) - c.xi * phi[i]));
    }
    return {"optimal", MatrixPath(g, std::move(slope)), VectorPath(g, std::move(offset))};
}

inline PortfolioSolution solve_portfolio(const FactorMarketModel& m) {
    MarketCoefficients c = build_theta_xi_psi(m);
    RiccatiSolution pi = solve_pi(m, c);
    if (pi.blowup) {
        throw RiccatiBlowupError("Pi exceeded the blow-up guard " + std::to_string(pi.blowup_threshold) +
                                     " below t = " + std::to_string(m.grid().time(pi.valid_from)),
                                 std::move(pi));
    }
    VectorPath phi = solve_phi(m, c, pi);
    ScalarPath kappa = solve_kappa(m, c, pi, phi);
    const MatrixPath pp = pi.path();
    AffineStrategy strat = optimal_strategy(m, c, pp, phi);
    const double growth = 0.5 * m.x0.dot(pp.front() * m.x0) + phi.front().dot(m.x0) - kappa.front();
    if (!std::isfinite(growth)) throw NumericalError("optimal growth rate is not finite");
    return {std::move(c), std::move(pi), std::move(phi), std::move(kappa), std::move(strat), growth};
}

/// Strategy registry: optimal, zero, scaled (factor × optimal), constant weights.
inline AffineStrategy zero_strategy(const FactorMarketModel& m) {
    return AffineStrategy::constant("zero", m.grid(), Vector::Zero(m.assets()), m.factors());
}

struct PiBoundsReport {
    bool applicable = false;
    double bound = 0.0;
    double sup_norm = 0.0;
    double min_eigenvalue = 0.0;
    double tolerance = 0.0;
    bool ok() const { return applicable && min_eigenvalue >= -tolerance && sup_norm <= bound + tolerance; }
};

/// When Ψ − ΞᵀΘ⁻¹Ξ > 0: Π(t) ≥ 0 and ‖Π‖∞ ≤ B_Π.
inline PiBoundsReport pi_bounds_check(const FactorMarketModel& m, const PortfolioSolution& s, double tol = 1e-9) {
    PiBoundsReport r;
    r.tolerance = tol;
    r.bound = pi_bound(m, s.coefficients);
    r.applicable = s.coefficients.bound_hypothesis() && !s.pi.blowup;
    r.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& v : s.pi.values) {
        r.min_eigenvalue = std::min(r.min_eigenvalue, min_eigenvalue(v));
        r.sup_norm = std::max(r.sup_norm, v.norm());
    }
    return r;
}

struct StrategyRow {
    std::string name;
    ExponentialMomentEstimate estimate;
    std::size_t excluded_paths = 0;
    std::size_t control_flags = 0;
    std::size_t rank = 0;  // 1 = largest estimate
};

struct StrategyComparison {
    bool monte_carlo = false;  // false when Γ is not (θ/4)I
    std::string note;
    double theta = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double formula_growth = 0.0;
    std::vector<StrategyRow> rows;
    bool inconclusive = false;
    std::string inconclusive_reason;

    /// The named strategy's estimate is at least every other estimate minus
    /// 3·sqrt(se² + se_other²).
    bool dominates(const std::string& name) const {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const StrategyRow& r) { return r.name == name; });
        if (it == rows.end()) return false;
        for (const auto& r : rows) {
            const double se = std::hypot(it->estimate.std_error, r.estimate.std_error);
            if (it->estimate.estimate < r.estimate.estimate - 3.0 * se) return false;
        }
        return true;
    }
};

/// Monte Carlo I(u) = −(2/θ) log E[exp{−(θ/2) log V(T)}] per strategy,
/// all driven by the same seed. Only meaningful for Γ = (θ/4)I; other Γ
/// produce an empty, labelled table.
inline StrategyComparison compare_strategies(const FactorMarketModel& m, const PortfolioSolution& sol,
                                             const std::vector<AffineStrategy>& strategies, std::size_t n_paths,
                                             std::uint64_t seed, double theta, SimulationOptions opt = {}) {
    StrategyComparison out;
    out.theta = theta;
    out.n_paths = n_paths;
    out.seed = seed;
    out.formula_growth = sol.optimal_growth;
    const auto c = m.Gamma.scalar_value();
    if (!c || std::abs(*c - 0.25 * theta) > 1e-12 * std::max(1.0, theta)) {
        out.note = "Gamma is not (theta/4) I: no exponential-moment representation, formula growth only";
        return out;
    }
    out.monte_carlo = true;
    out.note = "symmetric case: Monte Carlo growth rates";
    for (const auto& s : strategies) {
        const PathBundle b = simulate_factor_and_wealth(m, s, n_paths, RandomSource{seed}, opt);
        const auto lw = b.included_log_wealth();
        StrategyRow row{s.name, estimate_growth_rate(lw, theta), b.excluded_count, b.control_bound_flags, 0};
        if (row.estimate.samples < kMinConclusivePaths) {
            out.inconclusive = true;
            out.inconclusive_reason = "fewer than " + std::to_string(kMinConclusivePaths) + " usable paths";
        } else if (row.estimate.heavy_tail) {
            out.inconclusive = true;
            out.inconclusive_reason = "heavy-tailed exponential weights for strategy '" + s.name + "'";
        }
        out.rows.push_back(std::move(row));
    }
    for (auto& r : out.rows) {
        r.rank = 1;
        for (const auto& o : out.rows)
            if (o.estimate.estimate > r.estimate.estimate) ++r.rank;
    }
    return out;
}

/// Substitution residuals of (Π, φ, κ) in the symmetric case Γ = (θ/4)I,
/// with every coefficient rebuilt from θ, Σ, Λ alone:
///   Θ⁻¹ = (2/(2+θ))(ΣΣᵀ)⁻¹,  ΞᵀΘ⁻¹ = (θ/(2+θ))ΛΣᵀ(ΣΣᵀ)⁻¹,
///   Ψ − ΞᵀΘ⁻¹Ξ = (θ/2)Λ[I − (θ/(2+θ))Σᵀ(ΣΣᵀ)⁻¹Σ]Λᵀ.
/// Each residual is ‖x(t_{i+2}) − x(t_i) − ∫ ẋ‖ / (2h) with Simpson over the window.
struct DegenerationResiduals {
    double pi = 0.0;
    double phi = 0.0;
    double kappa = 0.0;
    double max() const { return std::max({pi, phi, kappa}); }
};

inline DegenerationResiduals degeneration_residuals(const FactorMarketModel& m, const PortfolioSolution& s,
                                                    double theta) {
    const auto c = m.Gamma.scalar_value();
    if (!c || std::abs(*c - 0.25 * theta) > 1e-12 * std::max(1.0, theta))
        throw PreconditionError("degeneration_residuals requires Gamma = (theta/4) I");
    const auto& g = m.grid();
    if (g.steps() < 2) throw PreconditionError("degeneration_residuals: need at least 2 steps");
    const auto d = m.noise_dim();
    const Matrix ss_inv = spd_inverse(m.Sigma * m.Sigma.transpose());
    const Matrix theta_inv = (2.0 / (2.0 + theta)) * ss_inv;
    const Matrix xt_ti = (theta / (2.0 + theta)) * m.Lambda * m.Sigma.transpose() * ss_inv;  // ΞᵀΘ⁻¹
    const Matrix proj = Matrix::Identity(d, d) - (theta / (2.0 + theta)) * m.Sigma.transpose() * ss_inv * m.Sigma;
    const Matrix schur = 0.5 * theta * m.Lambda * proj * m.Lambda.transpose();
    const Matrix drift = m.B - xt_ti * m.A;
    const Matrix source = m.A.transpose() * theta_inv * m.A;
    const Matrix ll = m.Lambda * m.Lambda.transpose();

    const MatrixPath pi = s.pi.path();
    std::vector<Matrix> dpi;
    std::vector<Vector> dphi;
    std::vector<double> dkappa;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        const Matrix& p = pi[i];
        const Vector& f = s.phi[i];
        const Vector e = m.excess_intercept(m.r[i]);
        dpi.push_back(-(drift.transpose() * p + p * drift - p * schur * p + source));
        const Matrix lin = m.B.transpose() - p * schur - (xt_ti * m.A).transpose();
        dphi.push_back(-(lin * f + p * (m.b - xt_ti * e) + m.A.transpose() * theta_inv * e));
        // dκ/dt = −l
        const double l = -0.5 * ((ll * p).trace() + 2.0 * m.r[i] + 2.0 * m.b.dot(f) - f.dot(schur * f) -
                                 2.0 * f.dot(xt_ti * e) + e.dot(theta_inv * e));
        dkappa.push_back(-l);
    }
    DegenerationResiduals r;
    const double h = g.dt();
    for (std::size_t i = 0; i + 2 < g.nodes(); ++i) {
        const Matrix ip = simpson_window(dpi[i], dpi[i + 1], dpi[i + 2], h);
        const Vector iv = simpson_window(dphi[i], dphi[i + 1], dphi[i + 2], h);
        const double ik = simpson_window(dkappa[i], dkappa[i + 1], dkappa[i + 2], h);
        r.pi = std::max(r.pi, (pi[i + 2] - pi[i] - ip).norm() / (2.0 * h));
        r.phi = std::max(r.phi, (s.phi[i + 2] - s.phi[i] - iv).norm() / (2.0 * h));
        r.kappa = std::max(r.kappa, std::abs(s.kappa[i + 2] - s.kappa[i] - ik) / (2.0 * h));
    }
    return r;
}

}  // namespace arsc
