#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/quadrature.hpp"
#include "arsc/random.hpp"
#include "arsc/riccati.hpp"
#include "arsc/sde.hpp"

namespace arsc {

/// Adjoint processes of the LQ problem in coefficient form:
/// p(t) = P(t)X̄(t), q(t) = P(t)Σ(t), and the second-order adjoint P₂.
struct AdjointBundle {
    MatrixPath p_coefficient;
    MatrixPath q;
    RiccatiSolution second_order;
};

inline AdjointBundle make_adjoint_bundle(const LqModel& model, const RiccatiSolution& riccati) {
    const MatrixPath p = riccati.path();
    std::vector<Matrix> q;
    q.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q.push_back(p[i] * model.Sigma[i]);
    return {p, MatrixPath(model.grid(), std::move(q)), solve_second_order_adjoint_lq(model, riccati)};
}

/// −dP/dt assembled from the adjoint side: AᵀP + PA + M + 2qΓqᵀ − PBN⁻¹BᵀP with q = PΣ.
inline Matrix adjoint_drift(const LqModel& model, std::size_t i, const Matrix& p) {
    const Matrix q = p * model.Sigma[i];
    const Matrix bp = model.B[i].transpose() * p;
    return model.A[i].transpose() * p + p * model.A[i] + model.M[i] + 2.0 * q * model.Gamma.matrix() * q.transpose() -
           bp.transpose() * Eigen::LDLT<Matrix>(symmetrized(model.N[i])).solve(bp);
}

/// Drift-matching residual of p = PX̄ against the adjoint equation, in
/// integral form over [t_{i−1}, t_{i+1}]:
///   ‖P(t_{i+1}) − P(t_{i−1}) − ∫ dP/dt‖_F / (2Δt)  with the integral by Simpson.
/// The endpoint values repeat their neighbours.
inline ScalarPath adjoint_residual(const LqModel& model, const MatrixPath& p) {
    const auto& g = model.grid();
    if (g.steps() < 2) throw PreconditionError("adjoint_residual: need at least 2 steps");
    std::vector<Matrix> f;
    f.reserve(g.nodes());
    for (std::size_t i = 0; i < g.nodes(); ++i) f.push_back(adjoint_drift(model, i, p[i]));
    const double h = g.dt();
    std::vector<double> r(g.nodes(), 0.0);
    for (std::size_t i = 1; i + 1 < g.nodes(); ++i) {
        const Matrix integral = simpson_window(f[i - 1], f[i], f[i + 1], h);
        r[i] = (p[i + 1] - p[i - 1] + integral).norm() / (2.0 * h);
    }
    r.front() = r[1];
    r.back() = r[g.nodes() - 2];
    return ScalarPath(g, std::move(r));
}

inline ScalarPath adjoint_residual(const LqModel& model, const RiccatiSolution& riccati) {
    return adjoint_residual(model, riccati.path());
}

/// Coefficients frozen at one time.
struct LqCoefficientsAt {
    Matrix A, B, Sigma, M, N;
};

inline LqCoefficientsAt coefficients_at(const LqModel& model, double t) {
    return {model.A.evaluate(t), model.B.evaluate(t), model.Sigma.evaluate(t), model.M.evaluate(t),
            model.N.evaluate(t)};
}

/// H = pᵀ(Ax + Bu) + tr{qᵀΣ} + 2pᵀΣΓz + ½xᵀMx + ½uᵀNu.
inline double hamiltonian_h(const LqCoefficientsAt& c, const Matrix& gamma, const Vector& x, const Vector& z,
                            const Vector& u, const Vector& p, const Matrix& q) {
    const double drift = p.dot(c.A * x + c.B * u);
    const double diffusion = (q.transpose() * c.Sigma).trace();
    const double coupling = 2.0 * p.dot(c.Sigma * (gamma * z));
    const double cost = 0.5 * x.dot(c.M * x) + 0.5 * u.dot(c.N * u);
    return drift + diffusion + coupling + cost;
}

inline double hamiltonian_h(double t, const Vector& x, const Vector& z, const Vector& u, const Vector& p,
                            const Matrix& q, const LqModel& model) {
    return hamiltonian_h(coefficients_at(model, t), model.Gamma.matrix(), x, z, u, p, q);
}

/// ∂H/∂u = Bᵀp + Nu.
inline Vector hamiltonian_gradient_u(const LqCoefficientsAt& c, const Vector& u, const Vector& p) {
    return c.B.transpose() * p + c.N * u;
}

/// Generalized Hamiltonian with the diffusion-variation terms
///   ℋ = H + ½tr{(σ − σ̄)ᵀP₂(σ − σ̄)} + pᵀ(σ − σ̄)Γ(σ − σ̄)ᵀp,
/// where σ = σ(t, x, u) and σ̄ = σ(t, X̄, ū) are supplied by the caller.
/// The correction terms are added last, so ℋ equals H bit-for-bit when σ = σ̄.
inline double hamiltonian_general(const LqCoefficientsAt& c, const Matrix& gamma, const Vector& x, const Vector& z,
                                  const Vector& u, const Vector& p, const Matrix& q, const Matrix& p2,
                                  const Matrix& sigma, const Matrix& sigma_bar) {
    const double h = hamiltonian_h(c, gamma, x, z, u, p, q);
    const Matrix ds = sigma - sigma_bar;
    const double second = 0.5 * (ds.transpose() * p2 * ds).trace();
    const Vector dp = ds.transpose() * p;
    const double coupled = dp.dot(gamma * dp);
    return h + second + coupled;
}

struct SmpWitness {
    std::size_t path = 0;
    std::size_t time_index = 0;
    Vector u;
    double value = 0.0;  // H(u) − H(ū), or |H_u(ū)| for stationarity witnesses
};

struct SmpOptions {
    std::size_t paths = 20;
    std::size_t time_stride = 10;
    std::size_t draws = 100;
    double radius = 5.0;
    std::uint64_t seed = 0;
    double inequality_tol = 1e-10;
    double gradient_tol = 1e-8;
    std::size_t max_witnesses = 20;
};

struct SmpReport {
    std::size_t checked_points = 0;
    std::size_t checked_draws = 0;
    double min_difference = std::numeric_limits<double>::infinity();
    double max_gradient = 0.0;
    bool reduction_identity = true;  // ℋ(u) − ℋ(ū) == H(u) − H(ū) for every draw
    std::vector<SmpWitness> inequality_witnesses;
    std::vector<SmpWitness> stationarity_witnesses;
    double inequality_tol = 0.0, gradient_tol = 0.0;

    bool inequality_holds() const { return min_difference >= -inequality_tol; }
    bool stationarity_holds() const { return max_gradient <= gradient_tol; }
    bool passed() const { return inequality_holds() && stationarity_holds() && reduction_identity; }
};

/// Checks H(u) ≥ H(ū) and H_u(ū) = 0 along stored trajectories, taking the
/// bundle's controls as ū. Draws u uniformly in the ball of radius
/// `radius` around ū.
inline SmpReport check_smp_inequality(const LqModel& model, const RiccatiSolution& riccati, const PathBundle& bundle,
                                      const SmpOptions& opt = {}) {
    if (!bundle.has_trajectories) throw PreconditionError("check_smp_inequality: bundle must store trajectories");
    if (!(bundle.grid == model.grid())) throw PreconditionError("check_smp_inequality: grid mismatch");
    const MatrixPath pp = riccati.path();
    const RiccatiSolution p2 = solve_second_order_adjoint_lq(model, riccati);
    const auto& g = model.grid();
    const auto k = model.control_dim();
    const Matrix& gamma = model.Gamma.matrix();
    SmpReport rep;
    rep.inequality_tol = opt.inequality_tol;
    rep.gradient_tol = opt.gradient_tol;
    RandomStream rng(RandomSource{opt.seed});
    const std::size_t paths = std::min(opt.paths, bundle.n_paths);
    const std::size_t stride = std::max<std::size_t>(1, opt.time_stride);
    Vector dir(k);
    for (std::size_t path = 0; path < paths; ++path) {
        if (bundle.excluded[path]) continue;
        for (std::size_t i = 0; i < g.nodes(); i += stride) {
            const auto c = coefficients_at(model, g.time(i));
            const Vector x = bundle.state(path, i);
            const Vector ubar = bundle.control(path, i);
            const Vector p = pp[i] * x;
            const Matrix q = pp[i] * c.Sigma;
            const Vector z = c.Sigma.transpose() * p;
            const double hbar = hamiltonian_h(c, gamma, x, z, ubar, p, q);
            const double gbar = hamiltonian_general(c, gamma, x, z, ubar, p, q, p2[i], c.Sigma, c.Sigma);
            ++rep.checked_points;

            const double grad = hamiltonian_gradient_u(c, ubar, p).norm();
            rep.max_gradient = std::max(rep.max_gradient, grad);
            if (grad > opt.gradient_tol && rep.stationarity_witnesses.size() < opt.max_witnesses)
                rep.stationarity_witnesses.push_back({path, i, ubar, grad});

            for (std::size_t s = 0; s < opt.draws; ++s) {
                for (Eigen::Index j = 0; j < k; ++j) dir[j] = rng.normal();
                const double radius = opt.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(k));
                const Vector u = ubar + radius * dir / dir.norm();
                const double diff = hamiltonian_h(c, gamma, x, z, u, p, q) - hbar;
                const double gdiff =
                    hamiltonian_general(c, gamma, x, z, u, p, q, p2[i], c.Sigma, c.Sigma) - gbar;
                if (gdiff != diff) rep.reduction_identity = false;
                rep.min_difference = std::min(rep.min_difference, diff);
                ++rep.checked_draws;
                if (diff < -opt.inequality_tol && rep.inequality_witnesses.size() < opt.max_witnesses)
                    rep.inequality_witnesses.push_back({path, i, u, diff});
            }
        }
    }
    return rep;
}

struct SecondOrderAdjointReport {
    RiccatiSolution p2;
    double terminal_error = 0.0;  // ‖P₂(T) − H‖_F
    double min_eigenvalue = 0.0;  // min over t of λ_min(P₂(t))
    bool psd_expected = false;    // M ≥ 0, H ≥ 0, Γ ≥ 0
    bool psd_holds = true;

    bool ok() const { return terminal_error == 0.0 && (!psd_expected || psd_holds); }
};

inline SecondOrderAdjointReport second_order_adjoint_report(const LqModel& model, const RiccatiSolution& riccati,
                                                            double tol = 1e-10) {
    SecondOrderAdjointReport rep{solve_second_order_adjoint_lq(model, riccati)};
    rep.terminal_error = (rep.p2.values.back() - model.H).norm();
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& v : rep.p2.values) rep.min_eigenvalue = std::min(rep.min_eigenvalue, min_eigenvalue(v));
    bool m_psd = true;
    for (const auto& m : model.M.values()) m_psd = m_psd && is_psd(m);
    rep.psd_expected = m_psd && is_psd(model.H) && model.Gamma.gamma_min() >= -kDefinitenessTol;
    rep.psd_holds = rep.min_eigenvalue >= -tol;
    return rep;
}

}  // namespace arsc
