#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/estimators.hpp"
#include "arsc/models.hpp"
#include "arsc/random.hpp"
#include "arsc/riccati.hpp"

namespace arsc {

struct SimulationOptions {
    /// Worker threads; 0 picks std::thread::hardware_concurrency().
    unsigned workers = 0;
    /// Keep full per-path state/control trajectories (memory n_paths·(N+1)·dim).
    bool store_trajectories = false;
};

/// Seeded ensemble of simulated paths. Arrays are indexed by path first.
struct PathBundle {
    TimeGrid grid;
    std::size_t n_paths = 0;
    Eigen::Index state_dim = 0;
    Eigen::Index control_dim = 0;
    RandomSource seed;

    bool has_trajectories = false;
    std::vector<double> states{};    // (n_paths, N+1, state_dim) when stored
    std::vector<double> controls{};  // (n_paths, N+1, control_dim) when stored

    std::vector<double> terminal_states{};  // (n_paths, state_dim)
    std::vector<double> cost_integral{};    // ½∫(XᵀMX + uᵀNu)dt, trapezoid
    std::vector<double> terminal_cost{};    // ½X(T)ᵀHX(T)
    std::vector<double> log_wealth{};       // log V(T), portfolio runs only

    std::vector<std::uint8_t> excluded{};   // 1 if the path produced non-finite values
    std::size_t excluded_count = 0;
    std::size_t control_bound_flags = 0;  // paths with |u| > 1e6 somewhere

    Eigen::Map<const Vector> state(std::size_t path, std::size_t i) const {
        return {states.data() + (path * grid.nodes() + i) * static_cast<std::size_t>(state_dim), state_dim};
    }
    Eigen::Map<const Vector> control(std::size_t path, std::size_t i) const {
        return {controls.data() + (path * grid.nodes() + i) * static_cast<std::size_t>(control_dim), control_dim};
    }
    Eigen::Map<const Vector> terminal_state(std::size_t path) const {
        return {terminal_states.data() + path * static_cast<std::size_t>(state_dim), state_dim};
    }

    std::vector<double> total_costs() const {
        std::vector<double> out(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) out[p] = cost_integral[p] + terminal_cost[p];
        return out;
    }

    /// log V(T) of the paths that were not excluded, in path order.
    std::vector<double> included_log_wealth() const {
        std::vector<double> out;
        out.reserve(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p)
            if (!excluded[p]) out.push_back(log_wealth[p]);
        return out;
    }
};

namespace detail {

inline unsigned resolve_workers(unsigned requested, std::size_t n_paths) {
    unsigned w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(1, n_paths)));
}

/// Runs body(path) for every path; contiguous blocks per worker. Each path
/// writes only to its own slots, so the output does not depend on `workers`.
template <typename Body>
void for_each_path(std::size_t n_paths, unsigned workers, Body&& body) {
    workers = resolve_workers(workers, n_paths);
    if (workers == 1) {
        for (std::size_t p = 0; p < n_paths; ++p) body(p);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n_paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t p = lo; p < hi; ++p) body(p);
        });
    }
    for (auto& t : pool) t.join();
}

inline PathBundle make_bundle(const TimeGrid& g, std::size_t n_paths, Eigen::Index n, Eigen::Index k,
                              RandomSource seed, bool store) {
    if (n_paths == 0) throw PreconditionError("n_paths must be positive");
    PathBundle b{.grid = g, .n_paths = n_paths, .state_dim = n, .control_dim = k, .seed = seed, .has_trajectories = store};
    if (store) {
        b.states.assign(n_paths * g.nodes() * static_cast<std::size_t>(n), 0.0);
        b.controls.assign(n_paths * g.nodes() * static_cast<std::size_t>(k), 0.0);
    }
    b.terminal_states.assign(n_paths * static_cast<std::size_t>(n), 0.0);
    b.cost_integral.assign(n_paths, 0.0);
    b.terminal_cost.assign(n_paths, 0.0);
    b.excluded.assign(n_paths, 0);
    return b;
}

inline void finalize_flags(PathBundle& b, const std::vector<std::uint8_t>& big_control) {
    b.excluded_count = static_cast<std::size_t>(std::count(b.excluded.begin(), b.excluded.end(), 1));
    b.control_bound_flags = static_cast<std::size_t>(std::count(big_control.begin(), big_control.end(), 1));
}

}  // namespace detail

/// Feedback gain K(t) = −N⁻¹BᵀP on the grid.
inline MatrixPath lq_feedback_gain(const LqModel& model, const RiccatiSolution& riccati) {
    const MatrixPath p = riccati.path();
    std::vector<Matrix> k;
    k.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        k.push_back(-Eigen::LDLT<Matrix>(symmetrized(model.N[i])).solve(model.B[i].transpose() * p[i]));
    }
    return MatrixPath(model.grid(), std::move(k));
}

/// Euler–Maruyama simulation of dX = (AX + Bu)dt + ΣdW under u = K(t)X with
/// cost accumulators ½∫(XᵀMX + uᵀNu)dt (trapezoid) and ½X(T)ᵀHX(T).
inline PathBundle simulate_lq_feedback(const LqModel& model, const MatrixPath& gain, std::size_t n_paths,
                                       RandomSource seed, SimulationOptions opt = {}) {
    const auto& g = model.grid();
    const auto n = model.state_dim(), k = model.control_dim(), d = model.noise_dim();
    if (gain.front().rows() != k || gain.front().cols() != n) throw PreconditionError("gain must be k x n");
    const double dt = g.dt(), sqdt = std::sqrt(dt);

    // Closed-loop drift A + BK and running-cost weight M + KᵀNK per node.
    std::vector<Matrix> acl(g.nodes()), q(g.nodes());
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        acl[i] = model.A[i] + model.B[i] * gain[i];
        q[i] = symmetrized(model.M[i] + gain[i].transpose() * model.N[i] * gain[i]);
    }

    PathBundle b = detail::make_bundle(g, n_paths, n, k, seed, opt.store_trajectories);
    std::vector<std::uint8_t> big(n_paths, 0);
    const std::size_t nodes = g.nodes();
    detail::for_each_path(n_paths, opt.workers, [&](std::size_t p) {
        RandomStream rng(seed.substream(p));
        Vector x = model.x0, tmp(n), dw(d), u(k);
        double running = 0.0;
        tmp.noalias() = q[0] * x;
        double prev = x.dot(tmp);
        auto record = [&](std::size_t i) {
            if (!b.has_trajectories) return;
            u.noalias() = gain[i] * x;
            std::copy(x.data(), x.data() + n, b.states.begin() + static_cast<std::ptrdiff_t>((p * nodes + i) * n));
            std::copy(u.data(), u.data() + k, b.controls.begin() + static_cast<std::ptrdiff_t>((p * nodes + i) * k));
            if (u.cwiseAbs().maxCoeff() > 1e6) big[p] = 1;
        };
        record(0);
        for (std::size_t i = 0; i < g.steps(); ++i) {
            for (Eigen::Index j = 0; j < d; ++j) dw[j] = sqdt * rng.normal();
            tmp.noalias() = acl[i] * x;
            x += dt * tmp;
            x.noalias() += model.Sigma[i] * dw;
            tmp.noalias() = q[i + 1] * x;
            const double cur = x.dot(tmp);
            running += 0.5 * dt * (prev + cur);
            prev = cur;
            record(i + 1);
        }
        std::copy(x.data(), x.data() + n, b.terminal_states.begin() + static_cast<std::ptrdiff_t>(p * n));
        b.cost_integral[p] = 0.5 * running;
        tmp.noalias() = model.H * x;
        b.terminal_cost[p] = 0.5 * x.dot(tmp);
        if (!std::isfinite(b.cost_integral[p]) || !std::isfinite(b.terminal_cost[p])) b.excluded[p] = 1;
    });
    detail::finalize_flags(b, big);
    return b;
}

/// Closed loop under the optimal feedback ū = −N⁻¹BᵀP X.
inline PathBundle simulate_lq_closed_loop(const LqModel& model, const RiccatiSolution& riccati, std::size_t n_paths,
                                          RandomSource seed, SimulationOptions opt = {}) {
    return simulate_lq_feedback(model, lq_feedback_gain(model, riccati), n_paths, seed, opt);
}

/// (1/θ) log E[exp{θ·(total cost)}] for the symmetric case Γ = (θ/2)I.
inline ExponentialMomentEstimate estimate_symmetric_value(const LqModel& model, const PathBundle& bundle,
                                                          double theta) {
    if (!(theta > 0.0)) throw PreconditionError("theta must be positive");
    const auto c = model.Gamma.scalar_value(1e-12);
    if (!c || std::abs(*c - 0.5 * theta) > 1e-12 * std::max(1.0, std::abs(*c))) {
        throw PreconditionError("estimate_symmetric_value requires Gamma = (theta/2) I");
    }
    std::vector<double> costs;
    costs.reserve(bundle.n_paths);
    for (std::size_t p = 0; p < bundle.n_paths; ++p)
        if (!bundle.excluded[p]) costs.push_back(bundle.cost_integral[p] + bundle.terminal_cost[p]);
    if (costs.empty()) throw NumericalError("all paths excluded");
    return log_mean_exp(costs, theta);
}

/// Affine feedback strategy u(t, x) = offset(t) + slope(t)·x for the
/// factor market.
struct AffineStrategy {
    std::string name;
    MatrixPath slope;   // m×n
    VectorPath offset;  // m

    static AffineStrategy constant(std::string name, const TimeGrid& g, const Vector& weights, Eigen::Index factors) {
        return {std::move(name), MatrixPath::constant(g, Matrix::Zero(weights.size(), factors)),
                VectorPath::constant(g, weights)};
    }

    AffineStrategy scaled(std::string new_name, double s) const {
        std::vector<Matrix> sl;
        std::vector<Vector> of;
        for (std::size_t i = 0; i < slope.size(); ++i) {
            sl.push_back(s * slope[i]);
            of.push_back(s * offset[i]);
        }
        return {std::move(new_name), MatrixPath(slope.grid(), std::move(sl)), VectorPath(slope.grid(), std::move(of))};
    }

    Vector operator()(std::size_t i, const Vector& x) const { return offset[i] + slope[i] * x; }
};

/// Simulates the factor process (Euler–Maruyama) and log-wealth
///   d log V = [r + uᵀ(a + AX − r𝟏) − ½uᵀΣΣᵀu]dt + uᵀΣdW
/// driven by the same Brownian increments. Non-finite paths are excluded.
inline PathBundle simulate_factor_and_wealth(const FactorMarketModel& model, const AffineStrategy& strategy,
                                             std::size_t n_paths, RandomSource seed, SimulationOptions opt = {}) {
    require_valid(validate_factor_model(model), "factor market model");
    const auto& g = model.grid();
    const auto n = model.factors(), m = model.assets(), d = model.noise_dim();
    if (strategy.slope.front().rows() != m || strategy.slope.front().cols() != n)
        throw PreconditionError("strategy slope must be m x n");
    const double dt = g.dt(), sqdt = std::sqrt(dt);
    const Matrix ssT = model.Sigma * model.Sigma.transpose();

    PathBundle b = detail::make_bundle(g, n_paths, n, m, seed, opt.store_trajectories);
    b.log_wealth.assign(n_paths, 0.0);
    std::vector<std::uint8_t> big(n_paths, 0);
    const std::size_t nodes = g.nodes();
    detail::for_each_path(n_paths, opt.workers, [&](std::size_t p) {
        RandomStream rng(seed.substream(p));
        Vector x = model.x0, u(m), dw(d), excess(m), fx(n), su(m), sdw(m);
        double logv = 0.0;
        for (std::size_t i = 0; i <= g.steps(); ++i) {
            u.noalias() = strategy.slope[i] * x;
            u += strategy.offset[i];
            if (u.cwiseAbs().maxCoeff() > 1e6) big[p] = 1;
            if (b.has_trajectories) {
                std::copy(x.data(), x.data() + n, b.states.begin() + static_cast<std::ptrdiff_t>((p * nodes + i) * n));
                std::copy(u.data(), u.data() + m,
                          b.controls.begin() + static_cast<std::ptrdiff_t>((p * nodes + i) * m));
            }
            if (i == g.steps()) break;
            const double rate = model.r[i];
            for (Eigen::Index j = 0; j < d; ++j) dw[j] = sqdt * rng.normal();
            excess.noalias() = model.A * x;
            excess += model.a;
            excess.array() -= rate;
            su.noalias() = ssT * u;
            sdw.noalias() = model.Sigma * dw;
            logv += (rate + u.dot(excess) - 0.5 * u.dot(su)) * dt + u.dot(sdw);
            fx.noalias() = model.B * x;
            fx += model.b;
            x += dt * fx;
            x.noalias() += model.Lambda * dw;
        }
        std::copy(x.data(), x.data() + n, b.terminal_states.begin() + static_cast<std::ptrdiff_t>(p * n));
        b.log_wealth[p] = logv;
        if (!std::isfinite(logv) || !x.allFinite()) b.excluded[p] = 1;
    });
    detail::finalize_flags(b, big);
    return b;
}

/// Risk-sensitized growth rate I = −(2/θ) log E[exp{−(θ/2) log V(T)}].
inline ExponentialMomentEstimate estimate_growth_rate(std::span<const double> log_wealth, double theta) {
    if (!(theta > 0.0)) throw PreconditionError("theta must be positive");
    if (log_wealth.empty()) throw NumericalError("no usable log-wealth samples (all paths excluded)");
    return log_mean_exp(log_wealth, -0.5 * theta);
}

}  // namespace arsc
