#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/grid.hpp"

namespace arsc {

enum class GrowthTag { bounded, linear, quadratic_subcritical };

inline const char* to_string(GrowthTag g) {
    switch (g) {
        case GrowthTag::bounded: return "bounded";
        case GrowthTag::linear: return "linear";
        case GrowthTag::quadratic_subcritical: return "quadratic-subcritical";
    }
    return "?";
}

/// Terminal value ξ = payoff(W₁(T), W₂(T)).
struct TerminalSpec {
    std::string name;
    std::function<double(double, double)> payoff;
    GrowthTag growth = GrowthTag::bounded;
    /// Largest c with |ξ| <= c(w₁² + w₂²) + const; used with the quadratic tag.
    double quadratic_coefficient = 0.0;

    double operator()(double w1, double w2) const { return payoff(w1, w2); }

    /// E[exp(16|ξ|)] < ∞ needs 32·c·T < 1 for quadratic growth.
    bool within_integrability(double horizon) const {
        return growth != GrowthTag::quadratic_subcritical || 32.0 * quadratic_coefficient * horizon < 1.0;
    }
};

namespace payoffs {

inline TerminalSpec constant(double c) {
    return {"constant", [c](double, double) { return c; }, GrowthTag::bounded, 0.0};
}

inline TerminalSpec linear(double a1, double a2, double c = 0.0) {
    return {"linear", [=](double w1, double w2) { return c + a1 * w1 + a2 * w2; }, GrowthTag::linear, 0.0};
}

/// q₁w₁² + q₂w₂² + l₁w₁ + l₂w₂
inline TerminalSpec quadratic(double q1, double q2, double l1 = 0.0, double l2 = 0.0) {
    return {"quadratic", [=](double w1, double w2) { return q1 * w1 * w1 + q2 * w2 * w2 + l1 * w1 + l2 * w2; },
            GrowthTag::quadratic_subcritical, std::max(std::abs(q1), std::abs(q2))};
}

inline TerminalSpec product(double c = 1.0) {
    return {"product", [c](double w1, double w2) { return c * w1 * w2; }, GrowthTag::quadratic_subcritical,
            0.5 * std::abs(c)};
}

/// scale·max(W_driver − strike, 0), driver ∈ {1, 2}.
inline TerminalSpec call(int driver, double strike = 0.0, double scale = 1.0) {
    if (driver != 1 && driver != 2) throw PreconditionError("call payoff: driver must be 1 or 2");
    return {"call",
            [=](double w1, double w2) { return scale * std::max((driver == 1 ? w1 : w2) - strike, 0.0); },
            GrowthTag::linear, 0.0};
}

/// Builds a registered payoff from its name and a parameter list.
inline TerminalSpec from_name(const std::string& name, const std::vector<double>& p) {
    auto arg = [&](std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; };
    if (name == "constant") return constant(arg(0, 0.0));
    if (name == "linear") return linear(arg(0, 1.0), arg(1, 0.0), arg(2, 0.0));
    if (name == "quadratic") return quadratic(arg(0, 1.0), arg(1, 0.0), arg(2, 0.0), arg(3, 0.0));
    if (name == "product") return product(arg(0, 1.0));
    if (name == "call") return call(static_cast<int>(arg(0, 1.0)), arg(1, 0.0), arg(2, 1.0));
    throw ModelError("unknown payoff '" + name + "' (expected constant, linear, quadratic, product, call)");
}

}  // namespace payoffs

struct LatticeOptions {
    int drivers = 2;
    bool keep_surfaces = false;
    double overflow_limit = 1e12;
};

/// Backward lattice solution. Surfaces, when kept, hold layer n as an
/// (n+1)×(n+1) row-major array indexed by the up-move counts (i₁, i₂).
struct LatticeSolution {
    double y0 = 0.0;
    std::size_t steps = 0;
    double horizon = 0.0;
    double gamma1 = 0.0, gamma2 = 0.0;
    /// Lattice expectations of ∫|Z_i|²dt along the computed Z.
    double energy1 = 0.0, energy2 = 0.0;
    /// max over nodes of γ_i·Z_i²·Δt; the explicit scheme wants this < 0.5.
    double stability_number = 0.0;
    bool within_integrability = true;
    std::vector<std::string> warnings;

    bool has_surfaces = false;
    std::vector<std::vector<double>> y_surface, z1_surface, z2_surface;

    std::size_t nodes_per_axis() const { return steps + 1; }
    std::string regime_label() const {
        return within_integrability ? "within well-posedness regime"
                                    : "outside the well-posedness regime (integrability condition fails)";
    }
};

namespace detail {

/// Row-major 2D scratch layer.
struct Layer {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;
    void resize(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        v.resize(r * c);
    }
    double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

}  // namespace detail

/// Explicit backward scheme for dY = −(γ₁Z₁² + γ₂Z₂²)dt + Z₁dW₁ + Z₂dW₂ on a
/// recombining binomial lattice. Within each step the two drivers take their
/// ±√Δt moves one after the other and the order alternates between steps
/// (driver 1 first on even steps). Each one-driver substep sets
///   Z = (Y⁺_up − Y⁺_down)/(2√Δt),  Y = mean(Y⁺) + γZ²Δt,
/// so Var_lattice[ξ] = E∫Z₁² + E∫Z₂² holds exactly when γ = 0.
inline LatticeSolution lattice_solve(const TerminalSpec& xi, double gamma1, double gamma2, const TimeGrid& grid,
                                     const LatticeOptions& opt = {}) {
    if (opt.drivers != 2) throw PreconditionError("lattice_solve: only two drivers are supported");
    if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) throw PreconditionError("lattice_solve: gammas must be >= 0");
    const std::size_t n_steps = grid.steps();
    if (n_steps < 2) throw PreconditionError("lattice_solve: need at least 2 steps");
    const double dt = grid.dt(), sq = std::sqrt(dt);
    const double gam[2] = {gamma1, gamma2};

    LatticeSolution sol;
    sol.steps = n_steps;
    sol.horizon = grid.horizon();
    sol.gamma1 = gamma1;
    sol.gamma2 = gamma2;
    sol.within_integrability = xi.within_integrability(grid.horizon());
    sol.has_surfaces = opt.keep_surfaces;
    if (opt.keep_surfaces) {
        sol.y_surface.resize(n_steps + 1);
        sol.z1_surface.resize(n_steps);
        sol.z2_surface.resize(n_steps);
    }

    // y, e1, e2 hold Y and the accumulated energies ∫Z_i² on the current layer.
    detail::Layer y, e1, e2, ty, te1, te2, zmid;
    const std::size_t m = n_steps + 1;
    y.resize(m, m);
    e1.resize(m, m);
    e2.resize(m, m);
    auto w = [&](std::size_t i, std::size_t n) { return (2.0 * static_cast<double>(i) - static_cast<double>(n)) * sq; };
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double v = xi(w(i, n_steps), w(j, n_steps));
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "payoff '" << xi.name << "' not finite at terminal node (" << i << ", " << j << "), w = ("
                   << w(i, n_steps) << ", " << w(j, n_steps) << ")";
                throw NumericalError(os.str());
            }
            y(i, j) = v;
        }
    }
    std::fill(e1.v.begin(), e1.v.end(), 0.0);
    std::fill(e2.v.begin(), e2.v.end(), 0.0);
    if (opt.keep_surfaces) sol.y_surface[n_steps] = y.v;

    double stab = 0.0;
    // One driver substep along `axis` (0 → rows, 1 → columns); writes into the t* layers.
    auto substep = [&](int axis, detail::Layer* zout) {
        const std::size_t r = y.rows - (axis == 0 ? 1 : 0), c = y.cols - (axis == 1 ? 1 : 0);
        ty.resize(r, c);
        te1.resize(r, c);
        te2.resize(r, c);
        if (zout) zout->resize(r, c);
        const double g = gam[axis];
        detail::Layer& ea = axis == 0 ? e1 : e2;
        detail::Layer& eo = axis == 0 ? e2 : e1;
        detail::Layer& tea = axis == 0 ? te1 : te2;
        detail::Layer& teo = axis == 0 ? te2 : te1;
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const std::size_t iu = axis == 0 ? i + 1 : i, ju = axis == 1 ? j + 1 : j;
                const double up = y(iu, ju), dn = y(i, j);
                const double z = (up - dn) / (2.0 * sq);
                const double z2dt = z * z * dt;
                ty(i, j) = 0.5 * (up + dn) + g * z2dt;
                tea(i, j) = 0.5 * (ea(iu, ju) + ea(i, j)) + z2dt;
                teo(i, j) = 0.5 * (eo(iu, ju) + eo(i, j));
                stab = std::max(stab, g * z2dt);
                if (zout) (*zout)(i, j) = z;
            }
        }
        std::swap(y, ty);
        std::swap(e1, te1);
        std::swap(e2, te2);
    };

    detail::Layer zfirst;
    for (std::size_t step = n_steps; step-- > 0;) {
        // Forward order within this step: `first` moves, then the other.
        const int first = step % 2 == 0 ? 0 : 1, second = 1 - first;
        substep(second, opt.keep_surfaces ? &zmid : nullptr);
        substep(first, opt.keep_surfaces ? &zfirst : nullptr);
        for (double v : y.v) {
            if (!std::isfinite(v) || std::abs(v) > opt.overflow_limit) {
                throw NumericalError("lattice overflow: |Y| exceeds " + std::to_string(opt.overflow_limit) +
                                     " at step " + std::to_string(step) + "; reduce gamma or refine the grid");
            }
        }
        if (opt.keep_surfaces) {
            sol.y_surface[step] = y.v;
            // The second mover's Z lives on intermediate nodes; average over the first mover's branch.
            std::vector<double> zs(y.v.size());
            for (std::size_t i = 0; i < y.rows; ++i) {
                for (std::size_t j = 0; j < y.cols; ++j) {
                    const double a = zmid(i, j);
                    const double b = first == 0 ? zmid(i + 1, j) : zmid(i, j + 1);
                    zs[i * y.cols + j] = 0.5 * (a + b);
                }
            }
            (first == 0 ? sol.z1_surface : sol.z2_surface)[step] = zfirst.v;
            (first == 0 ? sol.z2_surface : sol.z1_surface)[step] = std::move(zs);
        }
    }
    sol.y0 = y(0, 0);
    sol.energy1 = e1(0, 0);
    sol.energy2 = e2(0, 0);
    sol.stability_number = stab;
    if (stab >= 0.5) {
        sol.warnings.push_back("explicit scheme stability number gamma*max|Z|^2*dt = " + std::to_string(stab) +
                               " >= 0.5; refine the grid");
    }
    if (!sol.within_integrability) sol.warnings.push_back(sol.regime_label());
    return sol;
}

/// log of the symmetric binomial weights C(N, i)/2^N, i = 0..N.
inline std::vector<double> log_binomial_weights(std::size_t n) {
    std::vector<double> lw(n + 1);
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
        const double k = static_cast<double>(i);
        lw[i] = std::lgamma(nn + 1.0) - std::lgamma(k + 1.0) - std::lgamma(nn - k + 1.0) - nn * std::log(2.0);
    }
    return lw;
}

/// Calls f(log_weight, w1, w2) for every terminal node of the lattice.
template <typename F>
void for_each_terminal_node(const TimeGrid& grid, F&& f) {
    const std::size_t n = grid.steps();
    const double sq = std::sqrt(grid.dt());
    const auto lw = log_binomial_weights(n);
    for (std::size_t i = 0; i <= n; ++i) {
        const double w1 = (2.0 * static_cast<double>(i) - static_cast<double>(n)) * sq;
        for (std::size_t j = 0; j <= n; ++j) {
            const double w2 = (2.0 * static_cast<double>(j) - static_cast<double>(n)) * sq;
            f(lw[i] + lw[j], w1, w2);
        }
    }
}

/// (1/θ) log E[e^{θξ}] summed directly over the terminal lattice distribution.
inline double lattice_solve_symmetric_reference(const TerminalSpec& xi, double theta, const TimeGrid& grid) {
    if (!(theta > 0.0)) throw PreconditionError("symmetric reference: theta must be > 0");
    std::vector<double> a;
    a.reserve(grid.nodes() * grid.nodes());
    for_each_terminal_node(grid, [&](double lw, double w1, double w2) {
        const double v = xi(w1, w2);
        if (!std::isfinite(v)) throw NumericalError("payoff '" + xi.name + "' not finite on the lattice");
        a.push_back(lw + theta * v);
    });
    const double mx = *std::max_element(a.begin(), a.end());
    double s = 0.0;
    for (double v : a) s += std::exp(v - mx);
    return (mx + std::log(s)) / theta;
}

/// Mean and variance of ξ under the terminal lattice distribution.
struct LatticeMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline LatticeMoments lattice_moments(const TerminalSpec& xi, const TimeGrid& grid) {
    LatticeMoments out;
    for_each_terminal_node(grid, [&](double lw, double w1, double w2) { out.mean += std::exp(lw) * xi(w1, w2); });
    for_each_terminal_node(grid, [&](double lw, double w1, double w2) {
        const double d = xi(w1, w2) - out.mean;
        out.variance += std::exp(lw) * d * d;
    });
    return out;
}

struct ConvergenceRow {
    std::size_t steps = 0;
    double y0 = 0.0;
    double error = 0.0;          // |y0 − reference|
    double increment = 0.0;      // |y0(N) − y0(previous N)|, 0 on the first row
    std::optional<double> order; // log2(error_prev/error)/log2(N/N_prev)
};

struct ConvergenceTable {
    double reference = 0.0;
    bool reference_is_finest = false;
    std::vector<ConvergenceRow> rows;
    std::optional<double> empirical_order;  // least-squares slope of −log error vs log N
};

/// |y0(N) − reference| over the given step counts. Without a reference the
/// finest lattice serves as one (its own row then has error 0).
inline ConvergenceTable convergence_probe(const TerminalSpec& xi, double gamma1, double gamma2, double horizon,
                                          std::vector<std::size_t> steps, std::optional<double> reference = {}) {
    if (steps.empty()) throw PreconditionError("convergence_probe: empty step list");
    std::sort(steps.begin(), steps.end());
    ConvergenceTable t;
    std::vector<double> y;
    for (auto n : steps) y.push_back(lattice_solve(xi, gamma1, gamma2, TimeGrid(horizon, n)).y0);
    t.reference_is_finest = !reference.has_value();
    t.reference = reference.value_or(y.back());
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        ConvergenceRow r;
        r.steps = steps[k];
        r.y0 = y[k];
        r.error = std::abs(y[k] - t.reference);
        if (k > 0) {
            r.increment = std::abs(y[k] - y[k - 1]);
            const auto& prev = t.rows.back();
            if (prev.error > 0.0 && r.error > 0.0)
                r.order = std::log2(prev.error / r.error) / std::log2(double(steps[k]) / double(steps[k - 1]));
        }
        if (r.error > 0.0) {
            lx.push_back(std::log(double(steps[k])));
            ly.push_back(-std::log(r.error));
        }
        t.rows.push_back(r);
    }
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t k = 0; k < lx.size(); ++k) mx += lx[k], my += ly[k];
        mx /= double(lx.size());
        my /= double(ly.size());
        double sxy = 0, sxx = 0;
        for (std::size_t k = 0; k < lx.size(); ++k) sxy += (lx[k] - mx) * (ly[k] - my), sxx += (lx[k] - mx) * (lx[k] - mx);
        if (sxx > 0) t.empirical_order = sxy / sxx;
    }
    return t;
}

}  // namespace arsc
