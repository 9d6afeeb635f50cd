#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "arsc/grid.hpp"
#include "arsc/linalg.hpp"

namespace arsc {

/// Result of a backward integration. Samples with index >= valid_from hold
/// the solution; on blow-up the earlier entries are left unset.
template <typename State>
struct BackwardSolution {
    std::vector<State> values;
    std::size_t valid_from = 0;
    bool blowup = false;
    double max_norm = 0.0;
};

inline double state_norm(double x) { return std::abs(x); }
inline double state_norm(const Matrix& x) { return x.norm(); }
inline double state_norm(const Vector& x) { return x.norm(); }

inline bool state_finite(double x) { return std::isfinite(x); }
inline bool state_finite(const Matrix& x) { return x.allFinite(); }
inline bool state_finite(const Vector& x) { return x.allFinite(); }

/// Fixed-step classical RK4 run backward from y(T) = terminal.
///
/// `rhs(t, y)` returns dy/dt. `post_step` is applied to every new state
/// (e.g. symmetrization). Integration stops once the norm of a state exceeds
/// `blowup_threshold` or stops being finite.
template <typename State, typename Rhs, typename PostStep>
BackwardSolution<State> integrate_backward(const TimeGrid& grid, const State& terminal, Rhs&& rhs,
                                           PostStep&& post_step,
                                           double blowup_threshold = std::numeric_limits<double>::infinity()) {
    BackwardSolution<State> sol;
    const std::size_t n = grid.steps();
    sol.values.assign(n + 1, terminal);
    sol.values[n] = terminal;
    sol.valid_from = n;
    sol.max_norm = state_norm(terminal);
    const double h = grid.dt();
    for (std::size_t step = n; step-- > 0;) {
        const double t1 = grid.time(step + 1);
        const double tm = t1 - 0.5 * h;
        const double t0 = grid.time(step);
        const State& y = sol.values[step + 1];
        const State k1 = rhs(t1, y);
        const State k2 = rhs(tm, State(y - 0.5 * h * k1));
        const State k3 = rhs(tm, State(y - 0.5 * h * k2));
        const State k4 = rhs(t0, State(y - h * k3));
        State next = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        post_step(next);
        const double nrm = state_norm(next);
        if (!state_finite(next) || nrm > blowup_threshold) {
            sol.blowup = true;
            sol.max_norm = std::isfinite(nrm) ? std::max(sol.max_norm, nrm) : std::numeric_limits<double>::infinity();
            return sol;
        }
        sol.max_norm = std::max(sol.max_norm, nrm);
        sol.values[step] = std::move(next);
        sol.valid_from = step;
    }
    return sol;
}

template <typename State, typename Rhs>
BackwardSolution<State> integrate_backward(const TimeGrid& grid, const State& terminal, Rhs&& rhs) {
    return integrate_backward(grid, terminal, std::forward<Rhs>(rhs), [](State&) {});
}

}  // namespace arsc
