#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/lattice.hpp"

namespace arsc {

/// Zeroth and first order coefficients of γ ↦ ε_γ[ξ] at γ = 0.
struct TaylorTerms {
    double mean = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Solves the γ = 0 lattice; d_i is the lattice expectation of ∫|Z̄_i|²dt.
inline TaylorTerms taylor_terms(const TerminalSpec& xi, const TimeGrid& grid) {
    const auto s = lattice_solve(xi, 0.0, 0.0, grid);
    return {s.y0, s.energy1, s.energy2};
}

struct CriterionValue {
    double gamma1 = 0.0, gamma2 = 0.0, value = 0.0;
};

inline std::vector<CriterionValue> criterion_table(const TerminalSpec& xi, const std::vector<double>& gamma1,
                                                   const std::vector<double>& gamma2, const TimeGrid& grid) {
    std::vector<CriterionValue> out;
    for (double g1 : gamma1)
        for (double g2 : gamma2) out.push_back({g1, g2, lattice_solve(xi, g1, g2, grid).y0});
    return out;
}

struct Remainder {
    double scale = 0.0;
    double remainder = 0.0;
    /// r(h)/r(next h); unset on the last row or when the next remainder is 0.
    std::optional<double> ratio;
};

struct MeanVarianceReport {
    double mean = 0.0;
    double d1 = 0.0, d2 = 0.0;
    double lattice_variance = 0.0;
    double direction1 = 0.0, direction2 = 0.0;
    std::vector<CriterionValue> criterion_values;
    std::vector<Remainder> remainders;

    double decomposition_gap() const { return d1 + d2 - lattice_variance; }
};

/// Tabulates r(h) = ε_{h·g}[ξ] − mean − h(g₁d₁ + g₂d₂) along the unit direction g.
inline MeanVarianceReport mean_variance_check(const TerminalSpec& xi, double g1, double g2,
                                              const std::vector<double>& scales, const TimeGrid& grid) {
    const double norm = std::hypot(g1, g2);
    if (!(norm > 0.0) || g1 < 0.0 || g2 < 0.0)
        throw PreconditionError("mean_variance_check: direction must be nonzero with nonnegative components");
    if (scales.empty()) throw PreconditionError("mean_variance_check: no scales");
    g1 /= norm;
    g2 /= norm;
    for (std::size_t k = 0; k < scales.size(); ++k) {
        if (!(scales[k] > 0.0)) throw PreconditionError("mean_variance_check: scales must be positive");
        if (k > 0 && !(scales[k] < scales[k - 1])) throw PreconditionError("mean_variance_check: scales must decrease");
        if (scales[k] * g1 > 1.0 || scales[k] * g2 > 1.0)
            throw PreconditionError("mean_variance_check: scaled gammas must lie in [0,1]^2");
    }
    const auto t = taylor_terms(xi, grid);
    MeanVarianceReport rep;
    rep.mean = t.mean;
    rep.d1 = t.d1;
    rep.d2 = t.d2;
    rep.lattice_variance = lattice_moments(xi, grid).variance;
    rep.direction1 = g1;
    rep.direction2 = g2;
    for (double h : scales) {
        const double y = lattice_solve(xi, h * g1, h * g2, grid).y0;
        rep.criterion_values.push_back({h * g1, h * g2, y});
        rep.remainders.push_back({h, y - t.mean - h * (g1 * t.d1 + g2 * t.d2), std::nullopt});
    }
    for (std::size_t k = 0; k + 1 < rep.remainders.size(); ++k) {
        const double next = rep.remainders[k + 1].remainder;
        if (next != 0.0) rep.remainders[k].ratio = rep.remainders[k].remainder / next;
    }
    return rep;
}

struct AxiomCheck {
    std::string axiom;
    std::string family;  // which test payoffs were used
    double discrepancy = 0.0;
    double tolerance = 0.0;
    bool passed() const { return discrepancy <= tolerance; }
};

struct VarianceDecomposition {
    double d1 = 0.0, d2 = 0.0;
    double lattice_variance = 0.0;
    std::vector<AxiomCheck> axioms;

    double identity_gap() const { return std::abs(d1 + d2 - lattice_variance); }
    bool axioms_pass() const {
        return std::all_of(axioms.begin(), axioms.end(), [](const AxiomCheck& a) { return a.passed(); });
    }
};

/// d₁, d₂ plus spot checks of the decomposition axioms on a finite family
/// built from ξ: the affine map 3ξ + 7, the one-driver sections
/// ξ(·, 0), ξ(0, ·), and the one-driver perturbation η(w) = w + w²/2.
inline VarianceDecomposition variance_decomposition(const TerminalSpec& xi, const TimeGrid& grid) {
    VarianceDecomposition out;
    const auto base = taylor_terms(xi, grid);
    out.d1 = base.d1;
    out.d2 = base.d2;
    out.lattice_variance = lattice_moments(xi, grid).variance;
    const double tol = 1e-10 * std::max(1.0, out.lattice_variance);

    auto make = [&](std::string name, std::function<double(double, double)> f) {
        return TerminalSpec{std::move(name), std::move(f), xi.growth, xi.quadratic_coefficient};
    };
    const auto affine = make("3xi+7", [&](double a, double b) { return 3.0 * xi(a, b) + 7.0; });
    const auto sec1 = make("xi(w1,0)", [&](double a, double) { return xi(a, 0.0); });
    const auto sec2 = make("xi(0,w2)", [&](double, double b) { return xi(0.0, b); });
    auto eta = [](double w) { return w + 0.5 * w * w; };
    const auto plus2 = make("xi+eta(w2)", [&](double a, double b) { return xi(a, b) + eta(b); });
    const auto plus1 = make("xi+eta(w1)", [&](double a, double b) { return xi(a, b) + eta(a); });

    const auto ta = taylor_terms(affine, grid);
    out.axioms.push_back({"scaling", "3xi+7", std::max(std::abs(ta.d1 - 9.0 * base.d1), std::abs(ta.d2 - 9.0 * base.d2)),
                          1e-10 * std::max(1.0, 9.0 * out.lattice_variance)});

    const auto t1 = taylor_terms(sec1, grid), t2 = taylor_terms(sec2, grid);
    const double v1 = lattice_moments(sec1, grid).variance, v2 = lattice_moments(sec2, grid).variance;
    out.axioms.push_back({"own-driver", "xi(w1,0), xi(0,w2)", std::max(std::abs(t1.d1 - v1), std::abs(t2.d2 - v2)),
                          1e-10 * std::max({1.0, v1, v2})});
    out.axioms.push_back({"other-driver", "xi(w1,0), xi(0,w2)", std::max(std::abs(t1.d2), std::abs(t2.d1)), tol});

    // η(W_j) lies in the orthogonal complement of driver i's subspace, so D_i is unchanged.
    const auto p2 = taylor_terms(plus2, grid), p1 = taylor_terms(plus1, grid);
    out.axioms.push_back({"additivity", "xi+eta(w2), xi+eta(w1)",
                          std::max(std::abs(p2.d1 - base.d1), std::abs(p1.d2 - base.d2)), tol});
    return out;
}

}  // namespace arsc
