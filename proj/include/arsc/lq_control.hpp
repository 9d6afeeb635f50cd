#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/estimators.hpp"
#include "arsc/riccati.hpp"
#include "arsc/sde.hpp"

namespace arsc {

/// Thrown when the Riccati equation leaves the blow-up guard; keeps the
/// portion of the solution that was computed.
class RiccatiBlowupError : public NumericalError {
public:
    RiccatiBlowupError(const std::string& what, RiccatiSolution partial)
        : NumericalError(what), partial_(std::move(partial)) {}
    const RiccatiSolution& partial() const noexcept { return partial_; }

private:
    RiccatiSolution partial_;
};

/// Monte Carlo comparison of the value formula with (1/θ) log E[e^{θ·cost}].
struct SymmetricValidation {
    struct Perturbation {
        double offset = 0.0;  // added to every gain entry
        ExponentialMomentEstimate estimate;
        bool not_better = false;  // estimate >= formula − 3·stderr
    };

    double theta = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double formula = 0.0;
    ExponentialMomentEstimate estimate;
    double z = 0.0;
    std::size_t excluded_paths = 0;
    bool inconclusive = false;
    std::string inconclusive_reason;
    std::vector<Perturbation> perturbations;

    bool agrees() const noexcept { return !inconclusive && std::abs(z) <= 3.0; }
    bool perturbations_ok() const noexcept {
        for (const auto& p : perturbations)
            if (!p.not_better) return false;
        return true;
    }
};

struct LqSolution {
    RiccatiSolution riccati;
    MatrixPath gain;  // K = −N⁻¹BᵀP
    double optimal_value = 0.0;
    double quadratic_part = 0.0;   // ½x₀ᵀP(0)x₀
    double trace_integral = 0.0;   // ∫₀ᵀ tr{PΣΣᵀ}dt
    std::optional<BoundsReport> bounds{};
    std::optional<SymmetricValidation> validation{};

    std::string hypothesis_label() const {
        return riccati.hypothesis_verified ? "verified" : "hypothesis-unverified";
    }
};

inline LqSolution solve_lq(const LqModel& model) {
    require_valid(validate_lq_model(model), "LQ model");
    RiccatiSolution ric = solve_riccati_lq(model);
    if (ric.blowup) {
        const double t = model.grid().time(ric.valid_from);
        throw RiccatiBlowupError("Riccati solution exceeded the blow-up guard " + std::to_string(ric.blowup_threshold) +
                                     " below t = " + std::to_string(t),
                                 std::move(ric));
    }
    const MatrixPath p = ric.path();
    LqSolution out{.riccati = ric, .gain = lq_feedback_gain(model, ric)};
    out.quadratic_part = 0.5 * model.x0.dot(p.front() * model.x0);
    out.trace_integral = trace_tail_integrals(model, p).front();
    out.optimal_value = out.quadratic_part + 0.5 * out.trace_integral;
    if (!std::isfinite(out.optimal_value)) throw NumericalError("optimal value is not finite");
    auto rep = riccati_bounds_check(model, ric);
    if (rep.applicable) out.bounds = std::move(rep);
    return out;
}

/// Closed-form BSDE pair along a state path x_0..x_N:
///   Ȳ(t) = ½XᵀPX + ½∫_t^T tr{PΣΣᵀ}ds,  Z̄(t) = ΣᵀPX.
struct BsdePath {
    std::vector<double> y;
    std::vector<Vector> z;
};

inline BsdePath closed_form_bsde(const LqModel& model, const MatrixPath& p, const std::vector<Vector>& x) {
    const auto& g = model.grid();
    if (x.size() != g.nodes()) throw PreconditionError("closed_form_bsde: state path must have N+1 points");
    const auto tail = trace_tail_integrals(model, p);
    BsdePath out;
    out.y.reserve(x.size());
    out.z.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Matrix& pi = i + 1 == x.size() ? model.H : p[i];
        out.y.push_back(0.5 * x[i].dot(pi * x[i]) + 0.5 * tail[i]);
        out.z.push_back(model.Sigma[i].transpose() * (pi * x[i]));
    }
    return out;
}

/// Inconclusive below this many usable paths.
inline constexpr std::size_t kMinConclusivePaths = 1000;

/// Requires Γ = (θ/2)I. Gain perturbations add a constant to every entry of K.
inline SymmetricValidation validate_symmetric_case(const LqModel& model, const LqSolution& sol, std::size_t n_paths,
                                                   std::uint64_t seed, const std::vector<double>& gain_offsets = {},
                                                   SimulationOptions opt = {}) {
    const auto c = model.Gamma.scalar_value();
    if (!c || !(*c > 0.0)) throw PreconditionError("symmetric validation requires Gamma = (theta/2) I with theta > 0");
    SymmetricValidation v;
    v.theta = 2.0 * *c;
    v.n_paths = n_paths;
    v.seed = seed;
    v.formula = sol.optimal_value;

    const RandomSource src{seed};
    const PathBundle bundle = simulate_lq_feedback(model, sol.gain, n_paths, src, opt);
    v.excluded_paths = bundle.excluded_count;
    v.estimate = estimate_symmetric_value(model, bundle, v.theta);
    const double diff = v.estimate.estimate - v.formula;
    if (v.estimate.std_error > 0.0) {
        v.z = diff / v.estimate.std_error;
    } else {
        v.z = std::abs(diff) < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (v.estimate.samples < kMinConclusivePaths) {
        v.inconclusive = true;
        v.inconclusive_reason = "fewer than " + std::to_string(kMinConclusivePaths) + " usable paths";
    } else if (v.estimate.heavy_tail) {
        v.inconclusive = true;
        v.inconclusive_reason = "heavy-tailed exponential weights";
    }

    for (double off : gain_offsets) {
        std::vector<Matrix> k;
        for (const auto& ki : sol.gain.values()) k.push_back(ki.array() + off);
        const PathBundle pb = simulate_lq_feedback(model, MatrixPath(model.grid(), std::move(k)), n_paths, src, opt);
        SymmetricValidation::Perturbation pr;
        pr.offset = off;
        pr.estimate = estimate_symmetric_value(model, pb, v.theta);
        pr.not_better = pr.estimate.estimate >= v.formula - 3.0 * pr.estimate.std_error;
        v.perturbations.push_back(pr);
    }
    return v;
}

}  // namespace arsc
