#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "arsc/criterion.hpp"
#include "arsc/io.hpp"
#include "arsc/lattice.hpp"
#include "arsc/lq_control.hpp"
#include "arsc/mp_verifier.hpp"
#include "arsc/portfolio.hpp"
#include "arsc/riccati.hpp"

namespace arsc::acceptance {

using json = nlohmann::json;

struct Config {
    std::uint64_t seed = 20240611;
    unsigned workers = 0;
    std::size_t mc_paths = 100000;
    /// Paths per Monte Carlo run inside the determinism check.
    std::size_t determinism_paths = 4000;
    std::filesystem::path out;  // artifacts go here when non-empty
};

struct Result {
    int id = 0;
    std::string name;
    bool passed = false;  // numerical verdict only
    std::string detail;
    json data;
    double seconds = 0.0;
    double time_limit = 0.0;  // 0 = none

    bool within_time() const { return time_limit <= 0.0 || seconds < time_limit; }
    bool ok() const { return passed && within_time(); }
    std::string line() const {
        char buf[96];
        std::snprintf(buf, sizeof buf, " (%.2f s%s)", seconds,
                      time_limit > 0.0 ? (", limit " + io::format_double(time_limit) + " s").c_str() : "");
        return std::string(ok() ? "PASS" : "FAIL") + "  [" + std::to_string(id) + "] " + name + ": " + detail + buf +
               (passed && !within_time() ? " runtime limit exceeded" : "");
    }
};

// ---------------------------------------------------------------------------
// Models used by the criteria. The same documents ship as JSON files.

inline json scalar_lq_document(double gamma = 0.25, std::size_t steps = 1000) {
    return {{"type", "lq"},      {"name", "scalar-lq"}, {"horizon", 1.0},    {"steps", steps},
            {"A", {{0.0}}},      {"B", {{1.0}}},        {"Sigma", {{1.0}}},  {"M", {{0.0}}},
            {"N", {{1.0}}},      {"H", {{1.0}}},        {"Gamma", {{gamma}}}, {"x0", {1.0}}};
}

inline json planar_lq_document() {
    return {{"type", "lq"},
            {"name", "planar-lq"},
            {"horizon", 1.0},
            {"steps", 500},
            {"A", {{0.1, 0.3}, {-0.2, 0.05}}},
            {"B", {{1.0, 0.2}, {0.0, 0.8}}},
            {"Sigma", {{0.4, 0.1}, {0.0, 0.3}}},
            {"M", {{1.0, 0.2}, {0.2, 0.5}}},
            {"N", {{2.0, 0.1}, {0.1, 1.0}}},
            {"H", {{0.5, 0.0}, {0.0, 1.5}}},
            {"Gamma", {{0.2, 0.05}, {0.05, 0.6}}},
            {"x0", {1.0, -0.5}}};
}

inline json flat_market_document() {
    return {{"type", "factor"},       {"name", "flat-market"}, {"horizon", 1.0},
            {"steps", 1000},          {"a", {0.06}},           {"b", {0.0}},
            {"A", {{0.0}}},           {"B", {{0.0}}},          {"Lambda", {{0.0, 0.1}}},
            {"Sigma", {{0.2, 0.0}}},  {"r", 0.02},             {"Gamma", {{0.1, 0.0}, {0.0, 0.3}}},
            {"x0", {0.0}}};
}

inline json symmetric_market_document(double theta = 0.4) {
    const double g = theta / 4.0;
    return {{"type", "factor"},        {"name", "symmetric-market"}, {"horizon", 1.0},
            {"steps", 1000},           {"a", {0.06}},                {"b", {0.05}},
            {"A", {{0.3}}},            {"B", {{-1.0}}},              {"Lambda", {{0.03, 0.1}}},
            {"Sigma", {{0.2, 0.0}}},   {"r", 0.02},                  {"Gamma", {{g, 0.0}, {0.0, g}}},
            {"x0", {0.1}}};
}

inline json two_asset_market_document(double theta = 0.4) {
    const double g = theta / 4.0;
    return {{"type", "factor"},
            {"name", "two-asset-market"},
            {"horizon", 2.0},
            {"steps", 1000},
            {"a", {0.05, 0.07}},
            {"b", {0.02, -0.01}},
            {"A", {{0.4, -0.1}, {0.2, 0.3}}},
            {"B", {{-0.8, 0.1}, {0.05, -0.5}}},
            {"Lambda", {{0.05, 0.02, 0.1}, {0.0, 0.04, 0.08}}},
            {"Sigma", {{0.2, 0.05, 0.0}, {0.03, 0.25, 0.02}}},
            {"r", 0.03},
            {"Gamma", {{g, 0.0, 0.0}, {0.0, g, 0.0}, {0.0, 0.0, g}}},
            {"x0", {0.1, -0.05}}};
}

// ---------------------------------------------------------------------------

namespace detail {

template <typename F>
Result timed(int id, std::string name, double limit, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r = body();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.id = id;
    r.name = std::move(name);
    r.time_limit = limit;
    return r;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline json estimate_json(const ExponentialMomentEstimate& e) {
    return {{"estimate", e.estimate},
            {"std_error", e.std_error},
            {"top_weight_share", e.top_weight_share},
            {"heavy_tail", e.heavy_tail},
            {"samples", e.samples}};
}

/// Random LQ model whose coefficients satisfy 2ΣΓΣᵀ − BN⁻¹Bᵀ < 0.
inline LqModel random_wellposed_lq(RandomStream& rng) {
    const auto n = static_cast<Eigen::Index>(1 + rng.next() % 3);
    const auto d = n + static_cast<Eigen::Index>(rng.next() % 2);
    const double horizon = 0.5 + 1.5 * rng.uniform();
    const TimeGrid g(horizon, 200);
    auto gauss = [&](Eigen::Index r, Eigen::Index c, double s) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = s * rng.normal();
        return m;
    };
    auto psd = [&](Eigen::Index k, double s) {
        const Matrix f = gauss(k, k, s);
        return Matrix(f * f.transpose());
    };
    const Matrix a0 = gauss(n, n, 0.5), a1 = gauss(n, n, 0.3);
    const Matrix b = Matrix::Identity(n, n) * 1.5 + gauss(n, n, 0.2);
    const Matrix nn = Matrix::Identity(n, n) + psd(n, 0.3);
    Matrix sigma = gauss(n, d, 0.4);
    sigma.leftCols(n) += 0.3 * Matrix::Identity(n, n);
    const Matrix m0 = psd(n, 0.6), m1 = psd(n, 0.3);
    const Matrix h = psd(n, 0.7);
    Matrix gamma = psd(d, 0.5) + 0.1 * Matrix::Identity(d, d);
    // Scale Γ until 2ΣΓΣᵀ stays well below BN⁻¹Bᵀ.
    const Matrix bnb = b * spd_inverse(nn) * b.transpose();
    const double ratio = max_eigenvalue(2.0 * sigma * gamma * sigma.transpose()) / min_eigenvalue(bnb);
    gamma *= (0.2 + 0.6 * rng.uniform()) / std::max(ratio, 1e-12);
    gamma = symmetrized(gamma);

    std::vector<Matrix> av, mv;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        const double t = g.time(i);
        av.push_back(a0 + std::sin(3.0 * t) * a1);
        mv.push_back(m0 + t * m1);
    }
    Vector x0(n);
    for (Eigen::Index i = 0; i < n; ++i) x0[i] = rng.normal();
    return LqModel{MatrixPath(g, std::move(av)), MatrixPath::constant(g, b), MatrixPath::constant(g, sigma),
                   MatrixPath(g, std::move(mv)), MatrixPath::constant(g, nn), h, GammaMatrix(gamma), x0};
}

inline void write_result(const Config& cfg, const Result& r) {
    if (cfg.out.empty()) return;
    char name[32];
    std::snprintf(name, sizeof name, "criterion_%02d.json", r.id);
    io::write_json(cfg.out / name, {{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                                    {"data", r.data}});
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline Result riccati_closed_form(const Config&) {
    return detail::timed(1, "Riccati closed form", 1.0, [] {
        auto p0 = [](std::size_t steps) {
            const auto m = io::parse_lq(scalar_lq_document(0.25, steps)).model;
            return solve_riccati_lq(m)[0](0, 0);
        };
        // P(t) = 1/(1 + (1 − t)/2) solves Ṗ = P²/2, P(1) = 1.
        const double exact = 2.0 / 3.0;
        const double err = std::abs(p0(1000) - exact);
        std::vector<double> errs;
        for (std::size_t n : {10, 20, 40}) errs.push_back(std::abs(p0(n) - exact));
        const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
        Result r;
        r.passed = err <= 1e-8 && r1 >= 12.0 && r1 <= 20.0 && r2 >= 12.0 && r2 <= 20.0;
        r.detail = "|P(0)-2/3| = " + detail::fmt(err) + " at dt=1e-3; halving ratios " + detail::fmt(r1) + ", " +
                   detail::fmt(r2) + " (dt 0.1 -> 0.05 -> 0.025)";
        r.data = {{"error_dt_1e-3", err}, {"errors", errs}, {"ratios", {r1, r2}}};
        return r;
    });
}

inline Result riccati_bounds_suite(const Config& cfg) {
    return detail::timed(2, "Riccati bounds on 100 random models", 30.0, [&] {
        RandomStream rng(RandomSource{cfg.seed}.substream(2));
        std::size_t violations = 0, not_applicable = 0;
        double worst_gap = std::numeric_limits<double>::infinity();
        double worst_p = worst_gap, worst_norm_ratio = 0.0;
        for (int k = 0; k < 100; ++k) {
            const LqModel m = detail::random_wellposed_lq(rng);
            const auto sol = solve_riccati_lq(m);
            const auto rep = riccati_bounds_check(m, sol);
            if (!rep.applicable) {
                ++not_applicable;
                continue;
            }
            if (!rep.ok()) ++violations;
            worst_gap = std::min(worst_gap, rep.min_eigenvalue_gap);
            worst_p = std::min(worst_p, rep.min_eigenvalue_p);
            worst_norm_ratio = std::max(worst_norm_ratio, rep.sup_norm / rep.bound);
        }
        Result r;
        r.passed = violations == 0 && not_applicable == 0;
        r.detail = std::to_string(violations) + " violations, " + std::to_string(not_applicable) +
                   " inapplicable; min eig P = " + detail::fmt(worst_p) + ", min eig (P~ - P) = " +
                   detail::fmt(worst_gap) + ", max |P|/B_P = " + detail::fmt(worst_norm_ratio);
        r.data = {{"models", 100},
                  {"violations", violations},
                  {"not_applicable", not_applicable},
                  {"min_eigenvalue_p", worst_p},
                  {"min_eigenvalue_gap", worst_gap},
                  {"max_norm_ratio", worst_norm_ratio}};
        return r;
    });
}

inline Result lattice_exactness(const Config& cfg) {
    return detail::timed(3, "BSDE lattice exactness", 10.0, [&] {
        const TimeGrid g(1.0, 200);
        RandomStream rng(RandomSource{cfg.seed}.substream(3));
        std::vector<std::pair<double, double>> gammas{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
        for (int k = 0; k < 4; ++k) gammas.emplace_back(rng.uniform(), rng.uniform());
        double const_err = 0.0, lin_err = 0.0;
        for (auto [g1, g2] : gammas) {
            const_err = std::max(const_err, std::abs(lattice_solve(payoffs::constant(1.7), g1, g2, g).y0 - 1.7));
            // ξ = 2W₁ − W₂ has constant Z = (2, −1): Y(0) = 4γ₁ + γ₂.
            lin_err = std::max(lin_err,
                               std::abs(lattice_solve(payoffs::linear(2.0, -1.0), g1, g2, g).y0 - (4 * g1 + g2)));
        }
        // (1/θ) log E e^{θW₁(1)} = θ/2.
        const double sym = lattice_solve(payoffs::linear(1.0, 0.0), 0.25, 0.25, g).y0;
        const double sym_err = std::abs(sym - 0.25);
        Result r;
        r.passed = const_err <= 1e-13 && lin_err <= 1e-12 && sym_err <= 1e-3;
        r.detail = "constant err " + detail::fmt(const_err) + ", linear err " + detail::fmt(lin_err) +
                   ", symmetric Gaussian err " + detail::fmt(sym_err) + " at N=200";
        r.data = {{"constant_error", const_err}, {"linear_error", lin_err}, {"symmetric_y0", sym},
                  {"symmetric_error", sym_err}};
        return r;
    });
}

inline Result mean_variance_representation(const Config&) {
    return detail::timed(4, "Mean-variance representation", 30.0, [] {
        const TimeGrid g(1.0, 200);
        const std::vector<double> scales{0.04, 0.02, 0.01, 0.005};
        const auto q = mean_variance_check(payoffs::quadratic(1.0, 0.0), 1.0, 1.0, scales, g);
        const auto l = mean_variance_check(payoffs::linear(2.0, -1.0), 1.0, 1.0, scales, g);
        bool ratios_ok = true;
        json rows = json::array();
        for (std::size_t k = 0; k + 1 < q.remainders.size(); ++k) {
            const auto& rm = q.remainders[k];
            ratios_ok = ratios_ok && rm.ratio && *rm.ratio >= 3.0 && *rm.ratio <= 5.0;
            rows.push_back({{"h", rm.scale}, {"remainder", rm.remainder}, {"ratio", rm.ratio.value_or(std::numeric_limits<double>::quiet_NaN())}});
        }
        double lin_max = 0.0;
        for (const auto& rm : l.remainders) lin_max = std::max(lin_max, std::abs(rm.remainder));
        Result r;
        r.passed = ratios_ok && lin_max <= 1e-12;
        std::string ratios;
        for (const auto& row : rows) ratios += (ratios.empty() ? "" : ", ") + detail::fmt(row["ratio"].get<double>());
        r.detail = "W1^2 ratios r(h)/r(h/2) = " + ratios + " for h = 0.04, 0.02, 0.01; linear max |r| = " +
                   detail::fmt(lin_max);
        r.data = {{"quadratic", rows}, {"linear_max_remainder", lin_max}, {"d1", q.d1}, {"d2", q.d2}};
        return r;
    });
}

inline Result variance_decomposition_check(const Config&) {
    return detail::timed(5, "Variance decomposition", 30.0, [] {
        const TimeGrid g(1.0, 200);
        struct Case {
            TerminalSpec xi;
            double d1, d2;
        };
        // Itô isometry: W₁W₂ = ∫W₂dW₁ + ∫W₁dW₂; (W₁ − 0)⁺ has D₁ = Var = ½ − 1/(2π).
        const std::vector<Case> cases{{payoffs::product(1.0), 0.5, 0.5},
                                      {payoffs::linear(1.0, 1.0), 1.0, 1.0},
                                      {payoffs::call(1, 0.0, 1.0), 0.5 - 0.5 / std::numbers::pi, 0.0}};
        bool ok = true;
        double worst_oracle = 0.0, worst_identity = 0.0;
        json rows = json::array();
        for (const auto& c : cases) {
            const auto v = variance_decomposition(c.xi, g);
            const double e = std::max(std::abs(v.d1 - c.d1), std::abs(v.d2 - c.d2));
            worst_oracle = std::max(worst_oracle, e);
            worst_identity = std::max(worst_identity, v.identity_gap());
            const bool case_ok =
                e <= 1e-3 && v.identity_gap() <= 1e-12 * std::max(1.0, v.lattice_variance) && v.axioms_pass();
            ok = ok && case_ok;
            json ax = json::array();
            for (const auto& a : v.axioms)
                ax.push_back({{"axiom", a.axiom}, {"discrepancy", a.discrepancy}, {"passed", a.passed()}});
            rows.push_back({{"payoff", c.xi.name}, {"d1", v.d1}, {"d2", v.d2}, {"lattice_variance", v.lattice_variance},
                            {"axioms", ax}, {"passed", case_ok}});
        }
        Result r;
        r.passed = ok;
        r.detail = "max oracle error " + detail::fmt(worst_oracle) + ", max |d1+d2-Var| " +
                   detail::fmt(worst_identity) + ", axioms scaling/own-driver/other-driver/additivity " + (ok ? "pass" : "see report");
        r.data = rows;
        return r;
    });
}

inline Result symmetric_lq_monte_carlo(const Config& cfg) {
    return detail::timed(6, "Symmetric LQ Monte Carlo", 120.0, [&] {
        const auto loaded = io::parse_lq(scalar_lq_document(0.25, 1000));
        const auto sol = solve_lq(loaded.model);
        const auto v = validate_symmetric_case(loaded.model, sol, cfg.mc_paths, cfg.seed + 6, {0.1, -0.1, 0.25},
                                               {cfg.workers, false});
        Result r;
        r.passed = v.agrees() && v.perturbations_ok();
        r.detail = "formula " + detail::fmt(v.formula) + ", MC " + detail::fmt(v.estimate.estimate) + " +- " +
                   detail::fmt(v.estimate.std_error) + ", z = " + detail::fmt(v.z) +
                   (v.inconclusive ? " (inconclusive: " + v.inconclusive_reason + ")" : "") + "; perturbations " +
                   (v.perturbations_ok() ? "not better" : "BETTER than formula");
        json pert = json::array();
        for (const auto& p : v.perturbations)
            pert.push_back({{"gain_offset", p.offset}, {"estimate", detail::estimate_json(p.estimate)},
                            {"not_better", p.not_better}});
        r.data = {{"model_hash", loaded.hash}, {"paths", cfg.mc_paths}, {"seed", cfg.seed + 6},
                  {"formula", v.formula},      {"estimate", detail::estimate_json(v.estimate)},
                  {"z", v.z},                  {"inconclusive", v.inconclusive},
                  {"perturbations", pert}};
        return r;
    });
}

inline Result smp_consistency(const Config& cfg) {
    return detail::timed(7, "SMP consistency", 60.0, [&] {
        const auto loaded = io::parse_lq(planar_lq_document());
        const auto sol = solve_lq(loaded.model);
        const auto bundle = simulate_lq_closed_loop(loaded.model, sol.riccati, 20, RandomSource{cfg.seed + 7},
                                                    {cfg.workers, true});
        SmpOptions opt;
        opt.seed = cfg.seed + 70;
        const auto rep = check_smp_inequality(loaded.model, sol.riccati, bundle, opt);
        Result r;
        r.passed = rep.passed() && rep.checked_draws == 20 * 51 * 100;
        r.detail = "min[H(u)-H(u*)] = " + detail::fmt(rep.min_difference) + ", max|H_u(u*)| = " +
                   detail::fmt(rep.max_gradient) + ", reduction identity " +
                   (rep.reduction_identity ? "bit-exact" : "BROKEN") + " over " + std::to_string(rep.checked_draws) +
                   " draws";
        r.data = {{"model_hash", loaded.hash},         {"min_difference", rep.min_difference},
                  {"max_gradient", rep.max_gradient},  {"reduction_identity", rep.reduction_identity},
                  {"checked_points", rep.checked_points}, {"checked_draws", rep.checked_draws}};
        return r;
    });
}

inline Result portfolio_closed_form(const Config& cfg) {
    return detail::timed(8, "Portfolio closed form and Monte Carlo", 120.0, [&] {
        // Flat market: Π ≡ 0, φ ≡ 0, Θ = 0.2²(1 + 2·0.1) = 0.048,
        // ū = (a − r)/Θ and growth = ∫(r + (a − r)²/(2Θ))dt.
        const auto flat = io::parse_factor(flat_market_document());
        const auto fs = solve_portfolio(flat.model);
        const double theta_m = 0.04 * 1.2;
        const double u_oracle = 0.04 / theta_m;
        const double g_oracle = 0.02 + 0.5 * 0.04 * 0.04 / theta_m;
        const double u0 = fs.strategy(0, Vector::Zero(1))[0];
        const double u_err = std::abs(u0 - u_oracle);
        const double g_err = std::abs(fs.optimal_growth - g_oracle);

        const double theta = 0.4;
        const auto sym = io::parse_factor(symmetric_market_document(theta));
        const auto ss = solve_portfolio(sym.model);
        const auto cmp = compare_strategies(sym.model, ss,
                                            {ss.strategy, zero_strategy(sym.model), ss.strategy.scaled("scaled", 1.5)},
                                            cfg.mc_paths, cfg.seed + 8, theta, {cfg.workers, false});
        const auto& opt = cmp.rows.front();
        const double z = (opt.estimate.estimate - ss.optimal_growth) / opt.estimate.std_error;
        Result r;
        r.passed = u_err <= 1e-8 && g_err <= 1e-8 && !cmp.inconclusive && std::abs(z) <= 3.0 &&
                   cmp.dominates("optimal");
        r.detail = "flat market u* err " + detail::fmt(u_err) + ", growth err " + detail::fmt(g_err) +
                   "; symmetric formula " + detail::fmt(ss.optimal_growth) + " vs MC " +
                   detail::fmt(opt.estimate.estimate) + " (z = " + detail::fmt(z) + "), optimal " +
                   (cmp.dominates("optimal") ? "dominates" : "does NOT dominate") + " zero/scaled" +
                   (cmp.inconclusive ? " (inconclusive: " + cmp.inconclusive_reason + ")" : "");
        json rows = json::array();
        for (const auto& row : cmp.rows) rows.push_back({{"strategy", row.name}, {"estimate", detail::estimate_json(row.estimate)}});
        r.data = {{"flat", {{"model_hash", flat.hash}, {"u", u0}, {"u_error", u_err},
                            {"growth", fs.optimal_growth}, {"growth_error", g_err}}},
                  {"symmetric", {{"model_hash", sym.hash}, {"formula", ss.optimal_growth}, {"z", z},
                                 {"paths", cfg.mc_paths}, {"seed", cfg.seed + 8}, {"strategies", rows}}}};
        return r;
    });
}

inline Result degeneration_residual_check(const Config&) {
    return detail::timed(9, "Symmetric degeneration residuals", 5.0, [] {
        const double theta = 0.4;
        double worst = 0.0;
        json rows = json::array();
        for (const json& doc : {symmetric_market_document(theta), two_asset_market_document(theta)}) {
            const auto loaded = io::parse_factor(doc);
            const auto s = solve_portfolio(loaded.model);
            const auto res = degeneration_residuals(loaded.model, s, theta);
            worst = std::max(worst, res.max());
            rows.push_back({{"model_hash", loaded.hash}, {"pi", res.pi}, {"phi", res.phi}, {"kappa", res.kappa}});
        }
        Result r;
        r.passed = worst < 1e-8;
        r.detail = "max residual " + detail::fmt(worst) + " over Pi, phi, kappa (two models)";
        r.data = rows;
        return r;
    });
}

/// Criteria 1–9 in order; artifacts are written into cfg.out when set.
inline std::vector<Result> run_core(const Config& cfg, const std::function<void(const Result&)>& on_result = {}) {
    if (!cfg.out.empty()) std::filesystem::create_directories(cfg.out);
    std::vector<Result> out;
    for (auto fn : {riccati_closed_form, riccati_bounds_suite, lattice_exactness, mean_variance_representation,
                    variance_decomposition_check, symmetric_lq_monte_carlo, smp_consistency, portfolio_closed_form,
                    degeneration_residual_check}) {
        out.push_back(fn(cfg));
        detail::write_result(cfg, out.back());
        if (on_result) on_result(out.back());
    }
    return out;
}

/// Sorted relative paths and contents of every regular file below `root`.
inline std::vector<std::pair<std::string, std::string>> snapshot_tree(const std::filesystem::path& root) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        files.emplace_back(std::filesystem::relative(e.path(), root).generic_string(), io::read_file(e.path()));
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Runs `producer(dir, workers)` twice (1 and 4 workers) into fresh
/// directories and compares the trees byte for byte.
inline Result determinism(const std::function<void(const std::filesystem::path&, unsigned)>& producer,
                          const std::filesystem::path& scratch) {
    return detail::timed(10, "Determinism across runs and worker counts", 0.0, [&] {
        const auto a = scratch / "run_workers_1", b = scratch / "run_workers_4";
        std::filesystem::remove_all(a);
        std::filesystem::remove_all(b);
        producer(a, 1);
        producer(b, 4);
        const auto ta = snapshot_tree(a), tb = snapshot_tree(b);
        std::size_t differing = 0;
        std::string first;
        if (ta.size() != tb.size()) {
            differing = std::max(ta.size(), tb.size());
            first = "file lists differ";
        } else {
            for (std::size_t i = 0; i < ta.size(); ++i) {
                if (ta[i] != tb[i]) {
                    if (!differing) first = ta[i].first;
                    ++differing;
                }
            }
        }
        std::filesystem::remove_all(a);
        std::filesystem::remove_all(b);
        Result r;
        r.passed = !ta.empty() && differing == 0;
        r.detail = std::to_string(ta.size()) + " files compared, " + std::to_string(differing) + " differ" +
                   (first.empty() ? "" : " (first: " + first + ")");
        r.data = {{"files", ta.size()}, {"differing", differing}};
        return r;
    });
}

/// Produces a reduced-scale acceptance tree (Monte Carlo criteria run with
/// cfg.determinism_paths paths) for the determinism comparison.
inline void reduced_tree(const Config& base, const std::filesystem::path& dir, unsigned workers) {
    Config c = base;
    c.out = dir;
    c.workers = workers;
    c.mc_paths = base.determinism_paths;
    run_core(c);
}

inline json summary_json(const Config& cfg, const std::vector<Result>& results) {
    json rows = json::array();
    for (const auto& r : results) rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    return {{"seed", cfg.seed}, {"mc_paths", cfg.mc_paths}, {"determinism_paths", cfg.determinism_paths},
            {"criteria", rows}};
}

}  // namespace arsc::acceptance
