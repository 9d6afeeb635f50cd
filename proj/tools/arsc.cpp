// arsc: batch front end for the risk-sensitive control toolkit.
//
// Exit status: 0 success, 1 invalid model/arguments or failed check,
// 2 numerical failure (blow-up, overflow), 3 inconclusive Monte Carlo.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arsc/acceptance.hpp"
#include "arsc/criterion.hpp"
#include "arsc/io.hpp"
#include "arsc/lattice.hpp"
#include "arsc/lq_control.hpp"
#include "arsc/mp_verifier.hpp"
#include "arsc/portfolio.hpp"

namespace fs = std::filesystem;
using arsc::io::json;
using arsc::io::to_json;
using arsc::io::CsvWriter;

namespace {

constexpr int kOk = 0, kInvalid = 1, kNumerical = 2, kInconclusive = 3;

struct Options {
    std::string model;
    std::string out = "out";
    std::uint64_t seed = 1;
    std::size_t paths = 0;  // 0 = command default
    std::optional<std::size_t> steps;
    std::optional<double> gamma1, gamma2;
    std::string gamma_matrix;
    std::optional<double> theta;
    unsigned workers = 0;

    // lattice commands
    std::string payoff = "quadratic";
    std::vector<double> params;
    double horizon = 1.0;
    std::vector<std::size_t> steps_list{50, 100, 200, 400};
    std::optional<double> reference;
    std::vector<double> gamma1_list{0.0, 0.1, 0.2}, gamma2_list{0.0, 0.1, 0.2};
    std::vector<double> direction{1.0, 1.0};
    std::vector<double> scales{0.04, 0.02, 0.01, 0.005};

    // lq
    bool validate = false;
    std::vector<double> perturb{0.1, -0.1, 0.25};
    std::size_t trajectories = 0;

    // portfolio
    std::vector<std::string> strategies{"optimal", "zero", "scaled:1.5"};
    std::string strategy = "optimal";

    // verify-smp
    std::size_t stride = 10, draws = 100;
    double radius = 5.0;

    // acceptance
    std::size_t determinism_paths = 4000;
};

template <class T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

/// Every option with its effective value (defaults included). The worker
/// count is left out so that outputs do not depend on it.
json options_json(const Options& o) {
    return {{"paths", o.paths},
            {"steps", opt_json(o.steps)},
            {"gamma1", opt_json(o.gamma1)},
            {"gamma2", opt_json(o.gamma2)},
            {"gamma_matrix", o.gamma_matrix},
            {"theta", opt_json(o.theta)},
            {"payoff", o.payoff},
            {"params", o.params},
            {"horizon", o.horizon},
            {"steps_list", o.steps_list},
            {"reference", opt_json(o.reference)},
            {"gamma1_list", o.gamma1_list},
            {"gamma2_list", o.gamma2_list},
            {"direction", o.direction},
            {"scales", o.scales},
            {"validate", o.validate},
            {"perturb", o.perturb},
            {"trajectories", o.trajectories},
            {"strategies", o.strategies},
            {"strategy", o.strategy},
            {"stride", o.stride},
            {"draws", o.draws},
            {"radius", o.radius}};
}

json provenance(const std::string& command, const Options& o, const std::string& model_hash, const arsc::TimeGrid& g) {
    return {{"command", command},
            {"options", options_json(o)},
            {"format", "arsc-result v1"},
            {"seed", o.seed},
            {"grid", to_json(g)},
            {"model", o.model},
            {"model_hash", model_hash}};
}

std::size_t paths_or(const Options& o, std::size_t fallback) { return o.paths ? o.paths : fallback; }

fs::path prepare_out(const Options& o) {
    fs::path p(o.out);
    fs::create_directories(p);
    return p;
}

std::string fmt_header_cell(const std::string& name, Eigen::Index i, Eigen::Index j) {
    return name + "_" + std::to_string(i) + std::to_string(j);
}

std::vector<std::string> matrix_columns(const std::string& name, Eigen::Index r, Eigen::Index c) {
    std::vector<std::string> cols;
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) cols.push_back(fmt_header_cell(name, i, j));
    return cols;
}

void append(std::vector<CsvWriter::Cell>& row, const arsc::Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j));
}

/// Applies --gamma1/--gamma2, --gamma-matrix or --theta (with the given
/// θ-to-Γ factor) to a model's Γ.
std::optional<arsc::GammaMatrix> gamma_override(const Options& o, Eigen::Index d, double theta_factor) {
    if (!o.gamma_matrix.empty()) {
        return arsc::GammaMatrix(arsc::io::detail::matrix(arsc::io::parse_text(o.gamma_matrix, "--gamma-matrix"),
                                                          "--gamma-matrix"));
    }
    if (o.gamma1 || o.gamma2) {
        if (d != 2) throw arsc::ModelError("--gamma1/--gamma2 need a model with two noise dimensions");
        arsc::Matrix g = arsc::Matrix::Zero(2, 2);
        g(0, 0) = o.gamma1.value_or(0.0);
        g(1, 1) = o.gamma2.value_or(0.0);
        return arsc::GammaMatrix(g);
    }
    if (o.theta && theta_factor > 0.0) return arsc::GammaMatrix::scalar(theta_factor * *o.theta, std::size_t(d));
    return std::nullopt;
}

arsc::io::LoadedLq load_lq(const Options& o) {
    if (o.model.empty()) throw arsc::ModelError("--model is required");
    auto l = arsc::io::load_lq(o.model, o.steps);
    if (auto g = gamma_override(o, l.model.noise_dim(), 0.5)) l.model.Gamma = *g;
    return l;
}

arsc::io::LoadedFactor load_factor(const Options& o) {
    if (o.model.empty()) throw arsc::ModelError("--model is required");
    auto l = arsc::io::load_factor(o.model, o.steps);
    if (auto g = gamma_override(o, l.model.noise_dim(), 0.0)) l.model.Gamma = *g;
    return l;
}

json bounds_json(const arsc::BoundsReport& b) {
    return {{"applicable", b.applicable},
            {"note", b.note},
            {"bound", b.bound},
            {"sup_norm", b.sup_norm},
            {"min_eigenvalue_p", b.min_eigenvalue_p},
            {"min_eigenvalue_gap", b.min_eigenvalue_gap},
            {"nonnegativity_violations", b.nonnegativity_violations.size()},
            {"comparison_violations", b.comparison_violations.size()},
            {"norm_violation", b.norm_violation},
            {"ok", b.ok()}};
}

json estimate_json(const arsc::ExponentialMomentEstimate& e) { return arsc::acceptance::detail::estimate_json(e); }

// --------------------------------------------------------------------------

int cmd_riccati(const Options& o) {
    const auto l = load_lq(o);
    const auto& m = l.model;
    arsc::require_valid(arsc::validate_lq_model(m), "LQ model");
    const auto out = prepare_out(o);
    const auto ind = arsc::riccati_wellposedness_indicator(m);
    const auto sol = arsc::solve_riccati_lq(m);
    const auto n = m.state_dim();
    {
        auto cols = matrix_columns("P", n, n);
        cols.insert(cols.begin(), {"index", "t"});
        CsvWriter csv(out / "riccati.csv", "riccati", cols);
        for (std::size_t i = sol.valid_from; i < sol.values.size(); ++i) {
            std::vector<CsvWriter::Cell> row{i, m.grid().time(i)};
            append(row, sol[i]);
            csv.row(row);
        }
    }
    json doc = provenance("riccati", o, l.hash, m.grid());
    doc["blowup"] = sol.blowup;
    doc["valid_from_index"] = sol.valid_from;
    doc["blowup_threshold"] = sol.blowup_threshold;
    doc["hypothesis"] = sol.hypothesis_verified ? "verified" : "hypothesis-unverified";
    doc["wellposedness_indicator_max"] = *std::max_element(ind.values().begin(), ind.values().end());
    doc["bound_B_P"] = arsc::riccati_bound(m);
    doc["max_norm"] = sol.max_norm;
    if (!sol.blowup) {
        doc["P0"] = to_json(sol[0]);
        doc["bounds"] = bounds_json(arsc::riccati_bounds_check(m, sol));
    }
    arsc::io::write_json(out / "result.json", doc);
    if (sol.blowup) {
        std::cerr << "Riccati solution blew up; partial path from index " << sol.valid_from << " written\n";
        return kNumerical;
    }
    std::cout << "P(0) = " << sol[0] << "\n";
    return kOk;
}

int cmd_lq(const Options& o) {
    const auto l = load_lq(o);
    const auto& m = l.model;
    const auto out = prepare_out(o);
    arsc::LqSolution sol = [&] {
        try {
            return arsc::solve_lq(m);
        } catch (const arsc::RiccatiBlowupError& e) {
            json doc = provenance("lq", o, l.hash, m.grid());
            doc["error"] = e.what();
            doc["valid_from_index"] = e.partial().valid_from;
            arsc::io::write_json(out / "result.json", doc);
            throw;
        }
    }();
    const auto k = m.control_dim(), n = m.state_dim();
    {
        auto cols = matrix_columns("K", k, n);
        cols.insert(cols.begin(), "t");
        CsvWriter csv(out / "gain.csv", "lq-gain", cols);
        for (std::size_t i = 0; i < sol.gain.size(); ++i) {
            std::vector<CsvWriter::Cell> row{m.grid().time(i)};
            append(row, sol.gain[i]);
            csv.row(row);
        }
    }
    json doc = provenance("lq", o, l.hash, m.grid());
    doc["optimal_value"] = sol.optimal_value;
    doc["quadratic_part"] = sol.quadratic_part;
    doc["trace_integral"] = sol.trace_integral;
    doc["P0"] = to_json(sol.riccati[0]);
    doc["K0"] = to_json(sol.gain[0]);
    doc["hypothesis"] = sol.hypothesis_label();
    doc["Gamma"] = to_json(m.Gamma.matrix());
    if (sol.bounds) doc["bounds"] = bounds_json(*sol.bounds);
    int status = kOk;
    if (o.validate) {
        const std::size_t paths = paths_or(o, 100000);
        const auto v = arsc::validate_symmetric_case(m, sol, paths, o.seed, o.perturb, {o.workers, false});
        json pert = json::array();
        for (const auto& p : v.perturbations)
            pert.push_back({{"gain_offset", p.offset}, {"estimate", estimate_json(p.estimate)}, {"not_better", p.not_better}});
        doc["validation"] = {{"theta", v.theta},
                             {"paths", paths},
                             {"formula", v.formula},
                             {"estimate", estimate_json(v.estimate)},
                             {"z", v.z},
                             {"excluded_paths", v.excluded_paths},
                             {"inconclusive", v.inconclusive},
                             {"inconclusive_reason", v.inconclusive_reason},
                             {"agrees", v.agrees()},
                             {"perturbations", pert}};
        std::cout << "formula " << v.formula << "  MC " << v.estimate.estimate << " +- " << v.estimate.std_error
                  << "  z " << v.z << (v.inconclusive ? "  INCONCLUSIVE: " + v.inconclusive_reason : "") << "\n";
        if (v.inconclusive) status = kInconclusive;
        else if (!v.agrees() || !v.perturbations_ok()) status = kInvalid;
    } else {
        doc["note"] = "asymmetric values are certified by ODE residuals and limits, not Monte Carlo";
    }
    arsc::io::write_json(out / "result.json", doc);
    std::cout << "optimal value " << sol.optimal_value << " (" << sol.hypothesis_label() << ")\n";
    return status;
}

int cmd_lq_sim(const Options& o) {
    const auto l = load_lq(o);
    const auto& m = l.model;
    const auto out = prepare_out(o);
    const auto sol = arsc::solve_lq(m);
    const std::size_t paths = paths_or(o, 1000);
    const bool store = o.trajectories > 0;
    const auto b = arsc::simulate_lq_closed_loop(m, sol.riccati, paths, arsc::RandomSource{o.seed}, {o.workers, store});
    const auto n = m.state_dim();
    {
        std::vector<std::string> cols{"path"};
        for (Eigen::Index j = 0; j < n; ++j) cols.push_back("x_T_" + std::to_string(j));
        for (const char* c : {"running_cost", "terminal_cost", "total_cost", "excluded"}) cols.emplace_back(c);
        CsvWriter csv(out / "paths.csv", "lq-sim-paths", cols);
        for (std::size_t p = 0; p < paths; ++p) {
            std::vector<CsvWriter::Cell> row{p};
            const auto x = b.terminal_state(p);
            for (Eigen::Index j = 0; j < n; ++j) row.emplace_back(x[j]);
            row.emplace_back(b.cost_integral[p]);
            row.emplace_back(b.terminal_cost[p]);
            row.emplace_back(b.cost_integral[p] + b.terminal_cost[p]);
            row.emplace_back(static_cast<std::size_t>(b.excluded[p]));
            csv.row(row);
        }
    }
    if (store) {
        const auto p = sol.riccati.path();
        std::vector<std::string> cols{"path", "t"};
        for (Eigen::Index j = 0; j < n; ++j) cols.push_back("x_" + std::to_string(j));
        for (Eigen::Index j = 0; j < m.control_dim(); ++j) cols.push_back("u_" + std::to_string(j));
        cols.emplace_back("Y");
        for (Eigen::Index j = 0; j < m.noise_dim(); ++j) cols.push_back("Z_" + std::to_string(j));
        CsvWriter csv(out / "trajectories.csv", "lq-sim-trajectories", cols);
        for (std::size_t path = 0; path < std::min(o.trajectories, paths); ++path) {
            std::vector<arsc::Vector> xs;
            for (std::size_t i = 0; i < m.grid().nodes(); ++i) xs.emplace_back(b.state(path, i));
            const auto bs = arsc::closed_form_bsde(m, p, xs);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                std::vector<CsvWriter::Cell> row{path, m.grid().time(i)};
                for (Eigen::Index j = 0; j < n; ++j) row.emplace_back(xs[i][j]);
                const auto u = b.control(path, i);
                for (Eigen::Index j = 0; j < u.size(); ++j) row.emplace_back(u[j]);
                row.emplace_back(bs.y[i]);
                for (Eigen::Index j = 0; j < bs.z[i].size(); ++j) row.emplace_back(bs.z[i][j]);
                csv.row(row);
            }
        }
    }
    std::vector<double> costs;
    for (std::size_t p = 0; p < paths; ++p)
        if (!b.excluded[p]) costs.push_back(b.cost_integral[p] + b.terminal_cost[p]);
    json doc = provenance("lq-sim", o, l.hash, m.grid());
    doc["paths"] = paths;
    doc["excluded_paths"] = b.excluded_count;
    doc["control_bound_flags"] = b.control_bound_flags;
    doc["optimal_value_formula"] = sol.optimal_value;
    if (!costs.empty()) {
        const auto mean = arsc::sample_mean(costs);
        doc["mean_cost"] = {{"mean", mean.mean}, {"std_error", mean.std_error}};
        if (auto c = m.Gamma.scalar_value(); c && *c > 0.0)
            doc["symmetric_estimate"] = estimate_json(arsc::estimate_symmetric_value(m, b, 2.0 * *c));
    }
    arsc::io::write_json(out / "result.json", doc);
    std::cout << "simulated " << paths << " paths (" << b.excluded_count << " excluded)\n";
    return kOk;
}

json payoff_document(const Options& o) {
    return {{"payoff", o.payoff}, {"params", o.params}, {"horizon", o.horizon}};
}

int cmd_bsde(const Options& o) {
    const auto xi = arsc::payoffs::from_name(o.payoff, o.params);
    const auto out = prepare_out(o);
    const double g1 = o.gamma1.value_or(0.0), g2 = o.gamma2.value_or(0.0);
    const auto table = arsc::convergence_probe(xi, g1, g2, o.horizon, o.steps_list, o.reference);
    const auto doc_model = payoff_document(o);
    {
        std::vector<std::string> cols{"N", "y0", "error", "increment"};
        if (o.theta) cols.emplace_back("symmetric_reference");
        CsvWriter csv(out / "bsde.csv", "bsde-convergence", cols);
        for (const auto& r : table.rows) {
            std::vector<CsvWriter::Cell> row{r.steps, r.y0, r.error, r.increment};
            if (o.theta)
                row.emplace_back(arsc::lattice_solve_symmetric_reference(xi, *o.theta, arsc::TimeGrid(o.horizon, r.steps)));
            csv.row(row);
        }
    }
    const auto finest = arsc::lattice_solve(xi, g1, g2, arsc::TimeGrid(o.horizon, table.rows.back().steps));
    json doc = provenance("bsde", o, arsc::io::model_hash(doc_model), arsc::TimeGrid(o.horizon, finest.steps));
    doc["payoff"] = doc_model;
    doc["growth"] = arsc::to_string(xi.growth);
    doc["gamma1"] = g1;
    doc["gamma2"] = g2;
    doc["reference"] = table.reference;
    doc["reference_is_finest_lattice"] = table.reference_is_finest;
    doc["empirical_order"] = table.empirical_order ? json(*table.empirical_order) : json(nullptr);
    doc["y0"] = finest.y0;
    doc["regime"] = finest.regime_label();
    doc["stability_number"] = finest.stability_number;
    doc["warnings"] = finest.warnings;
    arsc::io::write_json(out / "result.json", doc);
    for (const auto& w : finest.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "y0 = " << finest.y0 << " at N = " << finest.steps << "\n";
    return kOk;
}

arsc::TimeGrid lattice_grid(const Options& o) { return arsc::TimeGrid(o.horizon, o.steps.value_or(200)); }

int cmd_criterion(const Options& o) {
    const auto xi = arsc::payoffs::from_name(o.payoff, o.params);
    const auto out = prepare_out(o);
    const auto g = lattice_grid(o);
    const auto table = arsc::criterion_table(xi, o.gamma1_list, o.gamma2_list, g);
    CsvWriter csv(out / "criterion.csv", "criterion", {"gamma1", "gamma2", "epsilon"});
    for (const auto& c : table) csv.row({c.gamma1, c.gamma2, c.value});
    json doc = provenance("criterion", o, arsc::io::model_hash(payoff_document(o)), g);
    doc["payoff"] = payoff_document(o);
    doc["lattice_mean"] = arsc::lattice_moments(xi, g).mean;
    doc["regime"] = xi.within_integrability(g.horizon()) ? "within well-posedness regime"
                                                         : "outside the well-posedness regime";
    arsc::io::write_json(out / "result.json", doc);
    return kOk;
}

int cmd_taylor(const Options& o) {
    if (o.direction.size() != 2) throw arsc::ModelError("--direction needs two components");
    const auto xi = arsc::payoffs::from_name(o.payoff, o.params);
    const auto out = prepare_out(o);
    const auto g = lattice_grid(o);
    const auto rep = arsc::mean_variance_check(xi, o.direction[0], o.direction[1], o.scales, g);
    {
        CsvWriter csv(out / "taylor.csv", "taylor-remainders", {"h", "gamma1", "gamma2", "epsilon", "remainder", "ratio"});
        for (std::size_t k = 0; k < rep.remainders.size(); ++k) {
            const auto& r = rep.remainders[k];
            const auto& c = rep.criterion_values[k];
            csv.row({r.scale, c.gamma1, c.gamma2, c.value, r.remainder,
                     r.ratio ? CsvWriter::Cell(*r.ratio) : CsvWriter::Cell(std::string())});
        }
    }
    json doc = provenance("taylor", o, arsc::io::model_hash(payoff_document(o)), g);
    doc["payoff"] = payoff_document(o);
    doc["mean"] = rep.mean;
    doc["d1"] = rep.d1;
    doc["d2"] = rep.d2;
    doc["lattice_variance"] = rep.lattice_variance;
    doc["direction"] = {rep.direction1, rep.direction2};
    arsc::io::write_json(out / "result.json", doc);
    std::cout << "mean " << rep.mean << "  d1 " << rep.d1 << "  d2 " << rep.d2 << "\n";
    return kOk;
}

int cmd_vardecomp(const Options& o) {
    const auto xi = arsc::payoffs::from_name(o.payoff, o.params);
    const auto out = prepare_out(o);
    const auto g = lattice_grid(o);
    const auto v = arsc::variance_decomposition(xi, g);
    json axioms = json::array();
    for (const auto& a : v.axioms)
        axioms.push_back({{"axiom", a.axiom}, {"family", a.family}, {"discrepancy", a.discrepancy},
                          {"tolerance", a.tolerance}, {"passed", a.passed()}});
    json doc = provenance("vardecomp", o, arsc::io::model_hash(payoff_document(o)), g);
    doc["payoff"] = payoff_document(o);
    doc["d1"] = v.d1;
    doc["d2"] = v.d2;
    doc["lattice_variance"] = v.lattice_variance;
    doc["identity_gap"] = v.identity_gap();
    doc["axioms"] = axioms;
    arsc::io::write_json(out / "result.json", doc);
    std::cout << "d1 " << v.d1 << "  d2 " << v.d2 << "  Var " << v.lattice_variance << "  axioms "
              << (v.axioms_pass() ? "pass" : "FAIL") << "\n";
    return v.axioms_pass() ? kOk : kInvalid;
}

std::vector<double> parse_numbers(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw arsc::ModelError("bad number '" + item + "' in strategy specification");
        }
    }
    return v;
}

/// optimal | zero | scaled:<factor> | constant:<w1>,<w2>,...
arsc::AffineStrategy make_strategy(const std::string& spec, const arsc::FactorMarketModel& m,
                                   const arsc::PortfolioSolution& s) {
    if (spec == "optimal") return s.strategy;
    if (spec == "zero") return arsc::zero_strategy(m);
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "scaled" && !arg.empty()) return s.strategy.scaled(spec, parse_numbers(arg).at(0));
    if (kind == "constant" && !arg.empty()) {
        const auto w = parse_numbers(arg);
        if (static_cast<Eigen::Index>(w.size()) != m.assets())
            throw arsc::ModelError("constant strategy needs one weight per asset");
        return arsc::AffineStrategy::constant(spec, m.grid(), Eigen::Map<const arsc::Vector>(w.data(), m.assets()),
                                              m.factors());
    }
    throw arsc::ModelError("unknown strategy '" + spec + "' (optimal, zero, scaled:<f>, constant:<w,...>)");
}

int cmd_portfolio(const Options& o) {
    const auto l = load_factor(o);
    const auto& m = l.model;
    const auto out = prepare_out(o);
    const auto s = arsc::solve_portfolio(m);
    const auto n = m.factors();
    {
        auto cols = matrix_columns("Pi", n, n);
        cols.insert(cols.begin(), "t");
        for (Eigen::Index j = 0; j < n; ++j) cols.push_back("phi_" + std::to_string(j));
        cols.emplace_back("kappa");
        CsvWriter csv(out / "solution.csv", "portfolio-solution", cols);
        for (std::size_t i = 0; i < m.grid().nodes(); ++i) {
            std::vector<CsvWriter::Cell> row{m.grid().time(i)};
            append(row, s.pi[i]);
            for (Eigen::Index j = 0; j < n; ++j) row.emplace_back(s.phi[i][j]);
            row.emplace_back(s.kappa[i]);
            csv.row(row);
        }
    }
    const auto pb = arsc::pi_bounds_check(m, s);
    json doc = provenance("portfolio", o, l.hash, m.grid());
    doc["Theta"] = to_json(s.theta_m());
    doc["Xi"] = to_json(s.xi_m());
    doc["Psi"] = to_json(s.psi_m());
    doc["schur_min_eigenvalue"] = s.coefficients.schur_min_eigenvalue;
    doc["hypothesis"] = s.hypothesis_label();
    doc["Pi0"] = to_json(s.pi[0]);
    doc["phi0"] = to_json(s.phi.front());
    doc["kappa0"] = s.kappa.front();
    doc["optimal_growth"] = s.optimal_growth;
    doc["u0"] = to_json(s.strategy(0, m.x0));
    doc["admissibility"] = "asserted, not checked numerically";
    doc["pi_bounds"] = {{"applicable", pb.applicable}, {"bound", pb.bound}, {"sup_norm", pb.sup_norm},
                        {"min_eigenvalue", pb.min_eigenvalue}, {"ok", pb.ok()}};
    int status = kOk;
    if (o.theta) {
        std::vector<arsc::AffineStrategy> strategies;
        for (const auto& spec : o.strategies) strategies.push_back(make_strategy(spec, m, s));
        const std::size_t paths = paths_or(o, 100000);
        const auto cmp = arsc::compare_strategies(m, s, strategies, paths, o.seed, *o.theta, {o.workers, false});
        json rows = json::array();
        if (cmp.monte_carlo) {
            CsvWriter csv(out / "strategies.csv", "portfolio-strategies",
                          {"strategy", "growth_estimate", "std_error", "rank", "heavy_tail", "excluded_paths"});
            for (const auto& r : cmp.rows) {
                csv.row({r.name, r.estimate.estimate, r.estimate.std_error, r.rank,
                         static_cast<std::size_t>(r.estimate.heavy_tail), r.excluded_paths});
                rows.push_back({{"strategy", r.name}, {"estimate", estimate_json(r.estimate)}, {"rank", r.rank}});
            }
        }
        doc["comparison"] = {{"monte_carlo", cmp.monte_carlo}, {"note", cmp.note},       {"theta", *o.theta},
                             {"paths", paths},                 {"rows", rows},           {"inconclusive", cmp.inconclusive},
                             {"inconclusive_reason", cmp.inconclusive_reason}};
        std::cout << cmp.note << "\n";
        for (const auto& r : cmp.rows)
            std::cout << "  " << r.name << "  " << r.estimate.estimate << " +- " << r.estimate.std_error << "\n";
        if (cmp.inconclusive) status = kInconclusive;
    } else if (!m.Gamma.scalar_value()) {
        doc["note"] = "asymmetric Gamma: growth certified by ODE residuals and limits, no Monte Carlo representation";
    }
    arsc::io::write_json(out / "result.json", doc);
    std::cout << "optimal growth " << s.optimal_growth << " (" << s.hypothesis_label() << ")\n";
    return status;
}

int cmd_portfolio_sim(const Options& o) {
    const auto l = load_factor(o);
    const auto& m = l.model;
    const auto out = prepare_out(o);
    const auto s = arsc::solve_portfolio(m);
    const auto strat = make_strategy(o.strategy, m, s);
    const std::size_t paths = paths_or(o, 1000);
    const auto b = arsc::simulate_factor_and_wealth(m, strat, paths, arsc::RandomSource{o.seed}, {o.workers, false});
    {
        CsvWriter csv(out / "log_wealth.csv", "portfolio-sim", {"path", "log_wealth", "excluded"});
        for (std::size_t p = 0; p < paths; ++p) csv.row({p, b.log_wealth[p], static_cast<std::size_t>(b.excluded[p])});
    }
    const auto lw = b.included_log_wealth();
    json doc = provenance("portfolio-sim", o, l.hash, m.grid());
    doc["strategy"] = strat.name;
    doc["paths"] = paths;
    doc["excluded_paths"] = b.excluded_count;
    doc["control_bound_flags"] = b.control_bound_flags;
    int status = kOk;
    if (!lw.empty()) {
        const auto mean = arsc::sample_mean(lw);
        doc["mean_log_wealth"] = {{"mean", mean.mean}, {"std_error", mean.std_error}};
        if (o.theta) {
            const auto e = arsc::estimate_growth_rate(lw, *o.theta);
            doc["growth_estimate"] = estimate_json(e);
            if (e.heavy_tail || e.samples < arsc::kMinConclusivePaths) status = kInconclusive;
        }
    }
    arsc::io::write_json(out / "result.json", doc);
    return status;
}

int cmd_verify_smp(const Options& o) {
    const auto l = load_lq(o);
    const auto& m = l.model;
    const auto out = prepare_out(o);
    const auto sol = arsc::solve_lq(m);
    arsc::SmpOptions so;
    so.paths = paths_or(o, 20);
    so.time_stride = o.stride;
    so.draws = o.draws;
    so.radius = o.radius;
    so.seed = o.seed + 1;
    const auto b = arsc::simulate_lq_closed_loop(m, sol.riccati, so.paths, arsc::RandomSource{o.seed}, {o.workers, true});
    const auto rep = arsc::check_smp_inequality(m, sol.riccati, b, so);
    const auto res = arsc::adjoint_residual(m, sol.riccati);
    const auto p2 = arsc::second_order_adjoint_report(m, sol.riccati);
    auto witnesses = [](const std::vector<arsc::SmpWitness>& w) {
        json a = json::array();
        for (const auto& x : w) a.push_back({{"path", x.path}, {"time_index", x.time_index}, {"u", to_json(x.u)}, {"value", x.value}});
        return a;
    };
    json doc = provenance("verify-smp", o, l.hash, m.grid());
    doc["status"] = "consistency with the maximum principle (not a proof)";
    doc["paths"] = so.paths;
    doc["checked_points"] = rep.checked_points;
    doc["checked_draws"] = rep.checked_draws;
    doc["min_difference"] = rep.min_difference;
    doc["max_gradient"] = rep.max_gradient;
    doc["reduction_identity"] = rep.reduction_identity;
    doc["inequality_witnesses"] = witnesses(rep.inequality_witnesses);
    doc["stationarity_witnesses"] = witnesses(rep.stationarity_witnesses);
    doc["adjoint_residual_max"] = *std::max_element(res.values().begin(), res.values().end());
    doc["second_order"] = {{"P2_0", to_json(p2.p2[0])}, {"terminal_error", p2.terminal_error},
                           {"min_eigenvalue", p2.min_eigenvalue}, {"psd_expected", p2.psd_expected},
                           {"psd_holds", p2.psd_holds}};
    doc["passed"] = rep.passed();
    arsc::io::write_json(out / "result.json", doc);
    std::cout << "min[H(u)-H(u*)] " << rep.min_difference << "  max|H_u| " << rep.max_gradient << "  "
              << (rep.passed() ? "consistent" : "VIOLATED") << "\n";
    return rep.passed() ? kOk : kInvalid;
}

int cmd_acceptance(const Options& o) {
    using namespace arsc::acceptance;
    Config cfg;
    cfg.seed = o.seed;
    cfg.workers = o.workers;
    cfg.mc_paths = paths_or(o, cfg.mc_paths);
    cfg.determinism_paths = o.determinism_paths;
    cfg.out = prepare_out(o);
    bool all = true;
    auto report = [&](const Result& r) {
        std::cout << r.line() << std::endl;
        all = all && r.ok();
    };
    auto results = run_core(cfg, report);
    const fs::path scratch = fs::temp_directory_path() / ("arsc-determinism-" + std::to_string(cfg.seed));
    results.push_back(determinism([&](const fs::path& dir, unsigned w) { reduced_tree(cfg, dir, w); }, scratch));
    fs::remove_all(scratch);
    detail::write_result(cfg, results.back());
    report(results.back());
    arsc::io::write_json(cfg.out / "summary.json", summary_json(cfg, results));
    CsvWriter csv(cfg.out / "summary.csv", "acceptance-summary", {"id", "name", "passed"});
    for (const auto& r : results) csv.row({static_cast<std::size_t>(r.id), r.name, static_cast<std::size_t>(r.passed)});
    std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
    return all ? kOk : kInvalid;
}

void common(CLI::App* c, Options& o, bool model = true) {
    if (model) c->add_option("--model", o.model, "Model JSON file");
    c->add_option("--out", o.out, "Output directory")->capture_default_str();
    c->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    c->add_option("--workers", o.workers, "Worker threads (0 = hardware concurrency)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymmetric risk-sensitive control toolkit"};
    app.require_subcommand(1);
    Options o;

    auto* riccati = app.add_subcommand("riccati", "Solve the LQ Riccati equation");
    common(riccati, o);
    riccati->add_option("--steps", o.steps, "Override the grid step count");
    riccati->add_option("--gamma1", o.gamma1, "Gamma diagonal entry 1 (two-noise models)");
    riccati->add_option("--gamma2", o.gamma2, "Gamma diagonal entry 2 (two-noise models)");
    riccati->add_option("--gamma-matrix", o.gamma_matrix, "Gamma as a JSON 2D array");
    riccati->add_option("--theta", o.theta, "Use Gamma = (theta/2) I");

    auto* lq = app.add_subcommand("lq", "Optimal feedback and value; optional symmetric Monte Carlo check");
    common(lq, o);
    lq->add_option("--steps", o.steps, "Override the grid step count");
    lq->add_option("--gamma1", o.gamma1, "Gamma diagonal entry 1 (two-noise models)");
    lq->add_option("--gamma2", o.gamma2, "Gamma diagonal entry 2 (two-noise models)");
    lq->add_option("--gamma-matrix", o.gamma_matrix, "Gamma as a JSON 2D array");
    lq->add_option("--theta", o.theta, "Use Gamma = (theta/2) I");
    lq->add_flag("--validate", o.validate, "Compare with (1/theta) log E exp(theta cost) (scalar Gamma only)");
    lq->add_option("--paths", o.paths, "Monte Carlo paths (default 100000)");
    lq->add_option("--perturb", o.perturb, "Constant gain offsets to probe")->capture_default_str();

    auto* lqsim = app.add_subcommand("lq-sim", "Simulate the optimal closed loop");
    common(lqsim, o);
    lqsim->add_option("--steps", o.steps, "Override the grid step count");
    lqsim->add_option("--theta", o.theta, "Use Gamma = (theta/2) I");
    lqsim->add_option("--paths", o.paths, "Paths (default 1000)");
    lqsim->add_option("--trajectories", o.trajectories, "Write the first N full trajectories with (Y, Z)");

    auto payoff_opts = [&](CLI::App* c) {
        common(c, o, false);
        c->add_option("--payoff", o.payoff, "constant | linear | quadratic | product | call")->capture_default_str();
        c->add_option("--params", o.params, "Payoff parameters");
        c->add_option("--horizon", o.horizon, "Terminal time")->capture_default_str();
    };
    auto* bsde = app.add_subcommand("bsde", "Lattice solve with a convergence table");
    payoff_opts(bsde);
    bsde->add_option("--gamma1", o.gamma1, "Penalty on the first noise");
    bsde->add_option("--gamma2", o.gamma2, "Penalty on the second noise");
    bsde->add_option("--steps-list", o.steps_list, "Lattice step counts")->capture_default_str();
    bsde->add_option("--reference", o.reference, "Reference value (default: finest lattice)");
    bsde->add_option("--theta", o.theta, "Also report the symmetric reference (1/theta) log E exp(theta xi)");

    auto* crit = app.add_subcommand("criterion", "Criterion values over a gamma grid");
    payoff_opts(crit);
    crit->add_option("--steps", o.steps, "Lattice steps (default 200)");
    crit->add_option("--gamma1", o.gamma1_list, "gamma1 grid")->capture_default_str();
    crit->add_option("--gamma2", o.gamma2_list, "gamma2 grid")->capture_default_str();

    auto* taylor = app.add_subcommand("taylor", "Mean-variance expansion remainders");
    payoff_opts(taylor);
    taylor->add_option("--steps", o.steps, "Lattice steps (default 200)");
    taylor->add_option("--direction", o.direction)->capture_default_str();
    taylor->add_option("--scales", o.scales)->capture_default_str();

    auto* vd = app.add_subcommand("vardecomp", "Variance decomposition with axiom checks");
    payoff_opts(vd);
    vd->add_option("--steps", o.steps, "Lattice steps (default 200)");

    auto* port = app.add_subcommand("portfolio", "Optimal strategy and growth rate");
    common(port, o);
    port->add_option("--steps", o.steps, "Override the grid step count");
    port->add_option("--gamma1", o.gamma1, "Gamma diagonal entry 1 (two-noise models)");
    port->add_option("--gamma2", o.gamma2, "Gamma diagonal entry 2 (two-noise models)");
    port->add_option("--gamma-matrix", o.gamma_matrix, "Gamma as a JSON 2D array");
    port->add_option("--theta", o.theta, "Enable Monte Carlo comparison (requires Gamma = (theta/4) I)");
    port->add_option("--paths", o.paths, "Monte Carlo paths (default 100000)");
    port->add_option("--strategies", o.strategies, "optimal | zero | scaled:<f> | constant:<w,...>")
        ->capture_default_str();

    auto* psim = app.add_subcommand("portfolio-sim", "Simulate log-wealth under one strategy");
    common(psim, o);
    psim->add_option("--steps", o.steps, "Override the grid step count");
    psim->add_option("--theta", o.theta, "Also estimate the risk-sensitized growth rate");
    psim->add_option("--paths", o.paths, "Paths (default 1000)");
    psim->add_option("--strategy", o.strategy)->capture_default_str();

    auto* smp = app.add_subcommand("verify-smp", "Check the maximum principle along optimal paths");
    common(smp, o);
    smp->add_option("--steps", o.steps, "Override the grid step count");
    smp->add_option("--paths", o.paths, "Paths (default 20)");
    smp->add_option("--stride", o.stride)->capture_default_str();
    smp->add_option("--draws", o.draws)->capture_default_str();
    smp->add_option("--radius", o.radius)->capture_default_str();

    auto* acc = app.add_subcommand("acceptance", "Run the acceptance suite");
    common(acc, o, false);
    acc->add_option("--paths", o.paths, "Monte Carlo paths for criteria 6 and 8 (default 100000)");
    acc->add_option("--determinism-paths", o.determinism_paths, "Paths per determinism rerun")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*riccati) return cmd_riccati(o);
        if (*lq) return cmd_lq(o);
        if (*lqsim) return cmd_lq_sim(o);
        if (*bsde) return cmd_bsde(o);
        if (*crit) return cmd_criterion(o);
        if (*taylor) return cmd_taylor(o);
        if (*vd) return cmd_vardecomp(o);
        if (*port) return cmd_portfolio(o);
        if (*psim) return cmd_portfolio_sim(o);
        if (*smp) return cmd_verify_smp(o);
        if (*acc) return cmd_acceptance(o);
    } catch (const arsc::ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kInvalid;
    } catch (const arsc::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const arsc::PreconditionError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    }
    return kInvalid;
}
