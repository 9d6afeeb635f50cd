#include <gtest/gtest.h>

#include <cmath>

#include "arsc/portfolio.hpp"
#include "test_models.hpp"

using namespace arsc;
using arsc::testing::factor_model;
using arsc::testing::mat;
using arsc::testing::vec;

namespace {

FactorMarketModel flat(std::size_t steps = 400) {
    return factor_model(vec({0.06}), vec({0.0}), mat({{0.0}}), mat({{-1.0}}), mat({{0.0, 0.1}}), mat({{0.2, 0.0}}),
                        0.02, mat({{0.1, 0.0}, {0.0, 0.3}}), vec({0.0}), steps);
}

FactorMarketModel one_factor(const Matrix& gamma, std::size_t steps = 400) {
    return factor_model(vec({0.06}), vec({0.05}), mat({{0.3}}), mat({{-1.0}}), mat({{0.03, 0.1}}), mat({{0.2, 0.0}}),
                        0.02, gamma, vec({0.1}), steps);
}

FactorMarketModel two_asset(const Matrix& gamma, std::size_t steps = 400) {
    return factor_model(vec({0.05, 0.07}), vec({0.01, -0.02}), mat({{0.2, 0.0}, {0.1, 0.3}}),
                        mat({{-0.8, 0.1}, {0.0, -0.5}}), mat({{0.05, 0.1, 0.0}, {0.0, 0.02, 0.12}}),
                        mat({{0.2, 0.05, 0.0}, {0.0, 0.1, 0.25}}), 0.02, gamma, vec({0.1, -0.2}), steps);
}

/// Oracle: the (Π, φ, κ) system written out from Θ = Σ(2Γ+I)Σᵀ, Ξ = 2ΣΓΛᵀ,
/// Ψ = 2ΛΓΛᵀ and integrated jointly with a dense RK4 (constant r).
struct Reference {
    Matrix pi;
    Vector phi;
    double kappa;
};

Reference dense_reference(const FactorMarketModel& m, std::size_t steps) {
    const auto d = m.noise_dim();
    const Matrix& g = m.Gamma.matrix();
    const Matrix th = m.Sigma * (2 * g + Matrix::Identity(d, d)) * m.Sigma.transpose();
    const Matrix thi = th.inverse();
    const Matrix xi = 2 * m.Sigma * g * m.Lambda.transpose();
    const Matrix psi = 2 * m.Lambda * g * m.Lambda.transpose();
    const Matrix s = psi - xi.transpose() * thi * xi;
    const Matrix f = m.B - xi.transpose() * thi * m.A;
    const Vector e = m.a - m.r[0] * Vector::Ones(m.a.size());
    const double r = m.r[0];
    const auto n = m.factors();
    struct St {
        Matrix p;
        Vector q;
        double k;
    };
    auto rhs = [&](const St& y) {
        St d;
        d.p = -(f.transpose() * y.p + y.p * f - y.p * s * y.p + m.A.transpose() * thi * m.A);
        d.q = -((m.B.transpose() - y.p * s - m.A.transpose() * thi * xi) * y.q + y.p * (m.b - xi.transpose() * thi * e) +
                m.A.transpose() * thi * e);
        const double l = -0.5 * ((m.Lambda * m.Lambda.transpose() * y.p).trace() + 2 * r + 2 * m.b.dot(y.q) -
                                 y.q.dot(s * y.q) - 2 * y.q.dot(xi.transpose() * thi * e) + e.dot(thi * e));
        d.k = -l;  // κ(t) = ∫_t^T l
        return d;
    };
    auto axpy = [](const St& y, double h, const St& k) { return St{y.p + h * k.p, y.q + h * k.q, y.k + h * k.k}; };
    St y{Matrix::Zero(n, n), Vector::Zero(n), 0.0};
    const double h = m.grid().horizon() / double(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const St k1 = rhs(y), k2 = rhs(axpy(y, -h / 2, k1)), k3 = rhs(axpy(y, -h / 2, k2)), k4 = rhs(axpy(y, -h, k3));
        y.p -= h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
        y.q -= h / 6 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q);
        y.k -= h / 6 * (k1.k + 2 * k2.k + 2 * k3.k + k4.k);
    }
    return {y.p, y.q, y.k};
}

}  // namespace

TEST(Portfolio, CoefficientBlocks) {
    const auto c = build_theta_xi_psi(flat());
    EXPECT_NEAR(c.theta(0, 0), 0.04 * 1.2, 1e-16);
    EXPECT_NEAR(c.xi(0, 0), 0.0, 1e-16);
    EXPECT_NEAR(c.psi(0, 0), 2 * 0.01 * 0.3, 1e-16);
    const auto d = build_theta_xi_psi(one_factor(mat({{0.1, 0.0}, {0.0, 0.3}})));
    EXPECT_NEAR(d.xi(0, 0), 2 * 0.2 * 0.1 * 0.03, 1e-16);
    EXPECT_NEAR(d.psi(0, 0), 2 * (0.1 * 0.03 * 0.03 + 0.3 * 0.01), 1e-16);
}

TEST(Portfolio, FlatMarketClosedForm) {
    // A = 0: Π ≡ 0, φ ≡ 0, ū = (a − r)/Θ, growth = r + ½(a − r)²/Θ.
    const auto s = solve_portfolio(flat());
    const double theta = 0.048;
    EXPECT_EQ(s.pi[0](0, 0), 0.0);
    EXPECT_EQ(s.phi[0][0], 0.0);
    EXPECT_NEAR(s.strategy(0, vec({0.3}))[0], 0.04 / theta, 1e-14);
    EXPECT_NEAR(s.optimal_growth, 0.02 + 0.5 * 0.04 * 0.04 / theta, 1e-14);
    EXPECT_NEAR(s.kappa.front(), -s.optimal_growth, 1e-14);
    EXPECT_EQ(s.kappa.back(), 0.0);
}

TEST(Portfolio, MatchesDenseReference) {
    for (const auto& m : {one_factor(mat({{0.1, 0.0}, {0.0, 0.3}})), one_factor(0.1 * Matrix::Identity(2, 2)),
                          two_asset(mat({{0.2, 0.05, 0.0}, {0.05, 0.1, 0.0}, {0.0, 0.0, 0.3}}))}) {
        const auto s = solve_portfolio(m);
        const auto ref = dense_reference(m, 8000);
        EXPECT_LT((s.pi[0] - ref.pi).norm(), 1e-10);
        EXPECT_LT((s.phi.front() - ref.phi).norm(), 1e-10);
        EXPECT_NEAR(s.kappa.front(), ref.kappa, 1e-10);
        EXPECT_NEAR(s.optimal_growth, 0.5 * m.x0.dot(ref.pi * m.x0) + ref.phi.dot(m.x0) - ref.kappa, 1e-10);
    }
}

TEST(Portfolio, TerminalValuesAreExact) {
    const auto s = solve_portfolio(two_asset(0.1 * Matrix::Identity(3, 3)));
    EXPECT_EQ(s.pi.values.back().norm(), 0.0);
    EXPECT_EQ(s.phi.back().norm(), 0.0);
    EXPECT_EQ(s.kappa.back(), 0.0);
}

TEST(Portfolio, AffineSlopeByFiniteDifferences) {
    const auto m = two_asset(mat({{0.2, 0.05, 0.0}, {0.05, 0.1, 0.0}, {0.0, 0.0, 0.3}}));
    const auto s = solve_portfolio(m);
    const auto c = build_theta_xi_psi(m);
    for (std::size_t i : {0u, 150u, 399u}) {
        const Vector x = vec({0.3, -0.1});
        const double h = 1e-3;
        for (Eigen::Index j = 0; j < 2; ++j) {
            Vector xp = x;
            xp[j] += h;
            const Vector fd = (s.strategy(i, xp) - s.strategy(i, x)) / h;
            const Vector analytic = (c.theta_inv * (m.A - c.xi * s.pi[i])).col(j);
            EXPECT_LT((fd - analytic).norm(), 1e-10);
        }
    }
}

TEST(Portfolio, PiBoundsOnRandomModels) {
    RandomStream rng(RandomSource{77});
    int applicable = 0;
    for (int k = 0; k < 30; ++k) {
        Matrix A(1, 2), B(2, 2), L(2, 3), S(1, 3), G(3, 3);
        for (Matrix* x : {&A, &B, &L, &S, &G})
            for (Eigen::Index i = 0; i < x->size(); ++i) x->data()[i] = 0.3 * rng.normal();
        S(0, 0) += 0.3;
        const Matrix gamma = G * G.transpose() + 0.05 * Matrix::Identity(3, 3);
        const auto m = factor_model(vec({0.05}), vec({0.0, 0.01}), A, B - 0.5 * Matrix::Identity(2, 2), L, S, 0.02,
                                    gamma, vec({0.1, 0.0}), 200);
        const auto s = solve_portfolio(m);
        const auto rep = pi_bounds_check(m, s);
        if (!rep.applicable) continue;
        ++applicable;
        EXPECT_TRUE(rep.ok()) << k << " min eig " << rep.min_eigenvalue << " sup " << rep.sup_norm << " bound "
                              << rep.bound;
    }
    EXPECT_GT(applicable, 10);
}

TEST(Portfolio, ZeroStrategyGrowthIsTheRiskFreeRate) {
    const auto m = one_factor(0.1 * Matrix::Identity(2, 2), 100);
    const auto s = solve_portfolio(m);
    const auto cmp = compare_strategies(m, s, {zero_strategy(m)}, 2000, 5, 0.4);
    ASSERT_TRUE(cmp.monte_carlo);
    EXPECT_NEAR(cmp.rows[0].estimate.estimate, 0.02, 1e-15);
    EXPECT_EQ(cmp.rows[0].estimate.std_error, 0.0);
}

TEST(Portfolio, SymmetricFormulaMatchesMonteCarlo) {
    const double theta = 0.4;
    const auto m = one_factor(0.25 * theta * Matrix::Identity(2, 2), 200);
    const auto s = solve_portfolio(m);
    const auto cmp = compare_strategies(m, s, {s.strategy, s.strategy.scaled("double", 2.0), zero_strategy(m)}, 20000,
                                        11, theta);
    ASSERT_TRUE(cmp.monte_carlo);
    EXPECT_FALSE(cmp.inconclusive);
    const auto& opt = cmp.rows[0].estimate;
    EXPECT_NEAR(opt.estimate, s.optimal_growth, 4 * opt.std_error);
    EXPECT_TRUE(cmp.dominates("optimal"));
    EXPECT_EQ(cmp.rows[0].rank, 1u);
}

TEST(Portfolio, AsymmetricGammaSkipsMonteCarlo) {
    const auto m = one_factor(mat({{0.1, 0.0}, {0.0, 0.3}}), 50);
    const auto s = solve_portfolio(m);
    const auto cmp = compare_strategies(m, s, {s.strategy}, 100, 1, 0.4);
    EXPECT_FALSE(cmp.monte_carlo);
    EXPECT_TRUE(cmp.rows.empty());
    EXPECT_FALSE(cmp.note.empty());
}

TEST(Portfolio, DegenerationResidualsSmall) {
    const double theta = 0.6;
    for (const auto& m : {one_factor(0.25 * theta * Matrix::Identity(2, 2)),
                          two_asset(0.25 * theta * Matrix::Identity(3, 3))}) {
        const auto r = degeneration_residuals(m, solve_portfolio(m), theta);
        EXPECT_LT(r.max(), 1e-8);
    }
    const auto asym = one_factor(mat({{0.1, 0.0}, {0.0, 0.3}}));
    EXPECT_THROW(degeneration_residuals(asym, solve_portfolio(asym), 0.4), PreconditionError);
}

TEST(Portfolio, DegenerationResidualsDetectWrongTheta) {
    const auto m = one_factor(0.1 * Matrix::Identity(2, 2));
    const auto s = solve_portfolio(m);
    // Rebuilding with Γ = 0.1 I but claiming θ = 0.5 breaks the precondition.
    EXPECT_THROW(degeneration_residuals(m, s, 0.5), PreconditionError);
}
