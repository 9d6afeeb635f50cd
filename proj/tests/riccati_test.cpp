#include <gtest/gtest.h>

#include <cmath>

#include "arsc/random.hpp"
#include "arsc/riccati.hpp"
#include "test_models.hpp"

using namespace arsc;
using arsc::testing::hamiltonian_riccati;
using arsc::testing::mat;
using arsc::testing::scalar_lq;
using arsc::testing::vec;

namespace {

// Scalar model A = 0, B = N = Σ = H = 1, M = 0: P(t) = 1/(1 + (1 − 2γ)(T − t)).
double scalar_p(double gamma, double tau) { return 1.0 / (1.0 + (1.0 - 2.0 * gamma) * tau); }

}  // namespace

TEST(Riccati, ScalarClosedForm) {
    for (double gamma : {1e-6, 0.1, 0.25, 0.45}) {
        const auto m = scalar_lq(gamma, 1000);
        const auto s = solve_riccati_lq(m);
        ASSERT_FALSE(s.blowup);
        EXPECT_TRUE(s.hypothesis_verified);
        for (std::size_t i = 0; i <= 1000; i += 125)
            EXPECT_NEAR(s[i](0, 0), scalar_p(gamma, 1.0 - m.grid().time(i)), 1e-12) << gamma << " " << i;
    }
}

TEST(Riccati, TerminalValueIsExact) {
    const auto s = solve_riccati_lq(scalar_lq(0.25, 10, 1.0, 0.3, 1.0, 0.2, 1.0, 0.7));
    EXPECT_EQ(s.values.back()(0, 0), 0.7);
}

TEST(Riccati, FourthOrderConvergence) {
    auto err = [](std::size_t n) { return std::abs(solve_riccati_lq(scalar_lq(0.25, n))[0](0, 0) - 2.0 / 3.0); };
    const double r1 = err(10) / err(20), r2 = err(20) / err(40);
    EXPECT_GT(r1, 12.0);
    EXPECT_LT(r1, 20.0);
    EXPECT_GT(r2, 12.0);
    EXPECT_LT(r2, 20.0);
}

TEST(Riccati, MatrixCaseMatchesHamiltonianExponential) {
    const TimeGrid g(1.5, 600);
    const Matrix a = mat({{0.1, 0.4}, {-0.3, -0.2}});
    const Matrix b = mat({{1.0, 0.0}, {0.5, 1.0}});
    const Matrix sigma = mat({{0.6, 0.1}, {0.0, 0.5}});
    const Matrix m = mat({{1.0, 0.2}, {0.2, 0.5}});
    const Matrix n = mat({{2.0, 0.3}, {0.3, 1.0}});
    const Matrix h = mat({{0.5, 0.0}, {0.0, 1.0}});
    const Matrix gamma = mat({{0.3, 0.1}, {0.1, 0.15}});
    const auto model = arsc::testing::constant_lq(g, a, b, sigma, m, n, h, gamma, vec({1.0, -1.0}));
    const auto s = solve_riccati_lq(model);
    ASSERT_FALSE(s.blowup);
    const Matrix ss = b * n.inverse() * b.transpose() - 2.0 * sigma * gamma * sigma.transpose();
    for (std::size_t i : {0u, 150u, 300u, 599u}) {
        const Matrix ref = hamiltonian_riccati(a, ss, m, h, g.horizon() - g.time(i));
        EXPECT_LT((s[i] - ref).norm(), 1e-10) << i;
        EXPECT_TRUE(is_symmetric(s[i], 0.0));
    }
}

TEST(Riccati, BlowupIsReportedWithValidRange) {
    // γ = 1: P = 1/(1 − (T − t)) is singular at T − t = 1.
    const auto m = scalar_lq(1.0, 2000, 2.0);
    const auto s = solve_riccati_lq(m);
    EXPECT_TRUE(s.blowup);
    EXPECT_FALSE(s.hypothesis_verified);
    EXPECT_GT(m.grid().time(s.valid_from), 0.99);
    EXPECT_THROW((void)s.path(), NumericalError);
    EXPECT_NEAR(s[1500](0, 0), 1.0 / (1.0 - 0.5), 1e-10);
}

TEST(Riccati, UnverifiedHypothesisButFinite) {
    const auto s = solve_riccati_lq(scalar_lq(0.6, 1000));
    EXPECT_FALSE(s.blowup);
    EXPECT_FALSE(s.hypothesis_verified);
    EXPECT_NEAR(s[0](0, 0), scalar_p(0.6, 1.0), 1e-12);
}

TEST(Riccati, ComparisonOdeIsLinearClosedForm) {
    // −dP̃/dt = 2aP̃ + m, P̃(T) = h  ⇒  P̃(t) = (h + m/2a) e^{2a(T−t)} − m/2a.
    const double a = 0.3, m = 0.5, h = 1.0;
    const auto model = scalar_lq(0.1, 500, 1.0, a, 1.0, m, 1.0, h);
    const auto c = solve_comparison_ode(model);
    EXPECT_NEAR(c[0](0, 0), (h + m / (2 * a)) * std::exp(2 * a) - m / (2 * a), 1e-12);
}

TEST(Riccati, BoundsHoldOnRandomWellPosedModels) {
    RandomStream rng(RandomSource{5});
    int checked = 0;
    for (int k = 0; k < 25; ++k) {
        const TimeGrid g(1.0, 200);
        Matrix a(2, 2), b(2, 2), sigma(2, 2), lm(2, 2), ln(2, 2), lh(2, 2);
        for (Matrix* x : {&a, &b, &sigma, &lm, &ln, &lh})
            for (Eigen::Index i = 0; i < 4; ++i) x->data()[i] = rng.normal() * 0.5;
        const Matrix n = ln * ln.transpose() + Matrix::Identity(2, 2);
        const Matrix m = lm * lm.transpose();
        const Matrix h = lh * lh.transpose();
        sigma += Matrix::Identity(2, 2);
        // Scale Γ so that 2ΣΓΣᵀ − BN⁻¹Bᵀ < 0 with margin.
        const Matrix bnb = b * n.inverse() * b.transpose();
        const double lam = min_eigenvalue(bnb) / (2.0 * max_eigenvalue(sigma * sigma.transpose()));
        if (lam < 1e-3) continue;
        const Matrix gamma = 0.5 * lam * Matrix::Identity(2, 2);
        const auto model = arsc::testing::constant_lq(g, a, b, sigma, m, n, h, gamma, vec({1.0, 0.0}));
        const auto s = solve_riccati_lq(model);
        ASSERT_TRUE(s.hypothesis_verified);
        const auto rep = riccati_bounds_check(model, s);
        EXPECT_TRUE(rep.ok()) << rep.note << " model " << k;
        ++checked;
    }
    EXPECT_GT(checked, 10);
}

TEST(Riccati, BoundsNotApplicableOutsideHypothesis) {
    const auto m = scalar_lq(0.6, 100);
    const auto rep = riccati_bounds_check(m, solve_riccati_lq(m));
    EXPECT_FALSE(rep.applicable);
    EXPECT_FALSE(rep.ok());
}

TEST(Riccati, SecondOrderAdjointClosedForm) {
    // With A = M = 0: P₂(t) = 1 + 2γ∫_t^T P² = 1 + 2γ/(1−2γ)·[1 − P(t)].
    const double gamma = 0.3;
    const auto m = scalar_lq(gamma, 1000);
    const auto s = solve_riccati_lq(m);
    const auto p2 = solve_second_order_adjoint_lq(m, s);
    for (std::size_t i : {0u, 400u, 999u}) {
        const double p = scalar_p(gamma, 1.0 - m.grid().time(i));
        EXPECT_NEAR(p2[i](0, 0), 1.0 + 2 * gamma / (1 - 2 * gamma) * (1.0 - p), 1e-11) << i;
    }
}

TEST(Riccati, SecondOrderAdjointPureDrift) {
    // Tiny Γ and Σ: P₂ ≈ H e^{2a(T−t)}.
    const auto m = scalar_lq(1e-6, 400, 1.0, 0.1, 1e-3);
    const auto p2 = solve_second_order_adjoint_lq(m, solve_riccati_lq(m));
    EXPECT_NEAR(p2[0](0, 0), std::exp(0.2), 1e-9);
}

TEST(Riccati, TraceTailIntegral) {
    // ∫₀ᵀ P dt = ln(1 + cT)/c with c = 1 − 2γ.
    const auto m = scalar_lq(0.25, 1000);
    const auto tail = trace_tail_integrals(m, solve_riccati_lq(m).path());
    EXPECT_NEAR(tail.front(), std::log(1.5) / 0.5, 1e-12);
    EXPECT_EQ(tail.back(), 0.0);
}

TEST(Riccati, BoundFormula) {
    const auto m = scalar_lq(0.1, 10, 2.0, 0.3, 1.0, 0.5, 1.0, 1.0);
    EXPECT_NEAR(riccati_bound(m), std::exp(2 * 0.3 * 2.0) * (1.0 + 0.5 * 2.0), 1e-14);
}
