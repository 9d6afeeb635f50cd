#include <gtest/gtest.h>

#include <cmath>

#include "arsc/sde.hpp"
#include "test_models.hpp"

using namespace arsc;
using arsc::testing::mat;
using arsc::testing::scalar_lq;
using arsc::testing::vec;

namespace {

MatrixPath constant_gain(const TimeGrid& g, double k) { return MatrixPath::constant(g, Matrix::Constant(1, 1, k)); }

}  // namespace

TEST(Sde, BrownianTerminalMoments) {
    // K = 0, A = 0: X(T) = x0 + W(T) exactly.
    const auto m = scalar_lq(0.25, 50, 2.0);
    const std::size_t n = 40000;
    const auto b = simulate_lq_feedback(m, constant_gain(m.grid(), 0.0), n, RandomSource{3}, {1, false});
    std::vector<double> x(n), cost(n);
    for (std::size_t p = 0; p < n; ++p) x[p] = b.terminal_state(p)[0], cost[p] = b.terminal_cost[p];
    const auto mx = sample_mean(x);
    EXPECT_NEAR(mx.mean, 1.0, 5 * mx.std_error);
    const auto mc = sample_mean(cost);
    EXPECT_NEAR(mc.mean, 0.5 * (1.0 + 2.0), 5 * mc.std_error);
    for (double c : b.cost_integral) EXPECT_EQ(c, 0.0);
}

TEST(Sde, EulerMeanUnderLinearFeedback) {
    // E X_N = (1 − kΔt)^N x0 for the Euler recursion.
    const auto m = scalar_lq(0.25, 100);
    const double k = -1.5;
    const std::size_t n = 40000;
    const auto b = simulate_lq_feedback(m, constant_gain(m.grid(), k), n, RandomSource{11}, {1, false});
    std::vector<double> x(n);
    for (std::size_t p = 0; p < n; ++p) x[p] = b.terminal_state(p)[0];
    const auto mx = sample_mean(x);
    EXPECT_NEAR(mx.mean, std::pow(1.0 + k * 0.01, 100), 5 * mx.std_error);
}

TEST(Sde, IndependentOfWorkerCount) {
    const auto m = scalar_lq(0.25, 200);
    const auto g = constant_gain(m.grid(), -0.7);
    const auto a = simulate_lq_feedback(m, g, 997, RandomSource{42}, {1, true});
    const auto b = simulate_lq_feedback(m, g, 997, RandomSource{42}, {3, true});
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.controls, b.controls);
    EXPECT_EQ(a.cost_integral, b.cost_integral);
    EXPECT_EQ(a.terminal_cost, b.terminal_cost);
}

TEST(Sde, PathsDoNotDependOnEnsembleSize) {
    const auto m = scalar_lq(0.25, 100);
    const auto g = constant_gain(m.grid(), -0.3);
    const auto a = simulate_lq_feedback(m, g, 10, RandomSource{9}, {1, false});
    const auto b = simulate_lq_feedback(m, g, 25, RandomSource{9}, {2, false});
    for (std::size_t p = 0; p < 10; ++p) EXPECT_EQ(a.terminal_states[p], b.terminal_states[p]);
}

TEST(Sde, StoredTrajectoriesAreConsistent) {
    const auto m = scalar_lq(0.25, 100);
    const double k = -0.8;
    const auto b = simulate_lq_feedback(m, constant_gain(m.grid(), k), 5, RandomSource{1}, {1, true});
    ASSERT_TRUE(b.has_trajectories);
    for (std::size_t p = 0; p < 5; ++p) {
        EXPECT_EQ(b.state(p, 0)[0], 1.0);
        EXPECT_EQ(b.state(p, 100)[0], b.terminal_state(p)[0]);
        for (std::size_t i = 0; i <= 100; i += 10) EXPECT_DOUBLE_EQ(b.control(p, i)[0], k * b.state(p, i)[0]);
        // Trapezoid of ½(m + k²n)x² with m = 0, n = 1.
        double acc = 0;
        for (std::size_t i = 0; i < 100; ++i) {
            const double x0 = b.state(p, i)[0], x1 = b.state(p, i + 1)[0];
            acc += 0.5 * 0.01 * (k * k * x0 * x0 + k * k * x1 * x1);
        }
        EXPECT_NEAR(b.cost_integral[p], 0.5 * acc, 1e-13);
    }
}

TEST(Sde, FeedbackGainFromRiccati) {
    const auto m = scalar_lq(0.25, 100, 1.0, 0.0, 1.0, 0.0, 2.0);
    const auto s = solve_riccati_lq(m);
    const auto k = lq_feedback_gain(m, s);
    for (std::size_t i = 0; i <= 100; i += 20) EXPECT_NEAR(k[i](0, 0), -s[i](0, 0) / 2.0, 1e-15);
}

TEST(Sde, SymmetricEstimatorRequiresMatchingGamma) {
    const auto m = scalar_lq(0.25, 20);
    const auto b = simulate_lq_feedback(m, constant_gain(m.grid(), 0.0), 10, RandomSource{1});
    EXPECT_NO_THROW(estimate_symmetric_value(m, b, 0.5));
    EXPECT_THROW(estimate_symmetric_value(m, b, 0.4), PreconditionError);
    EXPECT_THROW(estimate_symmetric_value(m, b, -1.0), PreconditionError);
}

TEST(Sde, SymmetricEstimateOfBrownianTerminalCost) {
    // ½(1 + W)² with θ: E exp(θ/2 (1+W)²) = (1−θT)^{-1/2} exp(θ/(2(1−θT))).
    // θ = 0.3 keeps the exponential weights square integrable.
    const double theta = 0.3;
    const auto m = scalar_lq(theta / 2, 20);
    const auto b = simulate_lq_feedback(m, constant_gain(m.grid(), 0.0), 100000, RandomSource{4}, {1, false});
    const auto e = estimate_symmetric_value(m, b, theta);
    const double exact = (-0.5 * std::log(1 - theta) + theta / (2 * (1 - theta))) / theta;
    EXPECT_NEAR(e.estimate, exact, 5 * e.std_error);
}

namespace {

FactorMarketModel flat_market(double theta_quarter) {
    return arsc::testing::factor_model(vec({0.06}), vec({0.0}), mat({{0.0}}), mat({{-1.0}}), mat({{0.0, 0.1}}),
                                       mat({{0.2, 0.0}}), 0.02, theta_quarter * Matrix::Identity(2, 2), vec({0.0}),
                                       100);
}

}  // namespace

TEST(Sde, ConstantStrategyLogWealthIsGaussian) {
    // log V(T) ~ N(T(r + w(a−r) − ½w²σ²), w²σ²T).
    const auto m = flat_market(0.1);
    const double w = 0.7, mu = 0.02 + w * 0.04 - 0.5 * w * w * 0.04, v = w * w * 0.04;
    const auto s = AffineStrategy::constant("w", m.grid(), vec({w}), 1);
    const auto b = simulate_factor_and_wealth(m, s, 50000, RandomSource{8}, {1, false});
    const auto lw = b.included_log_wealth();
    const auto mean = sample_mean(lw);
    EXPECT_NEAR(mean.mean, mu, 5 * mean.std_error);
    const double theta = 0.4;
    const auto g = estimate_growth_rate(lw, theta);
    EXPECT_NEAR(g.estimate, mu - theta * v / 4.0, 5 * g.std_error);
}

TEST(Sde, ZeroStrategyEarnsTheRiskFreeRate) {
    const auto m = flat_market(0.1);
    const auto s = AffineStrategy::constant("zero", m.grid(), vec({0.0}), 1);
    const auto b = simulate_factor_and_wealth(m, s, 100, RandomSource{8});
    for (double x : b.log_wealth) EXPECT_NEAR(x, 0.02, 1e-15);
}

TEST(Sde, AffineStrategyEvaluation) {
    const TimeGrid g(1.0, 4);
    const AffineStrategy s{"s", MatrixPath::constant(g, mat({{1.0, 2.0}})), VectorPath::constant(g, vec({0.5}))};
    EXPECT_DOUBLE_EQ(s(2, vec({1.0, -1.0}))[0], 0.5 + 1.0 - 2.0);
    const auto t = s.scaled("half", 0.5);
    EXPECT_DOUBLE_EQ(t(2, vec({1.0, -1.0}))[0], 0.5 * (0.5 + 1.0 - 2.0));
}

TEST(Sde, RejectsEmptyEnsemble) {
    const auto m = scalar_lq(0.25, 10);
    EXPECT_THROW(simulate_lq_feedback(m, constant_gain(m.grid(), 0.0), 0, RandomSource{1}), PreconditionError);
}
