#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "arsc/estimators.hpp"
#include "arsc/grid.hpp"
#include "arsc/linalg.hpp"
#include "arsc/models.hpp"
#include "arsc/path.hpp"
#include "arsc/quadrature.hpp"
#include "arsc/random.hpp"
#include "arsc/rk4.hpp"
#include "test_models.hpp"

using namespace arsc;
using arsc::testing::mat;

TEST(TimeGrid, NodesAndSpacing) {
    const TimeGrid g(0.3, 7);
    EXPECT_EQ(g.nodes(), 8u);
    EXPECT_DOUBLE_EQ(g.dt(), 0.3 / 7);
    EXPECT_EQ(g.time(0), 0.0);
    EXPECT_EQ(g.time(7), 0.3);
    EXPECT_THROW(TimeGrid(0.0, 3), ModelError);
    EXPECT_THROW(TimeGrid(1.0, 0), ModelError);
    EXPECT_THROW(TimeGrid(std::numeric_limits<double>::infinity(), 3), ModelError);
}

TEST(Path, InterpolatesLinearly) {
    const TimeGrid g(1.0, 4);
    const ScalarPath p(g, {0.0, 1.0, 4.0, 9.0, 16.0});
    EXPECT_EQ(p.evaluate(0.25), 1.0);
    EXPECT_DOUBLE_EQ(p.evaluate(0.375), 2.5);
    EXPECT_EQ(p.evaluate(-1.0), 0.0);
    EXPECT_EQ(p.evaluate(2.0), 16.0);
    EXPECT_DOUBLE_EQ(p.midpoint(2), 6.5);
}

TEST(Path, ResamplingALinearFunctionIsExact) {
    const TimeGrid g(2.0, 5), fine(2.0, 17);
    std::vector<double> v;
    for (std::size_t i = 0; i < g.nodes(); ++i) v.push_back(3.0 - 0.5 * g.time(i));
    const auto r = ScalarPath(g, v).resampled(fine);
    for (std::size_t i = 0; i < fine.nodes(); ++i) EXPECT_NEAR(r[i], 3.0 - 0.5 * fine.time(i), 1e-14);
    EXPECT_THROW(ScalarPath(g, v).resampled(TimeGrid(1.0, 4)), ModelError);
}

TEST(Path, RejectsBadSamples) {
    const TimeGrid g(1.0, 2);
    EXPECT_THROW(ScalarPath(g, {1.0, 2.0}), ModelError);
    EXPECT_THROW(ScalarPath(g, {1.0, std::nan(""), 2.0}), ModelError);
    EXPECT_THROW(MatrixPath::constant(g, Matrix::Constant(1, 1, INFINITY)), ModelError);
}

TEST(HermitePath, ReproducesCubics) {
    const TimeGrid g(1.0, 3);
    std::vector<double> v, d;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        const double t = g.time(i);
        v.push_back(t * t * t - t);
        d.push_back(3 * t * t - 1);
    }
    const HermitePath<double> h(ScalarPath(g, v), d);
    for (double t : {0.05, 0.2, 0.5, 0.77, 0.99}) EXPECT_NEAR(h.evaluate(t), t * t * t - t, 1e-14);
}

TEST(Random, SplitMixMatchesReferenceOutputs) {
    // First two outputs of the reference SplitMix64 generator seeded with 0.
    EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(splitmix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
    RandomStream a(RandomSource{7}), b(RandomSource{7}), c(RandomSource{7}.substream(1)), d(RandomSource{8});
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
        EXPECT_NE(x, d.next());
    }
}

TEST(Random, UniformAndNormalMoments) {
    RandomStream r(RandomSource{2024});
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, sn4 = 0;
    double umin = 1, umax = 0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        su += u;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
        sn4 += z * z * z * z;
    }
    EXPECT_GT(umin, 0.0);
    EXPECT_LT(umax, 1.0);
    // 5 standard errors.
    EXPECT_NEAR(su / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(sn / n, 0.0, 5 * std::sqrt(1.0 / n));
    EXPECT_NEAR(sn2 / n, 1.0, 5 * std::sqrt(2.0 / n));
    EXPECT_NEAR(sn4 / n, 3.0, 5 * std::sqrt(96.0 / n));
}

TEST(Quadrature, ExactForCubicsAtTheStart) {
    for (std::size_t steps : {2u, 3u, 4u, 5u, 10u, 11u}) {
        const double h = 2.0 / double(steps);
        std::vector<double> f;
        for (std::size_t i = 0; i <= steps; ++i) {
            const double t = h * double(i);
            f.push_back(t * t * t - 2 * t + 1);
        }
        EXPECT_NEAR(integrate(f, h), 4.0 - 4.0 + 2.0, 1e-13) << steps;
    }
}

TEST(Quadrature, TailIntegralsExactForQuadratics) {
    const std::size_t steps = 9;
    const double h = 0.1;
    std::vector<double> f;
    for (std::size_t i = 0; i <= steps; ++i) f.push_back(std::pow(h * double(i), 2));
    const auto s = tail_integrals(std::span<const double>(f), h);
    const double T = h * steps;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = h * double(i);
        EXPECT_NEAR(s[i], (T * T * T - t * t * t) / 3.0, 1e-14) << i;
    }
    EXPECT_EQ(s.back(), 0.0);
}

TEST(Quadrature, FourthOrderOnSmoothIntegrand) {
    auto err = [](std::size_t n) {
        const double h = 1.0 / double(n);
        std::vector<double> f;
        for (std::size_t i = 0; i <= n; ++i) f.push_back(std::exp(h * double(i)));
        return std::abs(integrate(f, h) - (std::numbers::e - 1.0));
    };
    const double ratio = err(10) / err(20);
    EXPECT_GT(ratio, 14.0);
    EXPECT_LT(ratio, 18.0);
}

TEST(Rk4, BackwardExponentialConvergesAtFourthOrder) {
    auto err = [](std::size_t n) {
        const TimeGrid g(1.0, n);
        const auto s = integrate_backward(g, 1.0, [](double, double y) { return y; });
        return std::abs(s.values.front() - std::exp(-1.0));
    };
    EXPECT_LT(err(100), 1e-9);
    const double ratio = err(10) / err(20);
    EXPECT_GT(ratio, 14.0);
    EXPECT_LT(ratio, 18.0);
}

TEST(Rk4, BlowupIsDetected) {
    // dy/dt = −y², y(2) = 1 gives y(t) = 1/(t − 1), singular at t = 1.
    const TimeGrid g(2.0, 2000);
    const auto s = integrate_backward(g, 1.0, [](double, double y) { return -y * y; }, [](double&) {}, 1e6);
    EXPECT_TRUE(s.blowup);
    EXPECT_GT(s.valid_from, 900u);
    EXPECT_LT(s.valid_from, 1001u);
    EXPECT_NEAR(s.values[1500], 2.0, 1e-9);
}

TEST(Linalg, EigenvaluesAndInverse) {
    const Matrix m = mat({{2, 1}, {1, 2}});
    EXPECT_NEAR(min_eigenvalue(m), 1.0, 1e-14);
    EXPECT_NEAR(max_eigenvalue(m), 3.0, 1e-14);
    EXPECT_TRUE(is_pd(m));
    EXPECT_FALSE(is_pd(mat({{1, 2}, {2, 1}})));
    EXPECT_TRUE(is_psd(mat({{1, 1}, {1, 1}})));
    EXPECT_LT((spd_inverse(m) * m - Matrix::Identity(2, 2)).norm(), 1e-14);
    EXPECT_FALSE(is_symmetric(mat({{1, 2}, {0, 1}})));
}

TEST(GammaMatrix, ScalarDetection) {
    EXPECT_EQ(GammaMatrix::scalar(0.3, 3).scalar_value().value(), 0.3);
    EXPECT_FALSE(GammaMatrix(mat({{0.1, 0}, {0, 0.3}})).scalar_value().has_value());
    const GammaMatrix g(mat({{0.2, 0.05}, {0.05, 0.1}}));
    EXPECT_TRUE(g.positive_definite());
    EXPECT_THROW(GammaMatrix(Matrix::Zero(2, 3)), ModelError);
}

TEST(Validation, ReportsEveryViolatedAssumption) {
    auto m = arsc::testing::scalar_lq(0.25, 10);
    EXPECT_TRUE(validate_lq_model(m).ok());
    m.H = Matrix::Constant(1, 1, -1.0);
    m.N = MatrixPath::constant(m.grid(), Matrix::Constant(1, 1, 0.0));
    m.Gamma = GammaMatrix(Matrix::Constant(1, 1, -0.1));
    const auto rep = validate_lq_model(m);
    EXPECT_TRUE(rep.flags("H>=0"));
    EXPECT_TRUE(rep.flags("N>=deltaI"));
    EXPECT_TRUE(rep.flags("Gamma>0"));
    EXPECT_FALSE(rep.flags("M>=0"));
    EXPECT_THROW(require_valid(rep, "model"), ModelError);
}

TEST(Validation, DimensionMismatch) {
    auto m = arsc::testing::scalar_lq(0.25, 10);
    m.Gamma = GammaMatrix(Matrix::Identity(2, 2));
    EXPECT_TRUE(validate_lq_model(m).flags("dimension"));
}

TEST(Validation, FactorModelNegativeRate) {
    using arsc::testing::vec;
    auto m = arsc::testing::factor_model(vec({0.06}), vec({0.0}), mat({{0.0}}), mat({{-1.0}}), mat({{0.0, 0.1}}),
                                         mat({{0.2, 0.0}}), -0.01, Matrix::Identity(2, 2) * 0.1, vec({0.0}), 10);
    EXPECT_TRUE(validate_factor_model(m).flags("r>=0"));
}

TEST(Estimators, LogMeanExpClosedForms) {
    const std::vector<double> c(50, 1.7);
    const auto e = log_mean_exp(c, 0.4);
    EXPECT_NEAR(e.estimate, 1.7, 1e-15);
    EXPECT_EQ(e.std_error, 0.0);

    const std::vector<double> two{0.0, 1.0};
    const double s = 2.0;
    EXPECT_NEAR(log_mean_exp(two, s).estimate, std::log((1.0 + std::exp(2.0)) / 2.0) / s, 1e-15);
    EXPECT_NEAR(log_mean_exp(two, -s).estimate, std::log((1.0 + std::exp(-2.0)) / 2.0) / -s, 1e-15);
}

TEST(Estimators, NoOverflowForLargeExponents) {
    const std::vector<double> x{1000.0, 1001.0, 999.0};
    const auto e = log_mean_exp(x, 5.0);
    EXPECT_TRUE(std::isfinite(e.estimate));
    EXPECT_NEAR(e.estimate, 1000.0 + std::log((1.0 + std::exp(5.0) + std::exp(-5.0)) / 3.0) / 5.0, 1e-12);
}

TEST(Estimators, DeltaMethodMatchesGaussianOracle) {
    // X ~ N(μ, v): (1/s) log E e^{sX} = μ + s v / 2.
    RandomStream r(RandomSource{99});
    std::vector<double> x(200000);
    for (auto& v : x) v = 0.3 + 0.5 * r.normal();
    const double s = 0.8;
    const auto e = log_mean_exp(x, s);
    EXPECT_NEAR(e.estimate, 0.3 + s * 0.25 / 2.0, 5 * e.std_error);
    EXPECT_FALSE(e.heavy_tail);
}

TEST(Estimators, HeavyTailFlag) {
    std::vector<double> x(5000, 0.0);
    x[17] = 20.0;
    const auto e = log_mean_exp(x, 1.0);
    EXPECT_TRUE(e.heavy_tail);
    EXPECT_GT(e.top_weight_share, 0.99);
    EXPECT_THROW(log_mean_exp(std::vector<double>{}, 1.0), PreconditionError);
    EXPECT_THROW(log_mean_exp(x, 0.0), PreconditionError);
}

TEST(Estimators, SampleMean) {
    const std::vector<double> x{1, 2, 3, 4};
    const auto m = sample_mean(x);
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_NEAR(m.std_error, std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0), 1e-15);
}
