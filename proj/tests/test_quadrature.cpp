#include "smmv/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace smmv;

TEST(NormalCdf, KnownValues) {
    EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
    EXPECT_NEAR(normal_cdf(-1.959963984540054), 0.025, 1e-12);
    // symmetric tails stay accurate far out
    EXPECT_NEAR(normal_cdf(-8.0) , 6.22096057427178e-16, 1e-20);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
    // n-point rule is exact through degree 2n-1 on [-1, 1]
    const QuadRule& q = gauss_legendre(8);
    double m0 = 0.0, m2 = 0.0, m14 = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        m0 += q.weights[i];
        m2 += q.weights[i] * q.nodes[i] * q.nodes[i];
        m14 += q.weights[i] * std::pow(q.nodes[i], 14);
    }
    EXPECT_NEAR(m0, 2.0, 1e-14);
    EXPECT_NEAR(m2, 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(m14, 2.0 / 15.0, 1e-13);
}

TEST(GaussHermite, MatchesNormalMoments) {
    // rule is stated against weight e^{-x^2}; the helpers rescale to N(0,1)
    const QuadRule& q = gauss_hermite(32);
    const double s = std::sqrt(2.0);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    const double invsqrtpi = 1.0 / std::sqrt(M_PI);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double z = s * q.nodes[i];
        m0 += invsqrtpi * q.weights[i];
        m2 += invsqrtpi * q.weights[i] * z * z;
        m4 += invsqrtpi * q.weights[i] * z * z * z * z;
    }
    EXPECT_NEAR(m0, 1.0, 1e-13);
    EXPECT_NEAR(m2, 1.0, 1e-13);
    EXPECT_NEAR(m4, 3.0, 1e-12);
}

TEST(LognormalExpectation, ExactMartingaleMoments) {
    // M = exp(-sqrt(v) N - v/2): E[M] = 1, E[M^2] = e^v, E[1] = 1
    for (double v : {0.0625, 0.25, 0.64, 1.44}) {
        EXPECT_NEAR(lognormal_expectation([](double) { return 1.0; }, v, 48), 1.0, 1e-12);
        EXPECT_NEAR(lognormal_expectation([](double m) { return m; }, v, 48), 1.0, 1e-12);
        EXPECT_NEAR(lognormal_expectation([](double m) { return m * m; }, v, 48),
                    std::exp(v), 1e-12 * std::exp(v));
    }
    // degenerate variance collapses to a point mass at 1
    EXPECT_DOUBLE_EQ(lognormal_expectation([](double m) { return m * m + 2.0; }, 0.0, 48), 3.0);
}

TEST(LognormalExpectation, KinkSplitHandlesPositivePart) {
    // E[(M - K)+] has a closed form; the kinked integrand must hit it
    const double v = 0.31;
    for (double K : {0.4, 1.0, 2.7}) {
        const double want = bs_call(1.0, K, v);
        const double got = lognormal_expectation(
            [K](double m) { return std::max(m - K, 0.0); }, v, 48, K);
        EXPECT_NEAR(got, want, 1e-12);
    }
}

TEST(PartialMoments, MatchesQuadratureTails) {
    const double v = 0.42;
    for (double mstar : {0.3, 0.9, 1.8}) {
        PartialMoments pm = lognormal_partial_moments(mstar, v);
        const double p = lognormal_expectation(
            [mstar](double m) { return m > mstar ? 1.0 : 0.0; }, v, 64, mstar);
        const double m1 = lognormal_expectation(
            [mstar](double m) { return m > mstar ? m : 0.0; }, v, 64, mstar);
        const double m2 = lognormal_expectation(
            [mstar](double m) { return m > mstar ? m * m : 0.0; }, v, 64, mstar);
        EXPECT_NEAR(pm.p, p, 1e-12);
        EXPECT_NEAR(pm.m1, m1, 1e-12);
        EXPECT_NEAR(pm.m2, m2, 1e-11);
    }
}

TEST(AffinePlusMoments, BothSlopeSigns) {
    const double v = 0.25;
    // positive slope: kernel (A + B M)+ switches on above the kink
    {
        const double A = -0.8, B = 1.3;
        AffinePlusMoments mo = affine_plus_moments(A, B, v);
        const double plain = lognormal_expectation(
            [&](double m) { return std::max(A + B * m, 0.0); }, v, 64, -A / B);
        const double tilted = lognormal_expectation(
            [&](double m) { return m * std::max(A + B * m, 0.0); }, v, 64, -A / B);
        EXPECT_NEAR(mo.plain, plain, 1e-12);
        EXPECT_NEAR(mo.tilted, tilted, 1e-12);
    }
    // negative slope: kernel lives on the lower tail
    {
        const double A = 0.9, B = -0.6;
        AffinePlusMoments mo = affine_plus_moments(A, B, v);
        const double plain = lognormal_expectation(
            [&](double m) { return std::max(A + B * m, 0.0); }, v, 64, -A / B);
        EXPECT_NEAR(mo.plain, plain, 1e-12);
    }
    // no kink on the support
    {
        const double A = 0.5, B = 0.2;
        AffinePlusMoments mo = affine_plus_moments(A, B, v);
        EXPECT_NEAR(mo.plain, A + B, 1e-13);
        EXPECT_NEAR(mo.tilted, A + B * std::exp(v), 1e-13);
    }
}

TEST(BsCall, ParityAndMonotonicity) {
    // E[(M - K)+] - E[(K - M)+] = 1 - K for the unit-mean lognormal
    const double v = 0.5;
    for (double K : {0.2, 0.7, 1.0, 1.9}) {
        const double call = bs_call(1.0, K, v);
        const double put = lognormal_expectation(
            [K](double m) { return std::max(K - m, 0.0); }, v, 64, K);
        EXPECT_NEAR(call - put, 1.0 - K, 1e-12);
    }
    EXPECT_GT(bs_call(1.0, 0.5, v), bs_call(1.0, 0.9, v));
}

TEST(BsCall, RandomTriplesAgainstQuadrature) {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> ux(0.4, 2.2), uk(0.2, 2.5), uv(0.01, 1.2);
    for (int trial = 0; trial < 100; ++trial) {
        const double x = ux(eng), K = uk(eng), v = uv(eng);
        const double want = x * lognormal_expectation(
            [&](double m) { return std::max(m - K / x, 0.0); }, v, 64, K / x);
        EXPECT_NEAR(bs_call(x, K, v), want, 1e-10);
    }
}

TEST(QuadratureConvergence, NodeDoublingIsStable) {
    // once converged, doubling the rule must not move the answer
    const double v = 0.49;
    auto g = [](double m) { return std::max(0.3 + 0.9 * m, 0.0) * m; };
    const double a = lognormal_expectation(g, v, 48);
    const double b = lognormal_expectation(g, v, 96);
    EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(b)));
}

} // namespace
