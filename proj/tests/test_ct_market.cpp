#include "smmv/ct_market.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "smmv/quadrature.hpp"

namespace {

using namespace smmv;

TEST(Curve, ConstantAndInterpolation) {
    Curve c = Curve::constant(0.25);
    EXPECT_DOUBLE_EQ(c(0.0), 0.25);
    EXPECT_DOUBLE_EQ(c(17.0), 0.25);

    Curve lin({{0.0, 0.2}, {1.0, 0.3}});
    EXPECT_DOUBLE_EQ(lin(0.0), 0.2);
    EXPECT_DOUBLE_EQ(lin(0.5), 0.25);
    EXPECT_DOUBLE_EQ(lin(1.0), 0.3);
    // flat continuation outside the knot range
    EXPECT_DOUBLE_EQ(lin(-1.0), 0.2);
    EXPECT_DOUBLE_EQ(lin(2.0), 0.3);
    EXPECT_DOUBLE_EQ(lin.min_value(), 0.2);
}

TEST(Curve, Validation) {
    EXPECT_THROW(Curve({}), std::invalid_argument);
    EXPECT_THROW(Curve({{0.0, 1.0}, {0.0, 2.0}}), std::invalid_argument);
    EXPECT_THROW(Curve({{1.0, 1.0}, {0.5, 2.0}}), std::invalid_argument);
}

TEST(Curve, PiecewiseIntegralsAreExact) {
    Curve lin({{0.0, 0.2}, {1.0, 0.3}});
    EXPECT_NEAR(lin.integral(0.0, 1.0), 0.25, 1e-15);
    EXPECT_NEAR(lin.integral(0.25, 0.75), 0.125, 1e-15);
    // int (0.2 + 0.1 t)^2 dt over [0,1] = 19/300
    EXPECT_NEAR(lin.integral_sq(0.0, 1.0), 19.0 / 300.0, 1e-15);
    // clamped extension picks up the boundary values
    EXPECT_NEAR(lin.integral(-1.0, 0.0), 0.2, 1e-15);
    EXPECT_NEAR(lin.integral(1.0, 3.0), 0.6, 1e-15);

    Curve kinked({{0.0, 0.0}, {0.5, 0.1}, {1.0, 0.0}});
    EXPECT_NEAR(kinked.integral(0.0, 1.0), 0.05, 1e-15);
    EXPECT_NEAR(kinked.integral_sq(0.0, 1.0), 2.0 * 0.01 * 0.5 / 3.0, 1e-15);
}

TEST(Curve, AbsoluteIntegralSplitsSignChanges) {
    // crosses zero at t = 0.5: |area| doubles instead of cancelling
    Curve c({{0.0, -0.1}, {1.0, 0.1}});
    EXPECT_NEAR(c.integral(0.0, 1.0), 0.0, 1e-16);
    EXPECT_NEAR(c.integral_abs(0.0, 1.0), 0.05, 1e-15);
    Curve pos({{0.0, 0.2}, {1.0, 0.4}});
    EXPECT_NEAR(pos.integral_abs(0.0, 1.0), pos.integral(0.0, 1.0), 1e-15);
}

TEST(Market, ValidationAndAccessors) {
    EXPECT_THROW(Market(Curve::constant(0.03), Curve::constant(0.2),
                        Curve::constant(0.25), 0.0),
                 std::invalid_argument);
    EXPECT_THROW(Market(Curve::constant(0.03), Curve::constant(0.0),
                        Curve::constant(0.25), 1.0),
                 std::invalid_argument);
    EXPECT_THROW(Market(Curve::constant(0.03), Curve::constant(0.2),
                        Curve::constant(-0.1), 1.0),
                 std::invalid_argument);

    Market mkt(Curve({{0.0, 0.02}, {1.0, 0.04}}), Curve::constant(0.2),
               Curve::constant(0.25), 1.0);
    EXPECT_NEAR(mkt.int_rate(0.0, 1.0), 0.03, 1e-15);
    EXPECT_NEAR(mkt.growth(0.0, 1.0), std::exp(0.03), 1e-14);
    EXPECT_NEAR(mkt.discount(0.0, 1.0) * mkt.growth(0.0, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(mkt.int_vartheta_sq(0.0, 1.0), 0.0625, 1e-15);
    EXPECT_NEAR(mkt.int_vartheta_sq(0.5, 1.0), 0.03125, 1e-15);
}

TEST(Market, MartingaleMomentsThroughQuadrature) {
    Market mkt(Curve::constant(0.03), Curve::constant(0.2),
               Curve({{0.0, 0.2}, {1.0, 0.3}}), 1.0);
    const double v = mkt.int_vartheta_sq(0.0, 1.0);
    EXPECT_NEAR(v, 19.0 / 300.0, 1e-15);
    const double m1 = lognormal_expectation([](double m) { return m; }, v, 48);
    const double m2 = lognormal_expectation([](double m) { return m * m; }, v, 48);
    EXPECT_NEAR(m1, 1.0, 1e-10);
    EXPECT_NEAR(m2, std::exp(v), 1e-10);
}

TEST(Market, CompletionLevelFixture) {
    Market mkt(Curve::constant(0.03), Curve::constant(0.2), Curve::constant(0.25), 1.0);
    const double theta = 2.0;
    EXPECT_NEAR(mv_completion_level(mkt, theta, 1.0), 1.0627017634124467, 1e-13);

    // level = funded mean plus the variance premium
    const double expect = std::exp(0.03) + (std::exp(0.0625) - 1.0) / theta;
    EXPECT_NEAR(mv_completion_level(mkt, theta, 1.0), expect, 1e-15);

    // optimal value sits half a premium below the level
    EXPECT_NEAR(mv_optimal_value(mkt, theta, 1.0),
                std::exp(0.03) + (std::exp(0.0625) - 1.0) / (2.0 * theta), 1e-14);
    EXPECT_NEAR(mv_terminal_variance(mkt, theta),
                (std::exp(0.0625) - 1.0) / (theta * theta), 1e-14);
}

TEST(Market, FeedbackFormula) {
    Market mkt(Curve::constant(0.03), Curve::constant(0.2), Curve::constant(0.25), 1.0);
    const double theta = 2.0;
    const double c = mv_completion_level(mkt, theta, 1.0);
    // at the start, with the optimal completion level, the position funds
    // exactly the discounted variance premium plus 1/theta
    const double want = (0.25 / 0.2) * std::exp(0.0625) / theta * std::exp(-0.03);
    EXPECT_NEAR(mv_feedback(mkt, theta, c, 0.0, 1.0), want, 1e-13);
    // fully funded wealth means only the 1/theta cushion is left
    const double funded = c * std::exp(-0.03);
    EXPECT_NEAR(mv_feedback(mkt, theta, c, 0.0, funded),
                (0.25 / 0.2) / theta * std::exp(-0.03), 1e-13);
}

TEST(ZetaModel, BasicsAndValidation) {
    ZetaModel zm(0.1, 0.5);
    EXPECT_DOUBLE_EQ(zm.a(), 0.1);
    EXPECT_DOUBLE_EQ(zm.b(), 0.5);
    EXPECT_DOUBLE_EQ(zm.mean(), 0.6);
    EXPECT_DOUBLE_EQ(zm.kappa(), 0.4);
    EXPECT_DOUBLE_EQ(zm.terminal(1.3), 0.1 + 0.5 * 1.3);
    EXPECT_FALSE(zm.is_constant());

    ZetaModel zc = ZetaModel::constant(0.2);
    EXPECT_TRUE(zc.is_constant());
    EXPECT_DOUBLE_EQ(zc.terminal(3.0), 0.2);
    EXPECT_DOUBLE_EQ(zc.kappa(), 0.8);

    EXPECT_THROW(ZetaModel(-0.1, 0.3), std::invalid_argument);
    EXPECT_THROW(ZetaModel(0.1, -0.3), std::invalid_argument);
    EXPECT_THROW(ZetaModel(0.6, 0.6), std::invalid_argument);
    EXPECT_THROW(ZetaModel::constant(1.0), std::invalid_argument);
    // full-mass martingale floor is allowed (kappa = 0)
    EXPECT_NO_THROW(ZetaModel(0.0, 1.0));
}

TEST(ZetaModel, ConditionalMomentsAgainstQuadrature) {
    Market mkt(Curve::constant(0.03), Curve::constant(0.2), Curve::constant(0.25), 1.0);
    ZetaModel zm(0.1, 0.5);
    const double t = 0.4, lam = 1.2;
    const double v = mkt.int_vartheta_sq(t, 1.0);

    // E[zeta | F_t]: the martingale slope passes through
    EXPECT_NEAR(zm.cond_mean(lam), 0.1 + 0.5 * lam, 1e-15);
    const double m1 = lognormal_expectation(
        [&](double m) { return 0.1 + 0.5 * lam * m; }, v, 48);
    EXPECT_NEAR(zm.cond_mean(lam), m1, 1e-12);

    // second conditional moment picks up e^v on the slope part
    const double m2 = lognormal_expectation(
        [&](double m) { double z = 0.1 + 0.5 * lam * m; return z * z; }, v, 48);
    EXPECT_NEAR(zm.cond_sq(mkt, t, lam), m2, 1e-12);

    // tilted mean reweights by the martingale itself
    const double tm = lognormal_expectation(
        [&](double m) { return m * (0.1 + 0.5 * lam * m); }, v, 48);
    EXPECT_NEAR(zm.tilde_mean(mkt, t, lam), tm, 1e-12);

    // volatility loadings are minus vartheta times the slope exposure
    EXPECT_NEAR(zm.eta(mkt, t, lam), -0.5 * lam * 0.25, 1e-15);
    EXPECT_NEAR(zm.tilde_eta(mkt, t, lam), -0.5 * lam * std::exp(v) * 0.25, 1e-14);
}

TEST(ZetaModel, ConsistencyRule) {
    Market risky(Curve::constant(0.03), Curve::constant(0.2), Curve::constant(0.25), 1.0);
    Market flat(Curve::constant(0.03), Curve::constant(0.2), Curve::constant(0.0), 1.0);

    // a constant part is only consistent when the risk channel is silent
    EXPECT_FALSE(ZetaModel::constant(0.2).consistent_with(risky));
    EXPECT_TRUE(ZetaModel::constant(0.2).consistent_with(flat));
    EXPECT_TRUE(ZetaModel(0.0, 0.7).consistent_with(risky));
    EXPECT_TRUE(ZetaModel(0.0, 1.0).consistent_with(risky));
    EXPECT_FALSE(ZetaModel(0.1, 0.5).consistent_with(risky));
    EXPECT_TRUE(ZetaModel(0.1, 0.5).consistent_with(flat));
}

} // namespace
