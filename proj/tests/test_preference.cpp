#include "smmv/preference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace {

using namespace smmv;

const std::vector<double> kUniform4{0.25, 0.25, 0.25, 0.25};
const std::vector<double> kF{1.0, 2.0, 3.0, 4.0};
const std::vector<double> kG{1.0, 2.0, 3.0, 5.0};

double lambda_residual(const FiniteSpace& sp, const Preference& pref,
                       const std::vector<double>& f, double lam) {
    // kappa/theta = lambda - E[(f + zeta/theta) /\ lambda]
    double trunc_mean = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        trunc_mean += sp.prob(i) * std::min(f[i] + pref.zeta()[i] / pref.theta(), lam);
    return pref.kappa() / pref.theta() - (lam - trunc_mean);
}

TEST(Preference, ZeroFloorTableValues) {
    FiniteSpace sp(kUniform4);
    Preference pref(sp, 2.0, std::vector<double>(4, 0.0));

    const double lf = pref.lambda_level(kF);
    const double lg = pref.lambda_level(kG);
    EXPECT_NEAR(lf, 2.5, 1e-14);
    EXPECT_NEAR(lg, 2.5, 1e-14);
    EXPECT_NEAR(lambda_residual(sp, pref, kF, lf), 0.0, 1e-12);
    EXPECT_NEAR(lambda_residual(sp, pref, kG, lg), 0.0, 1e-12);

    // the raised top state is invisible at zero floor
    EXPECT_NEAR(pref.value(kF), 1.625, 1e-13);
    EXPECT_NEAR(pref.value(kG), 1.625, 1e-13);

    // classical index keeps sliding instead
    EXPECT_NEAR(mv_value(sp, kF, 2.0), 1.25, 1e-15);
    EXPECT_NEAR(mv_value(sp, kG, 2.0), 0.5625, 1e-15);

    const std::vector<double> y = pref.gateaux_density(kF);
    const std::vector<double> want{3.0, 1.0, 0.0, 0.0};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(y[i], want[i], 1e-13);
}

TEST(Preference, PositiveFloorTableValues) {
    FiniteSpace sp(kUniform4);
    Preference pref = Preference::constant_zeta(sp, 2.0, 0.2);

    EXPECT_NEAR(pref.lambda_level(kF), 2.4, 1e-13);
    EXPECT_NEAR(pref.lambda_level(kG), 2.4, 1e-13);
    EXPECT_NEAR(pref.value(kF), 1.735, 1e-13);
    EXPECT_NEAR(pref.value(kG), 1.785, 1e-13);
    // the bump now registers with exactly the floor mass on that state
    EXPECT_NEAR(pref.value(kG) - pref.value(kF), 0.05, 1e-12);

    const std::vector<double> y = pref.gateaux_density(kF);
    const std::vector<double> want{2.8, 0.8, 0.2, 0.2};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(y[i], want[i], 1e-13);
}

TEST(Preference, CoinTossEdgeOfDomain) {
    FiniteSpace sp({0.5, 0.5});
    Preference pref(sp, 2.0, {0.0, 0.0});
    const std::vector<double> h{0.5, -0.5};
    EXPECT_NEAR(mv_value(sp, h, 2.0), -0.25, 1e-15);
    EXPECT_NEAR(pref.value(h), -0.25, 1e-13);
    EXPECT_TRUE(pref.in_acceptance_set(h));

    // nudging the top payoff past 1/theta leaves the monotone domain
    const std::vector<double> g{0.5 + 1e-6, -0.5};
    EXPECT_FALSE(pref.in_acceptance_set(g));
}

TEST(Preference, PropernessClassification) {
    FiniteSpace sp({0.5, 0.5});
    EXPECT_EQ(Preference(sp, 1.0, {0.3, 0.3}).properness(), Properness::Proper);
    EXPECT_EQ(Preference(sp, 1.0, {1.0, 1.0}).properness(), Properness::AffineDegenerate);
    EXPECT_EQ(Preference(sp, 1.0, {1.5, 1.5}).properness(), Properness::Improper);

    Preference degenerate(sp, 1.0, {1.0, 1.0});
    EXPECT_THROW(degenerate.lambda_level({0.1, 0.2}), std::invalid_argument);
    EXPECT_THROW(degenerate.dual_qp({0.1, 0.2}), std::invalid_argument);
}

TEST(Preference, ConstructorValidation) {
    FiniteSpace sp({0.5, 0.5});
    EXPECT_THROW(Preference(sp, 0.0, {0.1, 0.1}), std::invalid_argument);
    EXPECT_THROW(Preference(sp, -1.0, {0.1, 0.1}), std::invalid_argument);
    EXPECT_THROW(Preference(sp, 1.0, {0.1}), std::invalid_argument);
    EXPECT_THROW(Preference(sp, 1.0, {-0.1, 0.1}), std::invalid_argument);
    EXPECT_THROW(Preference::constant_zeta(sp, 1.0, -0.5), std::invalid_argument);
}

TEST(Preference, CashEquivalenceAndTranslation) {
    FiniteSpace sp({0.3, 0.5, 0.2});
    Preference pref = Preference::constant_zeta(sp, 1.7, 0.35);
    for (double c : {-2.0, 0.0, 0.4, 3.1}) {
        std::vector<double> cash(3, c);
        EXPECT_NEAR(pref.value(cash), c, 1e-13);
    }
    const std::vector<double> f{0.6, -0.1, 1.4};
    const double shift = 0.77;
    std::vector<double> fs = f;
    for (double& x : fs) x += shift;
    EXPECT_NEAR(pref.value(fs), pref.value(f) + shift, 1e-12);
    EXPECT_NEAR(pref.lambda_level(fs), pref.lambda_level(f) + shift, 1e-12);
}

TEST(Preference, OrderingChain) {
    // classical index <= floored index <= plain mean, floor raises the value
    std::mt19937_64 eng(101);
    std::uniform_real_distribution<double> up(0.05, 1.0), uf(-1.0, 2.0), uz(0.0, 0.4);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(eng() % 9);
        std::vector<double> w(n), f(n), zlo(n), zhi(n);
        double s = 0.0;
        for (double& x : w) { x = up(eng); s += x; }
        for (double& x : w) x /= s;
        for (int i = 0; i < n; ++i) {
            f[i] = uf(eng);
            zlo[i] = uz(eng) * 0.5;
            zhi[i] = zlo[i] + uz(eng);
        }
        FiniteSpace sp(w);
        double ez = sp.mean(zhi);
        if (ez >= 0.98) continue;
        const double theta = 0.4 + up(eng) * 3.0;
        Preference plo(sp, theta, zlo), phi(sp, theta, zhi);
        const double u = mv_value(sp, f, theta);
        const double vlo = plo.value(f), vhi = phi.value(f);
        EXPECT_LE(u, vlo + 1e-10);
        EXPECT_LE(vlo, vhi + 1e-10);
        EXPECT_LE(vhi, sp.mean(f) + 1e-10);
        // larger risk weight can only cost value
        Preference steep(sp, theta * 2.5, zlo);
        EXPECT_LE(steep.value(f), vlo + 1e-10);
    }
}

TEST(Preference, MonotoneWithFloorMassGap) {
    // bumping a payoff on an event gains at least the floor mass there
    std::mt19937_64 eng(202);
    std::uniform_real_distribution<double> uf(-1.0, 1.5);
    FiniteSpace sp({0.2, 0.2, 0.2, 0.2, 0.2});
    Preference pref = Preference::constant_zeta(sp, 2.2, 0.3);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> f(5), g(5);
        double floor_mass = 0.0;
        for (int i = 0; i < 5; ++i) {
            f[i] = uf(eng);
            const bool bump = (eng() & 1u) != 0;
            g[i] = f[i] + (bump ? 0.25 : 0.0);
            if (bump) floor_mass += sp.prob(i) * 0.3 * 0.25;
        }
        EXPECT_GE(pref.value(g) - pref.value(f), floor_mass - 1e-11);
    }
}

TEST(Preference, FormAgreementRandomSpaces) {
    // truncation form vs distributional form of the same number
    std::mt19937_64 eng(303);
    std::uniform_real_distribution<double> up(0.05, 1.0), uf(-2.0, 2.0), uz(0.0, 0.5);
    for (int trial = 0; trial < 80; ++trial) {
        const int n = 2 + static_cast<int>(eng() % 14);
        std::vector<double> w(n), f(n), z(n);
        double s = 0.0;
        for (double& x : w) { x = up(eng); s += x; }
        for (double& x : w) x /= s;
        for (int i = 0; i < n; ++i) { f[i] = uf(eng); z[i] = uz(eng); }
        FiniteSpace sp(w);
        if (sp.mean(z) >= 0.95) continue;
        Preference pref(sp, 0.5 + up(eng) * 3.0, z);
        EXPECT_NEAR(pref.value(f), pref.value_distributional(f), 1e-10);
    }
}

TEST(Preference, DualMatchesDirectForms) {
    std::mt19937_64 eng(404);
    std::uniform_real_distribution<double> up(0.05, 1.0), uf(-1.5, 1.5), uz(0.0, 0.5);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 3 + static_cast<int>(eng() % 10);
        std::vector<double> w(n), f(n), z(n);
        double s = 0.0;
        for (double& x : w) { x = up(eng); s += x; }
        for (double& x : w) x /= s;
        for (int i = 0; i < n; ++i) { f[i] = uf(eng); z[i] = uz(eng); }
        FiniteSpace sp(w);
        if (sp.mean(z) >= 0.9) continue;
        Preference pref(sp, 0.5 + up(eng) * 2.5, z);

        DualResult dual = pref.dual_qp(f);
        EXPECT_NEAR(dual.value, pref.value(f), 1e-8);
        const std::vector<double> y = pref.gateaux_density(f);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(dual.y[i], y[i], 1e-8);

        // minimizer facts: unit mass, floor respected, matches the level rule
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            mass += sp.prob(i) * dual.y[i];
            EXPECT_GE(dual.y[i], z[i] - 1e-10);
        }
        EXPECT_NEAR(mass, 1.0, 1e-9);
    }
}

TEST(Preference, TruncationAndMaximality) {
    FiniteSpace sp({0.25, 0.25, 0.25, 0.25});
    const double theta = 2.0, z0 = 0.2;
    Preference pref = Preference::constant_zeta(sp, theta, z0);
    const std::vector<double> f = kG;
    const double lam = pref.lambda_level(f);

    // the level truncation lands inside the monotone domain and splits the
    // value into a classical part plus floor mass on the removed top
    std::vector<double> trunc(4);
    double extra = 0.0;
    for (int i = 0; i < 4; ++i) {
        trunc[i] = std::min(f[i], lam - z0 / theta);
        extra += sp.prob(i) * (f[i] - trunc[i]) * z0;
    }
    EXPECT_TRUE(pref.in_acceptance_set(trunc, 1e-9));
    EXPECT_NEAR(pref.value(trunc), mv_value(sp, trunc, theta), 1e-12);
    EXPECT_NEAR(pref.value(f), pref.value(trunc) + extra, 1e-12);

    // any lower in-domain truncation can only do worse
    for (double c = 0.2; c < 3.0; c += 0.13) {
        std::vector<double> g(4);
        double tail = 0.0;
        for (int i = 0; i < 4; ++i) {
            g[i] = std::min(f[i], c);
            tail += sp.prob(i) * (f[i] - g[i]) * z0;
        }
        if (!pref.in_acceptance_set(g, 1e-9)) continue;
        EXPECT_LE(mv_value(sp, g, theta) + tail, pref.value(f) + 1e-11);
    }
}

TEST(Preference, AcceptanceSetMatchesLevelRule) {
    // esssup(f + zeta/theta) <= lambda is the same set
    std::mt19937_64 eng(505);
    std::uniform_real_distribution<double> uf(-0.6, 0.6), uz(0.0, 0.5);
    FiniteSpace sp({0.1, 0.2, 0.3, 0.4});
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> f(4), z(4);
        for (int i = 0; i < 4; ++i) { f[i] = uf(eng); z[i] = uz(eng); }
        if (sp.mean(z) >= 0.9) continue;
        const double theta = 0.5 + (eng() % 100) / 40.0;
        Preference pref(sp, theta, z);
        const double lam = pref.lambda_level(f);
        double sup = -1e300;
        for (int i = 0; i < 4; ++i) sup = std::max(sup, f[i] + z[i] / theta);
        const bool by_level = sup <= lam + 1e-11;
        EXPECT_EQ(pref.in_acceptance_set(f, 1e-11), by_level);
    }
}

TEST(Preference, MeanPreservingSpreadCostsValue) {
    // law-invariant and concave for a constant floor, so spreads hurt
    FiniteSpace sp({0.25, 0.25, 0.25, 0.25});
    Preference pref = Preference::constant_zeta(sp, 1.8, 0.25);
    std::mt19937_64 eng(606);
    std::uniform_real_distribution<double> uf(-1.0, 1.0), ud(0.0, 0.8);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = uf(eng), b = uf(eng), d = ud(eng);
        const std::vector<double> base{a, a, b, b};
        const std::vector<double> spread{a - d, a + d, b, b};
        EXPECT_LE(pref.value(spread), pref.value(base) + 1e-11);
    }
}

TEST(Preference, BumpReportBoundsRandomized) {
    std::mt19937_64 eng(707);
    std::uniform_real_distribution<double> up(0.05, 1.0), uf(-1.0, 1.0), uz(0.0, 0.4),
        ue(0.01, 0.5);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(eng() % 9);
        std::vector<double> w(n), f(n), z(n);
        std::vector<bool> ev(n);
        double s = 0.0;
        bool any = false;
        for (double& x : w) { x = up(eng); s += x; }
        for (double& x : w) x /= s;
        for (int i = 0; i < n; ++i) {
            f[i] = uf(eng);
            z[i] = uz(eng);
            ev[i] = (eng() & 1u) != 0;
            any = any || ev[i];
        }
        if (!any) ev[0] = true;
        FiniteSpace sp(w);
        const double eps = ue(eng);
        double ez = sp.mean(z), pa = 0.0;
        for (int i = 0; i < n; ++i)
            if (ev[i]) pa += sp.prob(i);
        if (ez + eps * pa >= 0.95) continue;
        const double theta = 0.5 + up(eng) * 3.0;

        LambdaBumpReport rep = lambda_bump_report(sp, f, theta, z, ev, eps);
        EXPECT_GE(rep.delta_f, -1e-12);
        EXPECT_LE(rep.delta_f, eps + 1e-12);
        EXPECT_GE(rep.delta_zeta, rep.zeta_lower_bound - 1e-12);
        EXPECT_LE(rep.delta_zeta, rep.zeta_upper_bound + 1e-12);
    }
}

} // namespace
