#ifndef SMMV_SIM_HPP
#define SMMV_SIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "smmv/ct_market.hpp"
#include "smmv/quadrature.hpp"

// Monte Carlo machinery: a reproducible normal generator, Euler schemes for
// the wealth and game dynamics, exact sampling of the exponential
// martingale, and a coupled two-grid runner for bias studies.

namespace smmv {

// Stream splitting rule: path k of a run seeded with s draws from
// mt19937_64(split_seed(s, k)), a splitmix64 step of s + (k+1) * golden
// ratio. Serial and parallel execution therefore see identical streams.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// mt19937_64 with an explicit Box-Muller transform.  std::normal_distribution
// is not bit-portable across standard libraries; this is, for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {
        // 53 random bits mapped to (0, 1); zero is possible and handled by
        // callers that cannot take it.
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(ang);
        have_spare_ = true;
        return r * std::cos(ang);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct McStats {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline McStats mc_stats(const std::vector<double>& xs) {
    McStats st;
    st.n = xs.size();
    if (st.n == 0) return st;
    double sum = 0.0;
    for (double x : xs) sum += x;
    st.mean = sum / static_cast<double>(st.n);
    if (st.n < 2) return st;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - st.mean;
        ss += d * d;
    }
    st.se = std::sqrt(ss / (static_cast<double>(st.n) - 1.0) /
                      static_cast<double>(st.n));
    return st;
}

// Exact draw of the terminal exponential martingale Lambda_T / Lambda_t given
// the integrated squared market price of risk over (t, T].
inline double sample_terminal_martingale(double v, Rng& rng) {
    if (v < 0.0) throw std::invalid_argument("variance must be nonnegative");
    if (v == 0.0) return 1.0;
    return std::exp(-std::sqrt(v) * rng.normal() - 0.5 * v);
}

// Euler scheme for self-financing wealth under a feedback investment rule
// pi(t, x): dX = (r X + pi sigma vartheta) dt + pi sigma dW.
template <class Feedback>
double simulate_wealth(const Market& mkt, const Feedback& pi, double x0,
                       int steps, Rng& rng) {
    if (steps < 1) throw std::invalid_argument("need at least one step");
    const double T = mkt.horizon();
    const double dt = T / steps;
    const double sdt = std::sqrt(dt);
    double x = x0;
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        const double amount = pi(t, x);
        if (!std::isfinite(amount))
            throw std::runtime_error("simulate_wealth: feedback returned a non-finite amount");
        const double expo = amount * mkt.sigma(t);
        x += (mkt.rate(t) * x + expo * mkt.vartheta(t)) * dt +
             expo * sdt * rng.normal();
    }
    return x;
}

// Same wealth Euler scheme on two nested grids driven by one set of Brownian
// increments: the coarse step consumes the sum of two fine increments.
// Returns (coarse terminal wealth, fine terminal wealth).
template <class Feedback>
std::pair<double, double> simulate_wealth_coupled(const Market& mkt,
                                                  const Feedback& pi, double x0,
                                                  int coarse_steps, Rng& rng) {
    if (coarse_steps < 1) throw std::invalid_argument("need at least one step");
    const double T = mkt.horizon();
    const double dtf = T / (2 * coarse_steps);
    const double sdtf = std::sqrt(dtf);
    double xc = x0, xf = x0;
    for (int k = 0; k < coarse_steps; ++k) {
        const double dw1 = sdtf * rng.normal();
        const double dw2 = sdtf * rng.normal();
        const double t0 = 2 * k * dtf;
        const double t1 = (2 * k + 1) * dtf;
        double amount = pi(t0, xf);
        double expo = amount * mkt.sigma(t0);
        xf += (mkt.rate(t0) * xf + expo * mkt.vartheta(t0)) * dtf + expo * dw1;
        amount = pi(t1, xf);
        expo = amount * mkt.sigma(t1);
        xf += (mkt.rate(t1) * xf + expo * mkt.vartheta(t1)) * dtf + expo * dw2;
        amount = pi(t0, xc);
        expo = amount * mkt.sigma(t0);
        xc += (mkt.rate(t0) * xc + expo * mkt.vartheta(t0)) * (2.0 * dtf) +
              expo * (dw1 + dw2);
    }
    return {xc, xf};
}

// Joint Euler scheme for the game state (X, Z) with the exponential
// martingale advanced by its exact one-step solution from the same
// increments.  Z is driftless with volatility gamma(t, x, z, lambda).
// Records whether and when Z first touches zero or below.
struct GamePath {
    double x = 0.0;
    double z = 0.0;
    double lambda = 0.0;
    bool hit_zero = false;
    double hit_time = -1.0;
};

// Minimal anchor mirror so this header does not depend on the game header.
struct GameAnchorState {
    double t = 0.0;
    double x = 1.0;
    double z = 1.0;
    double lambda = 1.0;
};

template <class PiFeedback, class GammaFeedback>
GamePath simulate_game_path(const Market& mkt, const PiFeedback& pi,
                            const GammaFeedback& gamma, const GameAnchorState& a,
                            int steps, Rng& rng) {
    if (steps < 1) throw std::invalid_argument("need at least one step");
    const double T = mkt.horizon();
    const double dt = (T - a.t) / steps;
    const double sdt = std::sqrt(dt);
    GamePath p;
    p.x = a.x;
    p.z = a.z;
    p.lambda = a.lambda;
    for (int k = 0; k < steps; ++k) {
        const double t = a.t + k * dt;
        const double vt = mkt.vartheta(t);
        const double dw = sdt * rng.normal();
        const double amount = pi(t, p.x, p.z, p.lambda);
        const double gvol = gamma(t, p.x, p.z, p.lambda);
        if (!std::isfinite(amount) || !std::isfinite(gvol))
            throw std::runtime_error("simulate_game_path: feedback returned a non-finite value");
        const double expo = amount * mkt.sigma(t);
        p.x += (mkt.rate(t) * p.x + expo * vt) * dt + expo * dw;
        p.z += gvol * dw;
        p.lambda *= std::exp(-vt * dw - 0.5 * vt * vt * dt);
        if (!p.hit_zero && p.z <= 0.0) {
            p.hit_zero = true;
            p.hit_time = t + dt;
        }
    }
    return p;
}

// Terminal ensemble under a feedback pair, one split RNG stream per path.
struct Ensemble {
    std::vector<double> x_T, z_T, lambda_T;
    std::size_t hits = 0; // paths where Z touched zero or below
};

template <class PiFeedback, class GammaFeedback>
Ensemble simulate_ensemble(const Market& mkt, const PiFeedback& pi,
                           const GammaFeedback& gamma, const GameAnchorState& a,
                           int steps, std::size_t paths, std::uint64_t seed) {
    Ensemble ens;
    ens.x_T.reserve(paths);
    ens.z_T.reserve(paths);
    ens.lambda_T.reserve(paths);
    for (std::size_t k = 0; k < paths; ++k) {
        Rng rng(split_seed(seed, k));
        const GamePath p = simulate_game_path(mkt, pi, gamma, a, steps, rng);
        ens.x_T.push_back(p.x);
        ens.z_T.push_back(p.z);
        ens.lambda_T.push_back(p.lambda);
        if (p.hit_zero) ++ens.hits;
    }
    return ens;
}

// Sample estimate of the game objective
//   E[X zeta + kappa (X + zeta/theta) Z + kappa^2 Z^2 / (2 theta)]
// minus the penalty term (rho/2) E[(X - c)^2] when rho > 0.
inline McStats estimate_objective(const Ensemble& ens, double theta,
                                  const ZetaModel& zeta, double rho = 0.0,
                                  double c = 0.0) {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    const double kap = zeta.kappa();
    std::vector<double> vals(ens.x_T.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double x = ens.x_T[i], z = ens.z_T[i];
        const double zt = zeta.terminal(ens.lambda_T[i]);
        double j = x * zt + kap * (x + zt / theta) * z +
                   kap * kap * z * z / (2.0 * theta);
        if (rho > 0.0) j -= 0.5 * rho * (x - c) * (x - c);
        vals[i] = j;
    }
    return mc_stats(vals);
}

// Plain and antithetic Monte Carlo over a standard normal input. The
// antithetic version evaluates each draw at +z and -z and averages per pair,
// preserving the mean while cancelling the odd part of the integrand.
template <class F>
McStats mc_normal(std::size_t n, F&& f, Rng& rng) {
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = f(rng.normal());
    return mc_stats(vals);
}

template <class F>
McStats mc_antithetic_normal(std::size_t n_pairs, F&& f, Rng& rng) {
    std::vector<double> vals(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const double z = rng.normal();
        vals[i] = 0.5 * (f(z) + f(-z));
    }
    return mc_stats(vals);
}

// P(min over [0, T] of the exponential martingale <= barrier) for a constant
// market price of risk: reflection formula for drifted Brownian motion.
inline double martingale_hitting_probability(double vartheta, double T,
                                             double barrier) {
    if (!(barrier > 0.0) || barrier >= 1.0)
        throw std::invalid_argument("barrier must lie in (0, 1)");
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (vartheta == 0.0) return 0.0;
    const double av = std::abs(vartheta);
    const double mu = 0.5 * vartheta * vartheta;
    const double lvl = -std::log(barrier); // > 0
    const double sT = av * std::sqrt(T);
    return normal_cdf((-lvl + mu * T) / sT) +
           std::exp(2.0 * mu * lvl / (vartheta * vartheta)) *
               normal_cdf((-lvl - mu * T) / sT);
}

// Largest one-step defect of the open-loop optimal investment against its
// own linear SDE, over simulated martingale paths.  First order in dt, so it
// shrinks linearly with the step count.
inline double open_loop_sde_residual(const Market& mkt, double theta, int steps,
                                     int paths, Rng& rng) {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    if (steps < 1 || paths < 1) throw std::invalid_argument("need steps and paths");
    const double T = mkt.horizon();
    const double dt = T / steps;
    const double sdt = std::sqrt(dt);
    // y(s) = pi(s) sigma(s) / vartheta(s) = Lambda_s exp(-int_s^T (r - vartheta^2)) / theta
    const auto level = [&](double s, double lam) {
        return lam *
               std::exp(-(mkt.int_rate(s, T) - mkt.int_vartheta_sq(s, T))) / theta;
    };
    double worst = 0.0;
    for (int p = 0; p < paths; ++p) {
        double lam = 1.0;
        double y = level(0.0, lam);
        for (int k = 0; k < steps; ++k) {
            const double t = k * dt;
            const double vt = mkt.vartheta(t);
            const double dw = sdt * rng.normal();
            lam *= std::exp(-vt * dw - 0.5 * vt * vt * dt);
            const double ynew = level((k + 1) * dt, lam);
            const double defect =
                ynew - y - y * ((mkt.rate(t) - vt * vt) * dt - vt * dw);
            worst = std::max(worst, std::abs(defect));
            y = ynew;
        }
    }
    return worst;
}

} // namespace smmv

#endif // SMMV_SIM_HPP
