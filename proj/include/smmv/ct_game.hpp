#ifndef SMMV_CT_GAME_HPP
#define SMMV_CT_GAME_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "smmv/ct_market.hpp"
#include "smmv/quadrature.hpp"

// Closed forms for the auxiliary-state zero-sum game behind the floored
// mean-variance objective: the exact saddle, its quadratic-penalty
// approximation, the zero-floor boundary case, and the two-multiplier
// fixed point that identifies the penalised terminal state.

namespace smmv {

// Evaluation point of the game: time, wealth, auxiliary state z (the
// conditional mass the floor player still controls), and the running value
// of the exponential martingale (1 at time zero).
struct GameAnchor {
    double t = 0.0;
    double x = 1.0;
    double z = 1.0;
    double lambda = 1.0;
};

struct Penalty {
    double rho; // weight of the quadratic wealth penalty, > 0
    double c;   // penalty target level
};

namespace detail {

inline void check_anchor(const Market& mkt, const GameAnchor& a) {
    if (a.t < 0.0 || a.t > mkt.horizon())
        throw std::invalid_argument("anchor time outside [0, T]");
    if (!(a.lambda > 0.0))
        throw std::invalid_argument("martingale state must be positive");
}

inline void check_theta(double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
}

inline void check_penalty(const Penalty& pen) {
    if (!(pen.rho > 0.0)) throw std::invalid_argument("penalty weight must be positive");
}

} // namespace detail

// Value of the exact game at (t, x, z).  The last term compensates the
// quadratic cost the stopped floor player has already locked in.
inline double saddle_value(const Market& mkt, double theta, const ZetaModel& zeta,
                           const GameAnchor& a) {
    detail::check_theta(theta);
    detail::check_anchor(mkt, a);
    const double T = mkt.horizon();
    const double eR = mkt.growth(a.t, T);
    const double ev = std::exp(mkt.int_vartheta_sq(a.t, T));
    const double ez = zeta.cond_mean(a.lambda);
    const double mix = ez + zeta.kappa() * a.z;
    return a.x * mix * eR + mix * mix * ev / (2.0 * theta) -
           zeta.cond_sq(mkt, a.t, a.lambda) / (2.0 * theta);
}

// Feedback investment of the exact game.  Depends on (s, z, lambda_s) only.
inline double saddle_pi(const Market& mkt, double theta, const ZetaModel& zeta,
                        double s, double z_s, double lambda_s) {
    detail::check_theta(theta);
    const double T = mkt.horizon();
    const double vt = mkt.vartheta(s);
    const double mix = zeta.cond_mean(lambda_s) + zeta.kappa() * z_s;
    return vt / (theta * mkt.sigma(s)) * mix *
           std::exp(-(mkt.int_rate(s, T) - mkt.int_vartheta_sq(s, T)));
}

// Feedback control of the floor player.  The conditional-mean drift and the
// martingale part of the floor cancel except for the constant piece, so the
// 1/kappa division only matters when that piece is nonzero.
inline double saddle_gamma(const Market& mkt, const ZetaModel& zeta,
                           double s, double z_s) {
    const double vt = mkt.vartheta(s);
    double lead = 0.0;
    if (zeta.a() != 0.0) {
        if (zeta.kappa() <= 0.0)
            throw std::invalid_argument("floor control undefined: constant floor part with no mass headroom");
        lead = zeta.a() * vt / zeta.kappa();
    }
    return -lead - z_s * vt;
}

// Open-loop optimal investment under a floor dominated by the terminal
// martingale: coincides with the plain mean-variance open-loop strategy.
inline double saddle_pi_open_loop(const Market& mkt, double theta,
                                  double s, double lambda_s) {
    detail::check_theta(theta);
    const double T = mkt.horizon();
    return lambda_s * mkt.vartheta(s) / (theta * mkt.sigma(s)) *
           std::exp(-(mkt.int_rate(s, T) - mkt.int_vartheta_sq(s, T)));
}

// ---------------------------------------------------------------------------
// Quadratic-penalty approximation
// ---------------------------------------------------------------------------

// Value of the penalised game.  Two correction terms on top of the exact
// value: the fully-hedged penalty and the part that cannot be hedged against
// the auxiliary state.
inline double approx_value(const Market& mkt, double theta, const ZetaModel& zeta,
                           const Penalty& pen, const GameAnchor& a) {
    detail::check_theta(theta);
    detail::check_penalty(pen);
    detail::check_anchor(mkt, a);
    const double T = mkt.horizon();
    const double eR = mkt.growth(a.t, T);
    const double v = mkt.int_vartheta_sq(a.t, T);
    const double ev = std::exp(v);
    const double ez = zeta.cond_mean(a.lambda);
    const double mix = zeta.kappa() * a.z + ez;
    const double gap = pen.c - a.x * eR;
    const double base = a.x * mix * eR + mix * mix * ev / (2.0 * theta) -
                        zeta.cond_sq(mkt, a.t, a.lambda) / (2.0 * theta);
    const double hedged = 0.5 * pen.rho * std::exp(-v) * gap * gap;
    const double res = gap - mix * ev / theta;
    const double unhedged = 0.5 * pen.rho * (1.0 - std::exp(-v)) /
                            (1.0 + pen.rho / theta * ev) * res * res;
    return base - hedged - unhedged;
}

// Feedback investment of the penalised game at (s, X_s, Z_s, Lambda_s).
inline double approx_pi(const Market& mkt, double theta, const ZetaModel& zeta,
                        const Penalty& pen, double s, double x_s, double z_s,
                        double lambda_s) {
    detail::check_theta(theta);
    detail::check_penalty(pen);
    const double T = mkt.horizon();
    const double Rs = mkt.int_rate(s, T);
    const double vs = mkt.int_vartheta_sq(s, T);
    const double drive = pen.rho * pen.c - pen.rho * x_s * std::exp(Rs) +
                         zeta.kappa() * z_s + zeta.cond_mean(lambda_s);
    return mkt.vartheta(s) * std::exp(-(Rs - vs)) /
           (theta * mkt.sigma(s) * (1.0 + pen.rho / theta * std::exp(vs))) * drive;
}

// Feedback control of the floor player in the penalised game.  Genuinely
// singular at zero mass headroom.
inline double approx_gamma(const Market& mkt, double theta, const ZetaModel& zeta,
                           const Penalty& pen, double s, double x_s, double z_s,
                           double lambda_s) {
    detail::check_theta(theta);
    detail::check_penalty(pen);
    const double kap = zeta.kappa();
    if (!(kap > 0.0))
        throw std::invalid_argument("floor control undefined without mass headroom");
    const double T = mkt.horizon();
    const double vs = mkt.int_vartheta_sq(s, T);
    const double vt = mkt.vartheta(s);
    const double drive = pen.rho * pen.c - pen.rho * x_s * std::exp(mkt.int_rate(s, T)) +
                         kap * z_s + zeta.cond_mean(lambda_s);
    return -vt / (kap * (1.0 + pen.rho / theta * std::exp(vs))) * drive -
           zeta.eta(mkt, s, lambda_s) / kap;
}

// Open-loop form of the penalised investment: the drive term evaluated once
// at the anchor and transported by the martingale.
inline double approx_pi_open_loop(const Market& mkt, double theta, const ZetaModel& zeta,
                                  const Penalty& pen, const GameAnchor& a,
                                  double s, double lambda_s) {
    detail::check_theta(theta);
    detail::check_penalty(pen);
    detail::check_anchor(mkt, a);
    const double T = mkt.horizon();
    const double Rs = mkt.int_rate(s, T);
    const double vs = mkt.int_vartheta_sq(s, T);
    const double vanchor = mkt.int_vartheta_sq(a.t, T);
    const double drive0 = pen.rho * pen.c - pen.rho * a.x * mkt.growth(a.t, T) +
                          zeta.kappa() * a.z + zeta.cond_mean(a.lambda);
    return mkt.vartheta(s) * std::exp(-(Rs - vs)) * lambda_s /
           (mkt.sigma(s) * (theta + pen.rho * std::exp(vanchor)) * a.lambda) * drive0;
}

inline double approx_gamma_open_loop(const Market& mkt, double theta, const ZetaModel& zeta,
                                     const Penalty& pen, const GameAnchor& a,
                                     double s, double lambda_s) {
    detail::check_theta(theta);
    detail::check_penalty(pen);
    detail::check_anchor(mkt, a);
    const double kap = zeta.kappa();
    if (!(kap > 0.0))
        throw std::invalid_argument("floor control undefined without mass headroom");
    const double T = mkt.horizon();
    const double vanchor = mkt.int_vartheta_sq(a.t, T);
    const double drive0 = pen.rho * pen.c - pen.rho * a.x * mkt.growth(a.t, T) +
                          kap * a.z + zeta.cond_mean(a.lambda);
    return -theta * mkt.vartheta(s) * lambda_s /
               (kap * (theta + pen.rho * std::exp(vanchor)) * a.lambda) * drive0 -
           zeta.eta(mkt, s, lambda_s) / kap;
}

// ---------------------------------------------------------------------------
// Boundary case z = 0: the floor player is out of mass, only the penalty acts.
// ---------------------------------------------------------------------------

inline double boundary_value(const Market& mkt, const ZetaModel& zeta,
                             const Penalty& pen, double t, double x, double lambda_t) {
    detail::check_penalty(pen);
    const double T = mkt.horizon();
    const double v = mkt.int_vartheta_sq(t, T);
    const double drive = pen.rho * pen.c - pen.rho * x * mkt.growth(t, T) +
                         zeta.tilde_mean(mkt, t, lambda_t);
    return pen.c * zeta.cond_mean(lambda_t) +
           zeta.cond_sq(mkt, t, lambda_t) / (2.0 * pen.rho) -
           std::exp(-v) / (2.0 * pen.rho) * drive * drive;
}

inline double boundary_pi(const Market& mkt, const ZetaModel& zeta,
                          const Penalty& pen, double s, double x, double lambda_s) {
    detail::check_penalty(pen);
    const double T = mkt.horizon();
    const double Rs = mkt.int_rate(s, T);
    const double drive = pen.rho * pen.c - pen.rho * x * std::exp(Rs) +
                         zeta.tilde_mean(mkt, s, lambda_s);
    return std::exp(-Rs) / (pen.rho * mkt.sigma(s)) *
           (drive * mkt.vartheta(s) + zeta.tilde_eta(mkt, s, lambda_s));
}

// ---------------------------------------------------------------------------
// Vanishing-penalty limit
// ---------------------------------------------------------------------------

// Investment that the penalised strategies converge to as the penalty weight
// goes to zero: a pure feedback rule in wealth.  At the anchor it matches
// saddle_pi, and under a martingale-dominated floor it reproduces the plain
// mean-variance feedback with the optimal completion level.
inline double limiting_pi(const Market& mkt, double theta, const ZetaModel& zeta,
                          const GameAnchor& a, double s, double x_s) {
    detail::check_theta(theta);
    detail::check_anchor(mkt, a);
    const double T = mkt.horizon();
    const double Rs = mkt.int_rate(s, T);
    const double mix = zeta.kappa() * a.z + zeta.cond_mean(a.lambda);
    const double target = a.x * mkt.growth(a.t, T) +
                          mix * std::exp(mkt.int_vartheta_sq(a.t, T)) / theta;
    return mkt.vartheta(s) / mkt.sigma(s) * std::exp(-Rs) *
           (target - x_s * std::exp(Rs));
}

// ---------------------------------------------------------------------------
// Floor-domination of the penalised auxiliary state
// ---------------------------------------------------------------------------

// Whether the penalised auxiliary state started at (t, z) stays above zero up
// to the horizon.  For an affine floor in the terminal martingale this
// reduces to a two-sided bound on a single deterministic level.
struct DominationReport {
    bool holds = false;
    double level = 0.0;        // the deterministic comparison level
    double lower_margin = 0.0; // level - slope part of the floor
    double upper_margin = 0.0; // remaining headroom above the level
};

inline DominationReport no_hitting_condition(const Market& mkt, double theta,
                                             const ZetaModel& zeta, double rho,
                                             double c, const GameAnchor& a) {
    detail::check_theta(theta);
    detail::check_anchor(mkt, a);
    if (rho < 0.0) throw std::invalid_argument("penalty weight must be nonnegative");
    const double T = mkt.horizon();
    const double ev = std::exp(mkt.int_vartheta_sq(a.t, T));
    const double kz = zeta.kappa() * a.z;
    const double drive = rho * c - rho * a.x * mkt.growth(a.t, T) +
                         kz + zeta.cond_mean(a.lambda);
    DominationReport rep;
    rep.level = theta * drive / (theta + rho * ev);
    const double slope = zeta.b() * a.lambda;
    rep.lower_margin = rep.level - slope;
    rep.upper_margin = kz + slope - rep.level;
    rep.holds = rep.lower_margin >= 0.0 && rep.upper_margin >= 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Two-multiplier fixed point for the penalised terminal state
// ---------------------------------------------------------------------------

enum class EmbedRegime { Linear, Kinked };
enum class EmbedMethod { Newton, NestedBisection };

struct EmbedOptions {
    // Nested bisection is the reference path: the bracket structure makes it
    // globally convergent. Newton exploits the closed tail moments and is the
    // fast path; it falls back to bisection if a step fails to improve.
    EmbedMethod method = EmbedMethod::NestedBisection;
    int quad_nodes = 48;   // nodes for the residual check
    double tol = 1e-12;
    int max_iter = 100;
};

// Solution of the system
//   (state)   coef * E[(A + B M)+]     = kappa z
//   (pricing) w rho e^v - rho (c - x e^R) - tilde E[zeta] = coef * E[M (A + B M)+]
// in the multipliers (h, w), where M is the horizon martingale ratio,
// A = h/kappa - c - tj a, B = w - tj b Lambda_t, tj = (theta+rho)/(theta rho),
// coef = 1/tj.  The positive part of the kernel is the scaled terminal
// auxiliary state up to the factor coef.
struct EmbedSolution {
    double h = 0.0;
    double w = 0.0;
    double h_scaled = 0.0;    // rho * h, the substituted pair some displays use
    double w_scaled = 0.0;    // rho * w
    EmbedRegime regime = EmbedRegime::Linear;
    std::string method;       // "linear", "newton", "bisection"
    int iterations = 0;
    double A = 0.0;
    double B = 0.0;
    double kink = 0.0;        // sign change of the kernel on (0, inf); 0 if none
    double coef = 0.0;        // theta rho / (theta + rho)
    double e1 = 0.0;          // E[(A + B M)+]
    double e2 = 0.0;          // E[M (A + B M)+]
    double resid_state = 0.0; // quadrature residual of the state equation
    double resid_price = 0.0; // quadrature residual of the pricing equation
    double w_lower = 0.0;     // proven lower bound for w
    double w_linear = 0.0;    // candidate from the kink-free closed form
    double margin_a = 0.0;    // A at the kink-free candidate
    double margin_b = 0.0;    // B at the kink-free candidate
};

namespace detail {

// Moments of M over the positivity set of A + B M, M lognormal with
// log-variance v and unit mean.
inline PartialMoments indicator_moments(double A, double B, double v) {
    const double ev = std::exp(v);
    if (B > 0.0) {
        if (A >= 0.0) return {1.0, 1.0, ev};
        return lognormal_partial_moments(-A / B, v);
    }
    if (B < 0.0) {
        if (A <= 0.0) return {0.0, 0.0, 0.0};
        const PartialMoments up = lognormal_partial_moments(-A / B, v);
        return {1.0 - up.p, 1.0 - up.m1, ev - up.m2};
    }
    if (A > 0.0) return {1.0, 1.0, ev};
    return {0.0, 0.0, 0.0};
}

struct EmbedFrame {
    double v = 0.0, ev = 0.0, eR = 0.0;
    double kz = 0.0, ez = 0.0, tez = 0.0;
    double a = 0.0, bl = 0.0; // floor = a + bl * M
    double tj = 0.0, coef = 0.0;
    double cash = 0.0;        // c - x e^R
    double kappa = 0.0;

    double A_of(double h) const { return h / kappa - cash - a * tj - eRx; }
    double eRx = 0.0; // x e^R, so cash + eRx = c

    double B_of(double w) const { return w - tj * bl; }
};

inline EmbedFrame make_frame(const Market& mkt, double theta, const ZetaModel& zeta,
                             const Penalty& pen, const GameAnchor& a) {
    EmbedFrame fr;
    const double T = mkt.horizon();
    fr.v = mkt.int_vartheta_sq(a.t, T);
    fr.ev = std::exp(fr.v);
    fr.eR = mkt.growth(a.t, T);
    fr.eRx = a.x * fr.eR;
    fr.cash = pen.c - fr.eRx;
    fr.kappa = zeta.kappa();
    fr.kz = fr.kappa * a.z;
    fr.ez = zeta.cond_mean(a.lambda);
    fr.tez = zeta.tilde_mean(mkt, a.t, a.lambda);
    fr.a = zeta.a();
    fr.bl = zeta.b() * a.lambda;
    fr.tj = (theta + pen.rho) / (theta * pen.rho);
    fr.coef = 1.0 / fr.tj;
    return fr;
}

} // namespace detail

inline EmbedSolution solve_embedding(const Market& mkt, double theta,
                                     const ZetaModel& zeta, const Penalty& pen,
                                     const GameAnchor& anchor,
                                     const EmbedOptions& opts = {}) {
    detail::check_theta(theta);
    detail::check_penalty(pen);
    detail::check_anchor(mkt, anchor);
    if (!(anchor.z > 0.0))
        throw std::invalid_argument("auxiliary state must be positive; the zero boundary has its own closed form");
    if (!(zeta.kappa() > 0.0))
        throw std::invalid_argument("fixed point requires strictly positive mean headroom");
    if (pen.c < anchor.x * std::exp(mkt.int_rate_abs(anchor.t, mkt.horizon())) - 1e-12)
        throw std::invalid_argument("penalty target must dominate the rolled-up wealth");
    if (opts.quad_nodes < 4) throw std::invalid_argument("need at least 4 quadrature nodes");

    const detail::EmbedFrame fr = detail::make_frame(mkt, theta, zeta, pen, anchor);
    const double rho = pen.rho;

    EmbedSolution sol;
    sol.coef = fr.coef;
    sol.w_lower = std::exp(-fr.v) * (rho * fr.cash + fr.tez) / rho;

    // Kink-free candidate: with the kernel nonnegative everywhere both
    // expectations are affine in (h, w) and the system solves in closed form.
    const double drive = rho * fr.cash + fr.kz + fr.ez;
    const double w_lin = (theta + rho) / (theta + rho * fr.ev) * drive / rho;
    const double h_lin = fr.kappa * ((fr.kz + fr.ez) * fr.tj + pen.c - w_lin);
    sol.w_linear = w_lin;
    sol.margin_a = fr.A_of(h_lin);
    sol.margin_b = fr.B_of(w_lin);

    const auto resid = [&fr, rho](double h, double w, double* e1out = nullptr,
                                  double* e2out = nullptr) {
        const AffinePlusMoments m =
            affine_plus_moments(fr.A_of(h), fr.B_of(w), fr.v);
        if (e1out) *e1out = m.plain;
        if (e2out) *e2out = m.tilted;
        const double r1 = fr.coef * m.plain - fr.kz;
        const double r2 = w * rho * fr.ev - rho * fr.cash - fr.tez - fr.coef * m.tilted;
        return std::pair<double, double>(r1, r2);
    };

    const double scale1 = std::max(1.0, fr.kz);
    const auto converged = [&](double r1, double r2, double w) {
        const double scale2 = std::max(1.0, rho * fr.ev * std::abs(w));
        return std::abs(r1) <= opts.tol * scale1 && std::abs(r2) <= opts.tol * scale2;
    };

    if (sol.margin_a >= 0.0 && sol.margin_b >= 0.0) {
        sol.h = h_lin;
        sol.w = w_lin;
        sol.regime = EmbedRegime::Linear;
        sol.method = "linear";
    } else {
        sol.regime = EmbedRegime::Kinked;
        double h = h_lin, w = w_lin;
        bool ok = false;

        if (opts.method == EmbedMethod::Newton) {
            auto [r1, r2] = resid(h, w);
            double nrm = std::hypot(r1, r2);
            int it = 0;
            for (; it < opts.max_iter; ++it) {
                if (converged(r1, r2, w)) { ok = true; break; }
                const PartialMoments pm =
                    detail::indicator_moments(fr.A_of(h), fr.B_of(w), fr.v);
                const double j11 = fr.coef * pm.p / fr.kappa;
                const double j12 = fr.coef * pm.m1;
                const double j21 = -fr.coef * pm.m1 / fr.kappa;
                const double j22 = rho * fr.ev - fr.coef * pm.m2;
                const double det = j11 * j22 - j12 * j21;
                if (!(std::abs(det) > 1e-300)) break;
                const double dh = (-r1 * j22 + r2 * j12) / det;
                const double dw = (-r2 * j11 + r1 * j21) / det;
                double step = 1.0;
                bool improved = false;
                for (int k = 0; k < 40; ++k, step *= 0.5) {
                    const auto [t1, t2] = resid(h + step * dh, w + step * dw);
                    const double tn = std::hypot(t1, t2);
                    if (std::isfinite(tn) && tn <= (1.0 - 1e-4 * step) * nrm) {
                        h += step * dh;
                        w += step * dw;
                        r1 = t1; r2 = t2; nrm = tn;
                        improved = true;
                        break;
                    }
                }
                if (!improved) break;
            }
            sol.iterations = it;
            if (ok) sol.method = "newton";
        }

        if (!ok) {
            // Nested bisection.  Inner stage: the state equation is strictly
            // increasing in h wherever it can hold, so bracket and bisect.
            const auto solve_h = [&](double w_fix) {
                double lo = h_lin, hi = h_lin;
                double step = std::max(1.0, std::abs(h_lin));
                while (resid(lo, w_fix).first > 0.0) { lo -= step; step *= 2.0; }
                step = std::max(1.0, std::abs(h_lin));
                while (resid(hi, w_fix).first < 0.0) { hi += step; step *= 2.0; }
                for (int k = 0; k < 200; ++k) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid == lo || mid == hi) break;
                    (resid(mid, w_fix).first < 0.0 ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            };
            // Outer stage: after eliminating h the pricing residual is
            // strictly increasing in w and negative at the lower bound.
            double wlo = std::max(sol.w_lower, 1e-12);
            int guard = 0;
            while (resid(solve_h(wlo), wlo).second > 0.0 && guard++ < 60) wlo *= 0.5;
            double whi = std::max({2.0 * wlo, w_lin, 1.0});
            guard = 0;
            while (resid(solve_h(whi), whi).second < 0.0) {
                whi *= 2.0;
                if (++guard > 200)
                    throw std::runtime_error("fixed-point solve failed: pricing equation never crossed zero");
            }
            int it = 0;
            for (; it < 200; ++it) {
                const double mid = 0.5 * (wlo + whi);
                if (mid == wlo || mid == whi) break;
                (resid(solve_h(mid), mid).second < 0.0 ? wlo : whi) = mid;
            }
            w = 0.5 * (wlo + whi);
            h = solve_h(w);
            const auto [r1, r2] = resid(h, w);
            // The bisection bottoms out at machine precision on (h, w); accept
            // on a residual test relaxed to the attainable scale.
            if (!(std::abs(r1) <= 1e-9 * scale1 && std::abs(r2) <= 1e-9 * std::max(1.0, rho * fr.ev * std::abs(w))))
                throw std::runtime_error("fixed-point solve did not converge");
            ok = true;
            sol.iterations += it;
            sol.method = sol.method.empty() ? "bisection" : sol.method + "+bisection";
            if (sol.method == "bisection" && opts.method == EmbedMethod::Newton)
                sol.method = "newton+bisection";
        }

        sol.h = h;
        sol.w = w;
    }

    sol.h_scaled = rho * sol.h;
    sol.w_scaled = rho * sol.w;
    sol.A = fr.A_of(sol.h);
    sol.B = fr.B_of(sol.w);
    if (sol.B != 0.0) {
        const double ratio = -sol.A / sol.B;
        if (ratio > 0.0) sol.kink = ratio;
    }
    {
        const AffinePlusMoments m = affine_plus_moments(sol.A, sol.B, fr.v);
        sol.e1 = m.plain;
        sol.e2 = m.tilted;
    }

    // Independent residual check by quadrature, kink-aware.
    const double A = sol.A, B = sol.B;
    const double q1 = lognormal_expectation(
        [A, B](double m) { return std::max(A + B * m, 0.0); }, fr.v,
        opts.quad_nodes, sol.kink > 0.0 ? sol.kink : -1.0);
    const double q2 = lognormal_expectation(
        [A, B](double m) { return m * std::max(A + B * m, 0.0); }, fr.v,
        opts.quad_nodes, sol.kink > 0.0 ? sol.kink : -1.0);
    sol.resid_state = std::abs(fr.coef * q1 - fr.kz);
    sol.resid_price =
        std::abs(sol.w * rho * fr.ev - rho * fr.cash - fr.tez - fr.coef * q2);
    return sol;
}

// Scaled terminal auxiliary state implied by the fixed point, as a function
// of the horizon martingale ratio m = Lambda_T / Lambda_t.
inline double scaled_terminal_state(const EmbedSolution& sol, double m) {
    return sol.coef * std::max(sol.A + sol.B * m, 0.0);
}

// Closed-form margin for the kink-free regime with a constant floor:
// nonnegative exactly when the kernel never changes sign.
inline double linear_regime_margin(const Market& mkt, double theta,
                                   const ZetaModel& zeta, const Penalty& pen,
                                   const GameAnchor& a) {
    detail::check_theta(theta);
    detail::check_penalty(pen);
    detail::check_anchor(mkt, a);
    if (!zeta.is_constant())
        throw std::invalid_argument("closed-form margin needs a constant floor");
    const double T = mkt.horizon();
    const double ev = std::exp(mkt.int_vartheta_sq(a.t, T));
    return zeta.kappa() * a.z / theta * ev -
           (pen.c - a.x * mkt.growth(a.t, T) + zeta.a() / pen.rho);
}

// Investment strategy carried by the fixed point, evaluated at (s, X_s,
// Lambda_s).  The two horizon expectations are tilted by the martingale; by
// default they are computed with the kink-split quadrature, the closed
// lognormal forms serve as a cross-check.
inline double pi_terminal_scaled(const Market& mkt, const ZetaModel& zeta,
                                 const Penalty& pen, const EmbedSolution& sol,
                                 const GameAnchor& anchor, double s, double x_s,
                                 double lambda_s, int quad_nodes = 48,
                                 bool use_quadrature = true) {
    detail::check_penalty(pen);
    const double T = mkt.horizon();
    const double Rs = mkt.int_rate(s, T);
    const double vs = mkt.int_vartheta_sq(s, T);
    const double vt = mkt.vartheta(s);
    const double ell = lambda_s / anchor.lambda;
    const double A = sol.A, Bl = sol.B * ell;

    double tilde_kz, tail_m2;
    if (use_quadrature) {
        double kink = -1.0;
        if (Bl != 0.0 && -A / Bl > 0.0) kink = -A / Bl;
        tilde_kz = sol.coef * lognormal_expectation(
            [A, Bl](double m) { return m * std::max(A + Bl * m, 0.0); }, vs,
            quad_nodes, kink);
        tail_m2 = lognormal_expectation(
            [A, Bl](double m) { return A + Bl * m > 0.0 ? m * m : 0.0; }, vs,
            quad_nodes, kink);
    } else {
        tilde_kz = sol.coef * affine_plus_moments(A, Bl, vs).tilted;
        tail_m2 = detail::indicator_moments(A, Bl, vs).m2;
    }
    const double keta = -vt * ell * sol.coef * sol.B * tail_m2;

    const double drive = pen.rho * pen.c - pen.rho * x_s * std::exp(Rs) +
                         zeta.tilde_mean(mkt, s, lambda_s) + tilde_kz;
    return std::exp(-Rs) / (pen.rho * mkt.sigma(s)) *
           (drive * vt + zeta.tilde_eta(mkt, s, lambda_s) + keta);
}

} // namespace smmv

#endif // SMMV_CT_GAME_HPP
