#ifndef SMMV_STATIC_PORTFOLIO_HPP
#define SMMV_STATIC_PORTFOLIO_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "preference.hpp"
#include "probspace.hpp"
#include "qp.hpp"

namespace smmv {

// One-period market: n_assets risky returns over the states of a finite
// space plus a riskless rate.
struct StaticMarket {
    FiniteSpace space;
    Eigen::MatrixXd returns; // states x assets
    double rate = 0.0;

    StaticMarket(FiniteSpace sp, Eigen::MatrixXd R, double r)
        : space(std::move(sp)), returns(std::move(R)), rate(r) {
        if (returns.rows() != static_cast<Eigen::Index>(space.size()))
            throw std::invalid_argument("StaticMarket: return rows must match state count");
        if (returns.cols() < 1)
            throw std::invalid_argument("StaticMarket: need at least one asset");
    }

    Eigen::Index assets() const { return returns.cols(); }

    // Terminal wealth per unit of initial capital for weights alpha.
    std::vector<double> wealth(const Eigen::VectorXd& alpha) const {
        if (alpha.size() != assets())
            throw std::invalid_argument("StaticMarket: weight size mismatch");
        std::vector<double> x(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) {
            double ex = 0.0;
            for (Eigen::Index j = 0; j < assets(); ++j)
                ex += alpha(j) * (returns(i, j) - rate);
            x[i] = rate + ex;
        }
        return x;
    }

    Eigen::VectorXd mean_excess() const {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(assets());
        for (std::size_t i = 0; i < space.size(); ++i)
            for (Eigen::Index j = 0; j < assets(); ++j)
                m(j) += space.prob(i) * (returns(i, j) - rate);
        return m;
    }

    Eigen::MatrixXd covariance() const {
        const Eigen::Index na = assets();
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(na);
        for (std::size_t i = 0; i < space.size(); ++i)
            mean += space.prob(i) * returns.row(i).transpose();
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(na, na);
        for (std::size_t i = 0; i < space.size(); ++i) {
            Eigen::VectorXd d = returns.row(i).transpose() - mean;
            C += space.prob(i) * d * d.transpose();
        }
        return C;
    }
};

// Classical mean-variance weights (1 / (x theta)) Var[R]^{-1} E[R - r].
inline Eigen::VectorXd mv_weights(const StaticMarket& mkt, double theta, double x = 1.0) {
    if (!(theta > 0.0) || !(x > 0.0))
        throw std::invalid_argument("mv_weights: need theta > 0 and x > 0");
    Eigen::MatrixXd C = mkt.covariance();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
    if (!lu.isInvertible())
        throw std::invalid_argument("mv_weights: singular return covariance");
    return lu.solve(mkt.mean_excess()) / (x * theta);
}

struct FeasibilityReport {
    bool feasible = false;
    double violation = 0.0;
    std::optional<std::vector<double>> witness;
};

namespace detail {

inline QpProblem static_dual_qp(const StaticMarket& mkt, const std::vector<double>& zeta) {
    const std::size_t n = mkt.space.size();
    const Eigen::Index na = mkt.assets();
    QpProblem q;
    q.d.resize(n);
    q.g = Eigen::VectorXd::Zero(n);
    q.lo.resize(n);
    q.A.resize(1 + na, n);
    q.b = Eigen::VectorXd::Zero(1 + na);
    q.b(0) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        q.d(i) = 2.0 * mkt.space.prob(i); // objective is E[Y^2]
        q.lo(i) = zeta[i];
        q.A(0, i) = mkt.space.prob(i);
        for (Eigen::Index j = 0; j < na; ++j)
            q.A(1 + j, i) = mkt.space.prob(i) * (mkt.returns(i, j) - mkt.rate);
    }
    return q;
}

} // namespace detail

// Whether any density satisfies Y >= zeta, E[Y] = 1, E[(R - r) Y] = 0. A
// floor lying above the pricing densities empties this set, which is the
// structural failure mode of the scaled problem in incomplete-floor setups.
inline FeasibilityReport dual_feasible(const StaticMarket& mkt, const std::vector<double>& zeta) {
    QpProblem q = detail::static_dual_qp(mkt, zeta);
    FeasibilityReport rep;
    auto y = qp_feasible_point(q, &rep.violation);
    rep.feasible = y.has_value();
    if (y) rep.witness = std::vector<double>(y->data(), y->data() + y->size());
    return rep;
}

struct StaticSolution {
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    double value = 0.0;
    std::vector<double> dual_density; // optimal Y
    std::vector<bool> strict;         // states with Y > zeta
    double kkt_residual = 0.0;
    std::string method;               // "conditional-moments" or "affine-fit"
    int qp_iterations = 0;
};

namespace detail {

// Stationarity residual ||E[(R - r) Y]||_inf for the density induced by
// (alpha, lambda).
inline double stationarity_residual(const StaticMarket& mkt, double theta,
                                    const std::vector<double>& zeta,
                                    const Eigen::VectorXd& alpha, double lambda) {
    const std::vector<double> x = mkt.wealth(alpha);
    Eigen::VectorXd resid = Eigen::VectorXd::Zero(mkt.assets());
    for (std::size_t i = 0; i < mkt.space.size(); ++i) {
        const double y = zeta[i] + theta * std::max(lambda - x[i] - zeta[i] / theta, 0.0);
        for (Eigen::Index j = 0; j < mkt.assets(); ++j)
            resid(j) += mkt.space.prob(i) * (mkt.returns(i, j) - mkt.rate) * y;
    }
    return resid.lpNorm<Eigen::Infinity>();
}

// Recovery of the weights from the conditional moments on the strict event
// S = {Y > zeta}:
//   theta alpha = Var[R|S]^{-1} ( (E[(R-r) zeta] + kappa E[R-r|S]) / P(S)
//                                 - Cov[R, zeta | S] ).
inline std::optional<Eigen::VectorXd> recover_weights(const StaticMarket& mkt, double theta,
                                                      const std::vector<double>& zeta,
                                                      const std::vector<bool>& strict) {
    const Eigen::Index na = mkt.assets();
    const std::size_t n = mkt.space.size();
    double ps = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (strict[i]) ps += mkt.space.prob(i);
    if (ps <= 0.0) return std::nullopt;

    Eigen::VectorXd mean_s = Eigen::VectorXd::Zero(na);
    double zeta_mean_s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!strict[i]) continue;
        mean_s += (mkt.space.prob(i) / ps) * mkt.returns.row(i).transpose();
        zeta_mean_s += (mkt.space.prob(i) / ps) * zeta[i];
    }
    Eigen::MatrixXd var_s = Eigen::MatrixXd::Zero(na, na);
    Eigen::VectorXd cov_rz_s = Eigen::VectorXd::Zero(na);
    for (std::size_t i = 0; i < n; ++i) {
        if (!strict[i]) continue;
        Eigen::VectorXd d = mkt.returns.row(i).transpose() - mean_s;
        var_s += (mkt.space.prob(i) / ps) * d * d.transpose();
        cov_rz_s += (mkt.space.prob(i) / ps) * d * (zeta[i] - zeta_mean_s);
    }
    Eigen::VectorXd ezr = Eigen::VectorXd::Zero(na);
    double kappa = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        kappa -= mkt.space.prob(i) * zeta[i];
        for (Eigen::Index j = 0; j < na; ++j)
            ezr(j) += mkt.space.prob(i) * (mkt.returns(i, j) - mkt.rate) * zeta[i];
    }
    Eigen::VectorXd cond_excess = mean_s - Eigen::VectorXd::Constant(na, mkt.rate);
    Eigen::VectorXd rhs = (ezr + kappa * cond_excess) / ps - cov_rz_s;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(var_s);
    if (!lu.isInvertible()) return std::nullopt;
    return Eigen::VectorXd(lu.solve(rhs) / theta);
}

// Least-squares fit of the affine structure Y = theta (lambda - r) -
// theta <alpha, R - r> over the strict states.
inline std::optional<std::pair<Eigen::VectorXd, double>> affine_fit(
    const StaticMarket& mkt, double theta, const std::vector<double>& y,
    const std::vector<bool>& strict) {
    const Eigen::Index na = mkt.assets();
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < strict.size(); ++i)
        if (strict[i]) rows.push_back(i);
    if (rows.size() < static_cast<std::size_t>(na) + 1) return std::nullopt;
    Eigen::MatrixXd X(rows.size(), na + 1);
    Eigen::VectorXd rhs(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        X(k, 0) = 1.0;
        for (Eigen::Index j = 0; j < na; ++j)
            X(k, 1 + j) = mkt.returns(rows[k], j) - mkt.rate;
        rhs(k) = y[rows[k]];
    }
    Eigen::VectorXd coef = X.colPivHouseholderQr().solve(rhs);
    Eigen::VectorXd alpha = -coef.tail(na) / theta;
    const double lambda = coef(0) / theta + mkt.rate;
    return std::make_pair(alpha, lambda);
}

} // namespace detail

// Optimal weights for the scaled preference over static strategies, through
// the dual projection problem min E[Y^2] over pricing densities above the
// floor. Recovery goes through the conditional-moment identity first and
// falls back to fitting the affine shape of Y on the strict event; either
// way the result must pass a stationarity check.
inline StaticSolution smmv_solve(const StaticMarket& mkt, double theta,
                                 const std::vector<double>& zeta, double kkt_tol = 1e-9) {
    if (!(theta > 0.0)) throw std::invalid_argument("smmv_solve: need theta > 0");
    if (zeta.size() != mkt.space.size())
        throw std::invalid_argument("smmv_solve: zeta has wrong state count");
    Preference pref(mkt.space, theta, zeta); // validates zeta and properness data
    if (pref.properness() != Properness::Proper)
        throw std::invalid_argument("smmv_solve: scaling must satisfy E[zeta] < 1");

    QpProblem q = detail::static_dual_qp(mkt, zeta);
    QpResult qr = qp_solve_auto(q);
    if (qr.status == QpStatus::Infeasible)
        throw std::runtime_error("smmv_solve: no admissible density above the floor");
    if (qr.status != QpStatus::Optimal)
        throw std::runtime_error("smmv_solve: dual projection did not converge");

    StaticSolution sol;
    sol.qp_iterations = qr.iterations;
    sol.dual_density.assign(qr.y.data(), qr.y.data() + qr.y.size());
    sol.strict.resize(mkt.space.size());
    for (std::size_t i = 0; i < sol.strict.size(); ++i)
        sol.strict[i] = (sol.dual_density[i] - zeta[i] > 1e-12);

    auto finish = [&](const Eigen::VectorXd& alpha, const char* method) -> bool {
        const double lambda = pref.lambda_level(mkt.wealth(alpha));
        const double resid = detail::stationarity_residual(mkt, theta, zeta, alpha, lambda);
        if (resid <= kkt_tol) {
            sol.alpha = alpha;
            sol.lambda = lambda;
            sol.kkt_residual = resid;
            sol.method = method;
            sol.value = pref.value(mkt.wealth(alpha));
            return true;
        }
        return false;
    };

    if (auto alpha = detail::recover_weights(mkt, theta, zeta, sol.strict))
        if (finish(*alpha, "conditional-moments")) return sol;
    if (auto fit = detail::affine_fit(mkt, theta, sol.dual_density, sol.strict))
        if (finish(fit->first, "affine-fit")) return sol;
    throw std::runtime_error("smmv_solve: weight recovery failed the stationarity check");
}

// Multiplier-side quantities of the optimum: mu = theta * lambda and the
// slack beta = (theta X + zeta - theta lambda)_+, together with the
// decomposition and identity they satisfy.
struct KktQuantities {
    double mu = 0.0;
    std::vector<double> beta;
    double beta_variance = 0.0;
    // alpha = mv_weights + Var[R]^{-1} Cov[R, beta] / theta, reported as a gap
    double decomposition_gap = 0.0;
    double identity_lhs = 0.0; // theta <alpha, Cov[R, beta]>
    double identity_rhs = 0.0; // Var[beta] + E[beta (1 - zeta)]
    double stationarity = 0.0;
    double mass_residual = 0.0;
};

inline KktQuantities kkt_quantities(const StaticMarket& mkt, double theta,
                                    const std::vector<double>& zeta,
                                    const Eigen::VectorXd& alpha, double lambda) {
    KktQuantities k;
    k.mu = theta * lambda;
    const std::vector<double> x = mkt.wealth(alpha);
    const std::size_t n = mkt.space.size();
    k.beta.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        k.beta[i] = std::max(theta * x[i] + zeta[i] - theta * lambda, 0.0);
    k.beta_variance = mkt.space.variance(k.beta);

    Eigen::VectorXd cov_rb = Eigen::VectorXd::Zero(mkt.assets());
    const double bmean = mkt.space.mean(k.beta);
    Eigen::VectorXd rmean = Eigen::VectorXd::Zero(mkt.assets());
    for (std::size_t i = 0; i < n; ++i)
        rmean += mkt.space.prob(i) * mkt.returns.row(i).transpose();
    for (std::size_t i = 0; i < n; ++i)
        cov_rb += mkt.space.prob(i) * (k.beta[i] - bmean) *
                  (mkt.returns.row(i).transpose() - rmean);

    Eigen::VectorXd amv = mv_weights(mkt, theta);
    Eigen::MatrixXd C = mkt.covariance();
    Eigen::VectorXd decomposed = amv + C.fullPivLu().solve(cov_rb) / theta;
    k.decomposition_gap = (alpha - decomposed).lpNorm<Eigen::Infinity>();

    k.identity_lhs = theta * alpha.dot(cov_rb);
    double eb1z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        eb1z += mkt.space.prob(i) * k.beta[i] * (1.0 - zeta[i]);
    k.identity_rhs = k.beta_variance + eb1z;

    k.stationarity = detail::stationarity_residual(mkt, theta, zeta, alpha, lambda);
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        mass += mkt.space.prob(i) *
                (zeta[i] + theta * std::max(lambda - x[i] - zeta[i] / theta, 0.0));
    k.mass_residual = std::abs(mass - 1.0);
    return k;
}

// Projection of the pricing densities onto the floor: min E[Y^2] subject to
// Y >= zeta, E[Y] = 1, E[(R - r) Y] = 0. Infeasibility is reported, not
// thrown; it is a meaningful answer here.
struct RiskNeutralProjection {
    bool feasible = false;
    double violation = 0.0;       // best constraint residual when infeasible
    std::vector<double> density;  // minimizer when feasible
    double second_moment = 0.0;
};

inline RiskNeutralProjection risk_neutral_projection(const StaticMarket& mkt,
                                                     const std::vector<double>& zeta) {
    if (zeta.size() != mkt.space.size())
        throw std::invalid_argument("risk_neutral_projection: zeta has wrong state count");
    QpProblem q = detail::static_dual_qp(mkt, zeta);
    QpResult qr = qp_solve_auto(q);
    RiskNeutralProjection rep;
    if (qr.status == QpStatus::Infeasible) {
        rep.violation = qr.infeasibility;
        return rep;
    }
    if (qr.status != QpStatus::Optimal)
        throw std::runtime_error("risk_neutral_projection: active-set iteration did not converge");
    rep.feasible = true;
    rep.density.assign(qr.y.data(), qr.y.data() + qr.y.size());
    for (std::size_t i = 0; i < rep.density.size(); ++i)
        rep.second_moment += mkt.space.prob(i) * rep.density[i] * rep.density[i];
    return rep;
}

// Sign relations between the floored and the classical single-asset weights:
// both carry the sign of the mean excess return, and the floor never shrinks
// the position. The strict gap opens exactly when the optimal wealth leaves
// the coincidence region.
struct SignReport {
    double alpha = 0.0;
    double alpha_mv = 0.0;
    double mean_excess = 0.0;
    bool in_monotone_domain = false;
    bool ok = false;
};

inline SignReport sign_compare(const StaticMarket& mkt, double theta,
                               const std::vector<double>& zeta,
                               const StaticSolution& sol) {
    if (mkt.assets() != 1)
        throw std::invalid_argument("sign_compare: defined for a single risky asset");
    SignReport rep;
    rep.alpha = sol.alpha(0);
    rep.alpha_mv = mv_weights(mkt, theta)(0);
    rep.mean_excess = mkt.mean_excess()(0);
    Preference pref(mkt.space, theta, zeta);
    rep.in_monotone_domain = pref.in_acceptance_set(mkt.wealth(sol.alpha));
    const double tol = 1e-10;
    if (std::abs(rep.alpha) <= tol) {
        rep.ok = std::abs(rep.alpha_mv) <= tol;
    } else if (rep.alpha > 0.0) {
        rep.ok = rep.mean_excess >= -tol && rep.alpha_mv >= -tol &&
                 rep.alpha >= rep.alpha_mv - tol &&
                 (!rep.in_monotone_domain || std::abs(rep.alpha - rep.alpha_mv) <= 1e-8);
    } else {
        rep.ok = rep.mean_excess <= tol && rep.alpha_mv <= tol &&
                 rep.alpha <= rep.alpha_mv + tol &&
                 (!rep.in_monotone_domain || std::abs(rep.alpha - rep.alpha_mv) <= 1e-8);
    }
    return rep;
}

} // namespace smmv

#endif
