#ifndef SMMV_PREFERENCE_HPP
#define SMMV_PREFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "probspace.hpp"
#include "qp.hpp"

namespace smmv {

// Classical mean-variance index E[f] - (theta/2) Var[f].
inline double mv_value(const FiniteSpace& sp, const std::vector<double>& f, double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("mv_value: need theta > 0");
    return sp.mean(f) - 0.5 * theta * sp.variance(f);
}

// Signed density of the mean-variance Gateaux derivative, 1 - theta*(f - E[f]).
// Goes negative exactly where the classical index loses monotonicity.
inline std::vector<double> mv_density(const FiniteSpace& sp, const std::vector<double>& f,
                                      double theta) {
    const double m = sp.mean(f);
    std::vector<double> y(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) y[i] = 1.0 - theta * (f[i] - m);
    return y;
}

enum class Properness { Proper, AffineDegenerate, Improper };

struct DualResult {
    std::vector<double> y;
    double value = 0.0;
    int iterations = 0;
};

// Scaled monotone mean-variance preference on a finite space. The scaling
// variable zeta >= 0 floors the admissible densities; kappa = 1 - E[zeta]
// measures how much mass the floor leaves free.
class Preference {
public:
    Preference(FiniteSpace space, double theta, std::vector<double> zeta)
        : sp_(std::move(space)), theta_(theta), zeta_(std::move(zeta)) {
        if (!(theta_ > 0.0)) throw std::invalid_argument("Preference: need theta > 0");
        if (zeta_.size() != sp_.size())
            throw std::invalid_argument("Preference: zeta has wrong state count");
        for (double z : zeta_)
            if (!(z >= 0.0)) throw std::invalid_argument("Preference: zeta must be nonnegative");
        kappa_ = 1.0 - sp_.mean(zeta_);
    }

    static Preference constant_zeta(FiniteSpace space, double theta, double z0) {
        std::vector<double> z(space.size(), z0);
        return Preference(std::move(space), theta, std::move(z));
    }

    const FiniteSpace& space() const { return sp_; }
    double theta() const { return theta_; }
    const std::vector<double>& zeta() const { return zeta_; }
    double kappa() const { return kappa_; }

    Properness properness() const {
        if (kappa_ > 0.0) return Properness::Proper;
        if (kappa_ == 0.0) return Properness::AffineDegenerate;
        return Properness::Improper;
    }

    // Threshold level lambda solving kappa/theta = lambda - E[(f + zeta/theta) ^ lambda].
    // The residual is piecewise linear and strictly increasing past essinf(g),
    // so the root is found exactly by scanning the sorted state values.
    double lambda_level(const std::vector<double>& f) const {
        require_proper();
        const std::vector<double> g = shifted(f);
        const std::size_t n = g.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return g[a] < g[b]; });
        const double target = kappa_ / theta_;
        // Candidate root on each segment: lambda * F_j - S_j = target with
        // F_j = P(g <= v_j), S_j = E[g; g <= v_j].
        double F = 0.0, S = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = idx[k];
            F += sp_.prob(i);
            S += sp_.prob(i) * g[i];
            while (k + 1 < n && g[idx[k + 1]] == g[i]) {
                ++k;
                F += sp_.prob(idx[k]);
                S += sp_.prob(idx[k]) * g[idx[k]];
            }
            const double cand = (target + S) / F;
            const double hi = (k + 1 < n) ? g[idx[k + 1]] : std::numeric_limits<double>::infinity();
            if (cand >= g[i] && cand <= hi) return cand;
        }
        throw std::runtime_error("lambda_level: root scan failed");
    }

    // Preference value through the truncation identity
    //   V(f) = MV(f ^ (lambda - zeta/theta)) + E[(f - truncation) * zeta].
    double value(const std::vector<double>& f) const {
        const double lam = lambda_level(f);
        std::vector<double> trunc(f.size());
        double extra = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            trunc[i] = std::min(f[i], lam - zeta_[i] / theta_);
            extra += sp_.prob(i) * (f[i] - trunc[i]) * zeta_[i];
        }
        return mv_value(sp_, trunc, theta_) + extra;
    }

    // Same value through the distributional form
    //   theta * int_{-inf}^{lambda} s P(g <= s) ds + E[f zeta] + (E[zeta^2] - 1) / (2 theta).
    double value_distributional(const std::vector<double>& f) const {
        const double lam = lambda_level(f);
        const std::vector<double> g = shifted(f);
        std::vector<std::size_t> idx(g.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return g[a] < g[b]; });
        // The cdf of g is a step function, so the integral of s*P(g <= s) up
        // to lambda is a sum of exact segment contributions.
        double integral = 0.0, F = 0.0, prev = g[idx.front()];
        for (std::size_t k = 0; k < idx.size();) {
            const double v = g[idx[k]];
            if (v > prev && F > 0.0) {
                const double hi = std::min(v, lam);
                if (hi > prev) integral += F * 0.5 * (hi * hi - prev * prev);
            }
            if (v >= lam) { prev = lam; break; }
            while (k < idx.size() && g[idx[k]] == v) {
                F += sp_.prob(idx[k]);
                ++k;
            }
            prev = v;
        }
        if (prev < lam) integral += F * 0.5 * (lam * lam - prev * prev);
        double efz = 0.0, ez2 = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            efz += sp_.prob(i) * f[i] * zeta_[i];
            ez2 += sp_.prob(i) * zeta_[i] * zeta_[i];
        }
        return theta_ * integral + efz + (ez2 - 1.0) / (2.0 * theta_);
    }

    // Density of the Gateaux derivative, zeta + theta*(lambda - f - zeta/theta)_+,
    // which is also the minimizing density of the dual problem.
    std::vector<double> gateaux_density(const std::vector<double>& f) const {
        const double lam = lambda_level(f);
        std::vector<double> y(f.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            y[i] = zeta_[i] + theta_ * std::max(lam - f[i] - zeta_[i] / theta_, 0.0);
        return y;
    }

    // Dual problem solved numerically:
    //   min E[Y f] + (E[Y^2] - 1) / (2 theta)  over  Y >= zeta, E[Y] = 1.
    // Starts from the signed mean-variance density when it happens to be
    // feasible, otherwise from the floor shifted up to unit mass.
    DualResult dual_qp(const std::vector<double>& f) const {
        require_proper();
        const std::size_t n = sp_.size();
        QpProblem q;
        q.d.resize(n);
        q.g.resize(n);
        q.lo.resize(n);
        q.A.resize(1, n);
        q.b.resize(1);
        q.b(0) = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            q.d(i) = sp_.prob(i) / theta_;
            q.g(i) = sp_.prob(i) * f[i];
            q.lo(i) = zeta_[i];
            q.A(0, i) = sp_.prob(i);
        }
        std::vector<double> mv = mv_density(sp_, f, theta_);
        Eigen::VectorXd start(n);
        bool mv_feasible = true;
        for (std::size_t i = 0; i < n; ++i)
            if (mv[i] < zeta_[i]) { mv_feasible = false; break; }
        for (std::size_t i = 0; i < n; ++i)
            start(i) = mv_feasible ? mv[i] : zeta_[i] + kappa_;
        QpResult qr = qp_solve(q, start);
        if (qr.status != QpStatus::Optimal)
            throw std::runtime_error("dual_qp: active-set iteration did not converge");
        DualResult out;
        out.y.assign(qr.y.data(), qr.y.data() + n);
        out.iterations = qr.iterations;
        double eyf = 0.0, ey2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            eyf += sp_.prob(i) * out.y[i] * f[i];
            ey2 += sp_.prob(i) * out.y[i] * out.y[i];
        }
        out.value = eyf + (ey2 - 1.0) / (2.0 * theta_);
        return out;
    }

    // Acceptance region test: f - E[f] <= (1 - zeta) / theta statewise.
    bool in_acceptance_set(const std::vector<double>& f, double tol = 1e-12) const {
        const double m = sp_.mean(f);
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[i] - m > (1.0 - zeta_[i]) / theta_ + tol) return false;
        return true;
    }

    std::vector<double> shifted(const std::vector<double>& f) const {
        if (f.size() != sp_.size())
            throw std::invalid_argument("Preference: payoff has wrong state count");
        std::vector<double> g(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) g[i] = f[i] + zeta_[i] / theta_;
        return g;
    }

private:
    void require_proper() const {
        if (!(kappa_ > 0.0))
            throw std::invalid_argument("Preference: scaling must satisfy E[zeta] < 1");
    }

    FiniteSpace sp_;
    double theta_;
    std::vector<double> zeta_;
    double kappa_;
};

// One-sided stability bounds for the threshold level under bump
// perturbations. Collected in one place because the four inequalities share
// all their ingredients.
struct LambdaBumpReport {
    double lambda_base = 0.0;
    double lambda_f_bumped = 0.0;   // payoff raised by eps on the event
    double lambda_zeta_bumped = 0.0; // floor raised by eps on the event
    double delta_f = 0.0;
    double delta_zeta = 0.0;
    double zeta_lower_bound = 0.0;  // -(eps/theta) P(A) / P(g <= lambda_bumped)
    double zeta_upper_bound = 0.0;  // (eps/theta) (1 - P(A))
};

inline LambdaBumpReport lambda_bump_report(const FiniteSpace& sp, const std::vector<double>& f,
                                           double theta, const std::vector<double>& zeta,
                                           const std::vector<bool>& event, double eps) {
    if (event.size() != sp.size())
        throw std::invalid_argument("lambda_bump_report: event has wrong state count");
    if (!(eps >= 0.0)) throw std::invalid_argument("lambda_bump_report: need eps >= 0");
    Preference base(sp, theta, zeta);
    LambdaBumpReport rep;
    rep.lambda_base = base.lambda_level(f);

    std::vector<double> fb = f;
    double pa = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (event[i]) {
            fb[i] += eps;
            pa += sp.prob(i);
        }
    }
    rep.lambda_f_bumped = base.lambda_level(fb);
    rep.delta_f = rep.lambda_f_bumped - rep.lambda_base;

    std::vector<double> zb = zeta;
    for (std::size_t i = 0; i < zeta.size(); ++i)
        if (event[i]) zb[i] += eps;
    Preference bumped(sp, theta, zb);
    if (bumped.properness() != Properness::Proper)
        throw std::invalid_argument("lambda_bump_report: bumped floor is no longer proper");
    rep.lambda_zeta_bumped = bumped.lambda_level(f);
    rep.delta_zeta = rep.lambda_zeta_bumped - rep.lambda_base;

    // Event in the denominator keeps the original floor; the level is the
    // bumped one.
    const std::vector<double> g = base.shifted(f);
    const double pg = sp.cdf_at(g, rep.lambda_zeta_bumped);
    rep.zeta_lower_bound = -(eps / theta) * (pg > 0.0 ? pa / pg : std::numeric_limits<double>::infinity());
    rep.zeta_upper_bound = (eps / theta) * (1.0 - pa);
    return rep;
}

} // namespace smmv

#endif
