#ifndef SMMV_CT_MARKET_HPP
#define SMMV_CT_MARKET_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace smmv {

// Deterministic time curve, piecewise linear through a list of (time, value)
// knots and clamped flat outside them. Integrals are exact per piece, which
// keeps the exponential weights exp(int r) and exp(int vartheta^2) free of
// quadrature error.
class Curve {
public:
    explicit Curve(std::vector<std::pair<double, double>> knots)
        : k_(std::move(knots)) {
        if (k_.empty()) throw std::invalid_argument("Curve: need at least one knot");
        for (std::size_t i = 0; i < k_.size(); ++i) {
            if (!std::isfinite(k_[i].first) || !std::isfinite(k_[i].second))
                throw std::invalid_argument("Curve: knots must be finite");
            if (i > 0 && !(k_[i].first > k_[i - 1].first))
                throw std::invalid_argument("Curve: knot times must be strictly increasing");
        }
    }

    static Curve constant(double v) { return Curve({{0.0, v}}); }

    const std::vector<std::pair<double, double>>& knots() const { return k_; }

    double operator()(double t) const {
        if (t <= k_.front().first) return k_.front().second;
        if (t >= k_.back().first) return k_.back().second;
        std::size_t i = 1;
        while (k_[i].first < t) ++i;
        const auto& [ta, va] = k_[i - 1];
        const auto& [tb, vb] = k_[i];
        return va + (vb - va) * (t - ta) / (tb - ta);
    }

    double min_value() const {
        double m = k_.front().second;
        for (const auto& kn : k_) m = std::min(m, kn.second);
        return m;
    }

    // int_{t0}^{t1} of the curve, its square, and its absolute value. All
    // three walk the affine pieces and use the exact per-piece primitives.
    double integral(double t0, double t1) const {
        return accumulate(t0, t1, [](double v0, double v1, double dt) {
            return 0.5 * (v0 + v1) * dt;
        });
    }

    double integral_sq(double t0, double t1) const {
        return accumulate(t0, t1, [](double v0, double v1, double dt) {
            return (v0 * v0 + v0 * v1 + v1 * v1) * dt / 3.0;
        });
    }

    double integral_abs(double t0, double t1) const {
        return accumulate(t0, t1, [](double v0, double v1, double dt) {
            if (v0 * v1 >= 0.0) return std::abs(0.5 * (v0 + v1) * dt);
            const double s = v0 / (v0 - v1); // sign change inside the piece
            return 0.5 * dt * (std::abs(v0) * s + std::abs(v1) * (1.0 - s));
        });
    }

private:
    template <class Piece>
    double accumulate(double t0, double t1, Piece piece) const {
        if (t1 < t0) throw std::invalid_argument("Curve: integration bounds reversed");
        double sum = 0.0;
        double x0 = t0;
        double v0 = (*this)(x0);
        for (const auto& kn : k_) {
            if (kn.first <= x0) continue;
            if (kn.first >= t1) break;
            sum += piece(v0, kn.second, kn.first - x0);
            x0 = kn.first;
            v0 = kn.second;
        }
        sum += piece(v0, (*this)(t1), t1 - x0);
        return sum;
    }

    std::vector<std::pair<double, double>> k_;
};

// Single risky asset with deterministic rate r(t), volatility sigma(t) > 0
// and market price of risk vartheta(t) >= 0 on [0, T].
class Market {
public:
    Market(Curve r, Curve sigma, Curve vartheta, double T)
        : r_(std::move(r)), sigma_(std::move(sigma)),
          vartheta_(std::move(vartheta)), T_(T) {
        if (!(T_ > 0.0)) throw std::invalid_argument("Market: need T > 0");
        if (!(sigma_.min_value() > 1e-8))
            throw std::invalid_argument("Market: volatility must stay positive");
        if (vartheta_.min_value() < 0.0)
            throw std::invalid_argument("Market: price of risk must stay nonnegative");
    }

    double horizon() const { return T_; }
    double rate(double t) const { return r_(t); }
    double sigma(double t) const { return sigma_(t); }
    double vartheta(double t) const { return vartheta_(t); }

    // int_{t0}^{t1} r(s) ds
    double int_rate(double t0, double t1) const { return r_.integral(t0, t1); }
    double int_rate_abs(double t0, double t1) const { return r_.integral_abs(t0, t1); }

    // int_{t0}^{t1} vartheta(s)^2 ds; drives both the deflator variance and
    // every exponential weight in the closed forms.
    double int_vartheta_sq(double t0, double t1) const { return vartheta_.integral_sq(t0, t1); }

    double growth(double t0, double t1) const { return std::exp(int_rate(t0, t1)); }
    double discount(double t0, double t1) const { return std::exp(-int_rate(t0, t1)); }

private:
    Curve r_;
    Curve sigma_;
    Curve vartheta_;
    double T_;
};

// Expected terminal wealth of the classical mean-variance optimum, which is
// also the completion constant of its feedback form:
//   c = x0 exp(int_0^T r) + (exp(int_0^T vartheta^2) - 1) / theta.
inline double mv_completion_level(const Market& mkt, double theta, double x0) {
    if (!(theta > 0.0)) throw std::invalid_argument("mv_completion_level: need theta > 0");
    const double v = mkt.int_vartheta_sq(0.0, mkt.horizon());
    return x0 * mkt.growth(0.0, mkt.horizon()) + (std::exp(v) - 1.0) / theta;
}

inline double mv_terminal_variance(const Market& mkt, double theta) {
    const double v = mkt.int_vartheta_sq(0.0, mkt.horizon());
    return (std::exp(v) - 1.0) / (theta * theta);
}

inline double mv_optimal_value(const Market& mkt, double theta, double x0) {
    const double v = mkt.int_vartheta_sq(0.0, mkt.horizon());
    return x0 * mkt.growth(0.0, mkt.horizon()) + (std::exp(v) - 1.0) / (2.0 * theta);
}

// Classical mean-variance feedback amount invested in the risky asset:
//   pi(t, x) = -(vartheta/sigma) (x e^{int_t^T r} - c - 1/theta) e^{-int_t^T r}.
inline double mv_feedback(const Market& mkt, double theta, double c, double t, double x) {
    const double gr = mkt.growth(t, mkt.horizon());
    return -(mkt.vartheta(t) / mkt.sigma(t)) * (x * gr - c - 1.0 / theta) / gr;
}

// Scaling floor zeta = a + b * Lambda_T written on the terminal deflator.
// b = 0 recovers the constant floor. Validation permits kappa = 0 (the
// affine-degenerate boundary); operations that divide by kappa reject it at
// the call site.
class ZetaModel {
public:
    ZetaModel(double a, double b) : a_(a), b_(b) {
        if (!(a_ >= 0.0) || !(b_ >= 0.0))
            throw std::invalid_argument("ZetaModel: coefficients must be nonnegative");
        if (a_ + b_ > 1.0)
            throw std::invalid_argument("ZetaModel: need a + b <= 1 for unit-mass headroom");
    }

    static ZetaModel constant(double z0) {
        if (!(z0 >= 0.0) || z0 >= 1.0)
            throw std::invalid_argument("ZetaModel: constant floor must lie in [0, 1)");
        return ZetaModel(z0, 0.0);
    }

    double a() const { return a_; }
    double b() const { return b_; }
    bool is_constant() const { return b_ == 0.0; }

    double terminal(double lambda_T) const { return a_ + b_ * lambda_T; }
    double mean() const { return a_ + b_; } // E[Lambda_T] = 1
    double kappa() const { return 1.0 - a_ - b_; }

    // E[zeta | F_t] given the deflator level; the deflator is a martingale.
    double cond_mean(double lambda_t) const { return a_ + b_ * lambda_t; }

    // Volatility loading of E[zeta | F_t], the eta in d E[zeta|F_t] = eta dW.
    double eta(const Market& mkt, double t, double lambda_t) const {
        return -b_ * lambda_t * mkt.vartheta(t);
    }

    // Deflator-weighted conditional mean E[zeta Lambda_T | F_t] / Lambda_t.
    double tilde_mean(const Market& mkt, double t, double lambda_t) const {
        const double ev = std::exp(mkt.int_vartheta_sq(t, mkt.horizon()));
        return a_ + b_ * lambda_t * ev;
    }

    double tilde_eta(const Market& mkt, double t, double lambda_t) const {
        const double ev = std::exp(mkt.int_vartheta_sq(t, mkt.horizon()));
        return -b_ * lambda_t * ev * mkt.vartheta(t);
    }

    double cond_sq(const Market& mkt, double t, double lambda_t) const {
        const double ev = std::exp(mkt.int_vartheta_sq(t, mkt.horizon()));
        return a_ * a_ + 2.0 * a_ * b_ * lambda_t + b_ * b_ * lambda_t * lambda_t * ev;
    }

    // Whether the floor sits below the terminal deflator almost surely, the
    // condition under which the classical optimum already solves the scaled
    // problem. With a noisy deflator the floor must vanish at zero, so only
    // the pure deflator multiples qualify.
    bool consistent_with(const Market& mkt) const {
        if (mkt.int_vartheta_sq(0.0, mkt.horizon()) == 0.0) return a_ + b_ <= 1.0;
        return a_ == 0.0;
    }

private:
    double a_;
    double b_;
};

} // namespace smmv

#endif
