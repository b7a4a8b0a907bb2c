#ifndef SMMV_QUADRATURE_HPP
#define SMMV_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace smmv {

inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// erfc-based for full relative accuracy in both tails.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre on [-1,1], Newton iteration on the recurrence.
inline QuadRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
    QuadRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return r;
}

// Gauss-Hermite with weight exp(-x^2), Newton iteration.
inline QuadRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    QuadRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double pim4 = 0.75112554446494248286; // pi^{-1/4}
    const int m = (n + 1) / 2;
    double x = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
        else if (i == 2)
            x = 1.86 * x - 0.86 * r.nodes[0];
        else if (i == 3)
            x = 1.91 * x - 0.91 * r.nodes[1];
        else
            x = 2.0 * x - r.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = x * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = x;
        r.nodes[n - 1 - i] = -x;
        r.weights[i] = 2.0 / (pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return r;
}

namespace detail {

inline const QuadRule& cached_gh(int n) {
    thread_local std::map<int, QuadRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_hermite(n)).first;
    return it->second;
}

inline const QuadRule& cached_gl(int n) {
    thread_local std::map<int, QuadRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
    return it->second;
}

} // namespace detail

// E[g(M)] for M = exp(-y*sqrt(v) - v/2), y standard normal, so E[M] = 1.
// Smooth integrands go through Gauss-Hermite on the whole line. If the
// integrand has a kink in M, pass the kink location: the y-axis is then
// split there and each side integrated with Gauss-Legendre, which restores
// spectral accuracy.
inline double lognormal_expectation(const std::function<double(double)>& g, double v, int n,
                                    double kink_m = -1.0) {
    if (!(v >= 0.0)) throw std::invalid_argument("lognormal_expectation: need v >= 0");
    if (v == 0.0) return g(1.0);
    const double sv = std::sqrt(v);
    if (kink_m <= 0.0) {
        const QuadRule& r = detail::cached_gh(n);
        const double inv_sqrt_pi = 0.56418958354775628695;
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double y = 1.41421356237309504880 * r.nodes[i];
            s += r.weights[i] * g(std::exp(-y * sv - 0.5 * v));
        }
        return s * inv_sqrt_pi;
    }
    const double ystar = (-std::log(kink_m) - 0.5 * v) / sv;
    const double ymax = 12.5;
    const QuadRule& r = detail::cached_gl(n);
    auto segment = [&](double a, double b) {
        if (b <= a) return 0.0;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double y = mid + half * r.nodes[i];
            s += r.weights[i] * normal_pdf(y) * g(std::exp(-y * sv - 0.5 * v));
        }
        return s * half;
    };
    const double lo = std::min(std::max(ystar, -ymax), ymax);
    return segment(-ymax, lo) + segment(lo, ymax);
}

// Restricted moments of the unit-mean lognormal M over {M > m*} (or the
// whole line when mstar <= 0): P, E[M 1], E[M^2 1].
struct PartialMoments {
    double p;
    double m1;
    double m2;
};

inline PartialMoments lognormal_partial_moments(double mstar, double v) {
    if (!(v > 0.0)) {
        // Degenerate M = 1 a.s.
        const double in = (mstar < 1.0) ? 1.0 : 0.0;
        return {in, in, in};
    }
    if (mstar <= 0.0) return {1.0, 1.0, std::exp(v)};
    const double sv = std::sqrt(v);
    const double ystar = (-std::log(mstar) - 0.5 * v) / sv;
    return {normal_cdf(ystar), normal_cdf(ystar + sv), std::exp(v) * normal_cdf(ystar + 2.0 * sv)};
}

// E[(A + B*M)_+] and E[M*(A + B*M)_+] in closed form.
struct AffinePlusMoments {
    double plain;  // E[(A+BM)_+]
    double tilted; // E[M (A+BM)_+]
};

inline AffinePlusMoments affine_plus_moments(double A, double B, double v) {
    if (B == 0.0) {
        const double a = std::max(A, 0.0);
        return {a, a};
    }
    const double mstar = -A / B;
    if (B > 0.0) {
        PartialMoments pm = lognormal_partial_moments(mstar, v);
        return {A * pm.p + B * pm.m1, A * pm.m1 + B * pm.m2};
    }
    // B < 0: positive on {M < m*}; complement the restricted moments.
    if (mstar <= 0.0) return {0.0, 0.0};
    PartialMoments hi = lognormal_partial_moments(mstar, v);
    PartialMoments pm{1.0 - hi.p, 1.0 - hi.m1, std::exp(v) - hi.m2};
    return {A * pm.p + B * pm.m1, A * pm.m1 + B * pm.m2};
}

// Undiscounted Black-Scholes call on a forward x with total variance v:
// E[(x*M' - K)_+] for a unit-mean lognormal M' with log-variance v.
inline double bs_call(double x, double K, double v) {
    if (!(x > 0.0) || !(K > 0.0)) {
        if (K <= 0.0) return x - K;
        return std::max(x - K, 0.0);
    }
    if (v <= 0.0) return std::max(x - K, 0.0);
    const double sv = std::sqrt(v);
    const double dp = (std::log(x / K) + 0.5 * v) / sv;
    return x * normal_cdf(dp) - K * normal_cdf(dp - sv);
}

} // namespace smmv

#endif
