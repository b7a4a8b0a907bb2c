#ifndef SMMV_PROBSPACE_HPP
#define SMMV_PROBSPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace smmv {

// Finite probability space with strictly positive state weights.
// Random variables are plain vectors indexed by state; "almost surely"
// reduces to statewise on these spaces.
class FiniteSpace {
public:
    explicit FiniteSpace(std::vector<double> probs) : p_(std::move(probs)) {
        if (p_.empty())
            throw std::invalid_argument("FiniteSpace: empty state list");
        double sum = 0.0;
        for (double w : p_) {
            if (!(w > 0.0))
                throw std::invalid_argument("FiniteSpace: probabilities must be strictly positive");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("FiniteSpace: probabilities must sum to 1 within 1e-12");
        for (double& w : p_) w /= sum;
    }

    std::size_t size() const { return p_.size(); }
    const std::vector<double>& probs() const { return p_; }
    double prob(std::size_t i) const { return p_[i]; }

    double mean(const std::vector<double>& x) const {
        check(x);
        double s = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i) s += p_[i] * x[i];
        return s;
    }

    double variance(const std::vector<double>& x) const {
        const double m = mean(x);
        double s = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i) s += p_[i] * (x[i] - m) * (x[i] - m);
        return s;
    }

    double covariance(const std::vector<double>& x, const std::vector<double>& y) const {
        check(x);
        check(y);
        const double mx = mean(x), my = mean(y);
        double s = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i) s += p_[i] * (x[i] - mx) * (y[i] - my);
        return s;
    }

    // P(x <= c), non-strict.
    double cdf_at(const std::vector<double>& x, double c) const {
        check(x);
        double s = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i)
            if (x[i] <= c) s += p_[i];
        return s;
    }

    double prob_lt(const std::vector<double>& x, double c) const {
        check(x);
        double s = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i)
            if (x[i] < c) s += p_[i];
        return s;
    }

    double essinf(const std::vector<double>& x) const {
        check(x);
        return *std::min_element(x.begin(), x.end());
    }

    double esssup(const std::vector<double>& x) const {
        check(x);
        return *std::max_element(x.begin(), x.end());
    }

private:
    void check(const std::vector<double>& x) const {
        if (x.size() != p_.size())
            throw std::invalid_argument("FiniteSpace: random variable has wrong state count");
    }

    std::vector<double> p_;
};

} // namespace smmv

#endif
