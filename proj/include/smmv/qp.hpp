#ifndef SMMV_QP_HPP
#define SMMV_QP_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace smmv {

// Convex QP with diagonal Hessian and lower bounds:
//   minimize  1/2 sum_i d_i y_i^2 + sum_i g_i y_i
//   subject to A y = b,  y >= lo
// with all d_i > 0 and few equality rows. Solved by a primal active-set
// method; the working-set subproblems reduce to an m x m solve.
struct QpProblem {
    Eigen::VectorXd d;
    Eigen::VectorXd g;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd lo;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct QpResult {
    QpStatus status = QpStatus::IterationLimit;
    Eigen::VectorXd y;
    Eigen::VectorXd nu;          // equality multipliers
    Eigen::VectorXd mu;          // bound multipliers (zero off the active set)
    double infeasibility = 0.0;  // phase-1 residual when infeasible
    int iterations = 0;
};

namespace detail {

// Phase-1 simplex with Bland's rule on the shifted problem A u = c, u >= 0.
// Returns the residual min sum(artificials); fills u on success.
inline double phase1_simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                             Eigen::VectorXd& u) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    Eigen::MatrixXd T(m, n + m);
    Eigen::VectorXd rhs = c;
    T.leftCols(n) = A;
    T.rightCols(m).setIdentity();
    for (int i = 0; i < m; ++i) {
        if (rhs(i) < 0.0) {
            T.row(i) = -T.row(i);
            T(i, n + i) = 1.0; // keep the artificial column positive
            rhs(i) = -rhs(i);
        }
    }
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;
    // Reduced costs of min sum of artificials.
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + m);
    cost.tail(m).setOnes();
    Eigen::VectorXd red = cost;
    for (int i = 0; i < m; ++i) red -= T.row(i).transpose();
    const double tol = 1e-11;
    const int max_iter = 200 * (n + m);
    for (int it = 0; it < max_iter; ++it) {
        int enter = -1;
        for (int j = 0; j < n + m; ++j) {
            if (red(j) < -tol) { enter = j; break; } // Bland: smallest index
        }
        if (enter < 0) break;
        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (T(i, enter) > tol) {
                const double ratio = rhs(i) / T(i, enter);
                if (ratio < best - 1e-15 ||
                    (ratio < best + 1e-15 && (leave < 0 || basis[i] < basis[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) break; // unbounded cannot happen with artificials; bail out
        const double piv = T(leave, enter);
        T.row(leave) /= piv;
        rhs(leave) /= piv;
        for (int i = 0; i < m; ++i) {
            if (i != leave && T(i, enter) != 0.0) {
                const double f = T(i, enter);
                T.row(i) -= f * T.row(leave);
                rhs(i) -= f * rhs(leave);
            }
        }
        const double fr = red(enter);
        red -= fr * T.row(leave).transpose();
        basis[leave] = enter;
    }
    // Leftover artificial mass is the infeasibility of the original system.
    double obj = 0.0;
    u = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n)
            u(basis[i]) = rhs(i);
        else
            obj += rhs(i);
    }
    return obj;
}

} // namespace detail

// Finds a feasible point of {A y = b, y >= lo} or reports the residual
// infeasibility measure (phase-1 optimum).
inline std::optional<Eigen::VectorXd> qp_feasible_point(const QpProblem& q,
                                                        double* violation = nullptr) {
    Eigen::VectorXd c = q.b - q.A * q.lo;
    Eigen::VectorXd u;
    const double resid = detail::phase1_simplex(q.A, c, u);
    if (violation) *violation = resid;
    if (resid > 1e-9) return std::nullopt;
    return Eigen::VectorXd(u + q.lo);
}

// Primal active-set iteration from a feasible start. Ties on both
// activation and removal are broken toward the smallest index, which also
// rules out cycling in the degenerate cases the random tests produce.
inline QpResult qp_solve(const QpProblem& q, const Eigen::VectorXd& start) {
    const int n = static_cast<int>(q.d.size());
    const int m = static_cast<int>(q.A.rows());
    for (int i = 0; i < n; ++i)
        if (!(q.d(i) > 0.0)) throw std::invalid_argument("qp_solve: Hessian must be positive");

    QpResult res;
    res.y = start;
    res.nu = Eigen::VectorXd::Zero(m);
    res.mu = Eigen::VectorXd::Zero(n);

    const double act_tol = 1e-11;
    std::vector<bool> active(n, false);
    for (int i = 0; i < n; ++i) active[i] = (res.y(i) - q.lo(i) <= act_tol);

    const int max_iter = 50 * (n + m) + 100;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        // Equality-constrained subproblem on the free variables.
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
        Eigen::VectorXd rhs = q.b;
        for (int i = 0; i < n; ++i) {
            if (active[i]) {
                rhs -= q.A.col(i) * q.lo(i);
            } else {
                S += q.A.col(i) * q.A.col(i).transpose() / q.d(i);
                rhs += q.A.col(i) * (q.g(i) / q.d(i));
            }
        }
        Eigen::VectorXd nu = S.fullPivLu().solve(rhs);
        Eigen::VectorXd ytar(n);
        for (int i = 0; i < n; ++i) {
            if (active[i]) {
                ytar(i) = q.lo(i);
            } else {
                ytar(i) = (q.A.col(i).dot(nu) - q.g(i)) / q.d(i);
            }
        }
        const double move = (ytar - res.y).lpNorm<Eigen::Infinity>();
        if (move <= 1e-12) {
            // Optimality check on the working set.
            res.nu = nu;
            int drop = -1;
            double worst = -1e-10;
            for (int i = 0; i < n; ++i) {
                if (!active[i]) { res.mu(i) = 0.0; continue; }
                const double mu_i = q.d(i) * q.lo(i) + q.g(i) - q.A.col(i).dot(nu);
                res.mu(i) = mu_i;
                if (mu_i < worst) { worst = mu_i; drop = i; break; } // smallest index first
            }
            if (drop < 0) {
                res.status = QpStatus::Optimal;
                for (int i = 0; i < n; ++i)
                    if (!active[i]) res.mu(i) = 0.0;
                return res;
            }
            active[drop] = false;
            continue;
        }
        // Step toward the subproblem solution, stopping at the first bound.
        double alpha = 1.0;
        int block = -1;
        for (int i = 0; i < n; ++i) {
            if (active[i]) continue;
            const double p = ytar(i) - res.y(i);
            if (p < -1e-15) {
                const double a = (q.lo(i) - res.y(i)) / p;
                if (a < alpha - 1e-15) {
                    alpha = a;
                    block = i;
                }
            }
        }
        res.y += alpha * (ytar - res.y);
        if (block >= 0) {
            res.y(block) = q.lo(block);
            active[block] = true;
        }
    }
    res.status = QpStatus::IterationLimit;
    return res;
}

// Full pipeline: feasibility, then active set from the phase-1 point (or a
// caller-provided start that is already feasible).
inline QpResult qp_solve_auto(const QpProblem& q,
                              const std::optional<Eigen::VectorXd>& start = std::nullopt) {
    if (start) return qp_solve(q, *start);
    double violation = 0.0;
    auto y0 = qp_feasible_point(q, &violation);
    if (!y0) {
        QpResult res;
        res.status = QpStatus::Infeasible;
        res.infeasibility = violation;
        return res;
    }
    return qp_solve(q, *y0);
}

} // namespace smmv

#endif
