#pragma once

// Sequential quadratic programming for smooth inequality-constrained NLPs:
//
//   min f(z)   s.t.  c(z) <= 0,  lb <= z <= ub
//
// Damped-BFGS Hessian model, QP subproblems through `qp`, backtracking line
// search on the l1 merit function f + rho * ||max(c, 0)||_1. Gradients and
// constraint Jacobians are central finite differences with the same step
// policy as cost gradients. Bounds go to the QP natively, never as general
// inequality rows. Nonconvergence is a status, not an exception; evaluation
// failures inside a line-search probe reject the step instead of aborting.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "attain/detail/fd.hpp"
#include "attain/linalg.hpp"
#include "attain/model.hpp"
#include "attain/qp.hpp"

namespace attain {

struct NlpProblem {
    std::function<double(const Vec&)> objective;
    std::function<Vec(const Vec&)> inequality_constraints;  // c(z) <= 0; null when none
    std::size_t constraint_count = 0;
    BoxSet bounds;  // sides may be +-inf
    std::size_t dimension = 0;
};

enum class NlpStatus { converged, max_iter, line_search_failure, qp_infeasible };

inline const char* to_string(NlpStatus s) {
    switch (s) {
        case NlpStatus::converged: return "converged";
        case NlpStatus::max_iter: return "max_iter";
        case NlpStatus::line_search_failure: return "line_search_failure";
        case NlpStatus::qp_infeasible: return "qp_infeasible";
    }
    return "?";
}

struct NlpSolution {
    Vec z_star;
    double f_star = 0.0;
    Vec multipliers;        // inequality constraints
    Vec lower_multipliers;  // bound rows
    Vec upper_multipliers;
    double kkt_residual = std::numeric_limits<double>::infinity();
    double feasibility_residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    NlpStatus status = NlpStatus::max_iter;
    bool initial_point_projected = false;
    std::string note;
};

struct SqpTraceRow {
    int iteration;
    double objective;
    double merit;
    double step_length;
    double kkt_residual;
};

struct NlpKktReport {
    double stationarity = 0.0;
    double complementarity = 0.0;
    double feasibility = 0.0;

    double kkt_residual() const { return std::max(stationarity, complementarity); }
};

/// KKT residuals recomputed from scratch at (z, multipliers); independent of
/// any solver state, so converged results can be audited.
inline NlpKktReport nlp_kkt_report(const NlpProblem& nlp, const Vec& z, const Vec& lambda,
                                   const Vec& mu_lower, const Vec& mu_upper, double fd_scale) {
    NlpKktReport rep;
    Vec stat = detail::fd_gradient(nlp.objective, z, fd_scale);

    Vec c;
    if (nlp.constraint_count > 0) {
        c = nlp.inequality_constraints(z);
        const auto jac =
            detail::fd_jacobian(nlp.inequality_constraints, z, fd_scale, nlp.constraint_count);
        for (std::size_t i = 0; i < nlp.constraint_count; ++i) {
            for (std::size_t j = 0; j < z.size(); ++j) stat[j] += lambda[i] * jac[i][j];
            rep.feasibility = std::max(rep.feasibility, c[i]);
            rep.complementarity = std::max(rep.complementarity, std::abs(lambda[i] * c[i]));
        }
    }
    for (std::size_t j = 0; j < z.size() && j < nlp.bounds.size(); ++j) {
        const double lo = nlp.bounds.lower[j], hi = nlp.bounds.upper[j];
        if (std::isfinite(lo)) {
            stat[j] -= mu_lower[j];
            rep.feasibility = std::max(rep.feasibility, lo - z[j]);
            rep.complementarity = std::max(rep.complementarity, std::abs(mu_lower[j] * (lo - z[j])));
        }
        if (std::isfinite(hi)) {
            stat[j] += mu_upper[j];
            rep.feasibility = std::max(rep.feasibility, z[j] - hi);
            rep.complementarity = std::max(rep.complementarity, std::abs(mu_upper[j] * (z[j] - hi)));
        }
    }
    rep.feasibility = std::max(rep.feasibility, 0.0);
    rep.stationarity = linalg::inf_norm(stat);
    return rep;
}

/// Powell-damped BFGS. Blends y toward B s when the curvature condition
/// s'y >= 0.2 s'B s fails, which keeps the update positive definite even for
/// adversarial s'y < 0. Degenerate steps (||s|| < 1e-14) return B unchanged.
inline Matrix damped_bfgs_update(const Matrix& b, const Vec& s, const Vec& y_raw) {
    if (linalg::two_norm(s) < 1e-14) return b;
    const Vec bs = linalg::matvec(b, s);
    const double s_bs = linalg::dot(s, bs);
    if (!(s_bs > 0.0)) return b;

    double s_y = linalg::dot(s, y_raw);
    Vec y = y_raw;
    if (s_y < 0.2 * s_bs) {
        const double blend = 0.8 * s_bs / (s_bs - s_y);
        for (std::size_t j = 0; j < y.size(); ++j)
            y[j] = blend * y_raw[j] + (1.0 - blend) * bs[j];
        s_y = linalg::dot(s, y);  // equals 0.2 * s_bs up to roundoff
    }

    Matrix out = b;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) += y[i] * y[j] / s_y - bs[i] * bs[j] / s_bs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double sym = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = sym;
            out(j, i) = sym;
        }
#ifndef NDEBUG
    double diag_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(out(i, i)));
    assert(linalg::cholesky_regularized(out, 1e-13 * (1.0 + diag_scale), 1).has_value());
#endif
    return out;
}

namespace sqp_detail {

inline double l1_violation(const Vec& c) {
    double s = 0.0;
    for (double ci : c) s += std::max(0.0, ci);
    return s;
}

}  // namespace sqp_detail

inline NlpSolution solve_nlp(const NlpProblem& nlp, const Vec& z0, const SolverOptions& opts,
                             std::vector<SqpTraceRow>* trace = nullptr) {
    const std::size_t n = nlp.dimension;
    const std::size_t k = nlp.constraint_count;

    NlpSolution sol;
    Vec z = z0;
    if (nlp.bounds.size() == n) {
        Vec clipped = nlp.bounds.clip(z);
        if (clipped != z) {
            sol.initial_point_projected = true;
            sol.note = "initial point projected onto bounds";
            z = std::move(clipped);
        }
    }

    auto eval_constraints = [&](const Vec& at) -> Vec {
        return k > 0 ? nlp.inequality_constraints(at) : Vec{};
    };

    Matrix b_mat = Matrix::identity(n);
    double rho = 1.0;

    // Previous-iterate data for the Lagrangian-gradient BFGS pair.
    bool have_step = false;
    Vec s_prev, grad_prev, lambda_prev;
    std::vector<std::vector<double>> jac_prev;

    double f = nlp.objective(z);
    Vec c = eval_constraints(z);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        sol.iterations = iter + 1;

        const Vec grad = detail::fd_gradient(nlp.objective, z, opts.fd_step_scale);
        const auto jac = k > 0 ? detail::fd_jacobian(nlp.inequality_constraints, z,
                                                     opts.fd_step_scale, k)
                               : std::vector<std::vector<double>>{};

        if (have_step) {
            Vec y_new = grad;
            Vec y_old = grad_prev;
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    y_new[j] += lambda_prev[i] * jac[i][j];
                    y_old[j] += lambda_prev[i] * jac_prev[i][j];
                }
            }
            b_mat = damped_bfgs_update(b_mat, s_prev, linalg::subtract(y_new, y_old));
        }

        // QP subproblem in the step d.
        QpProblem qp;
        qp.H = b_mat;
        qp.g = grad;
        if (k > 0) {
            qp.A_ineq = Matrix(k, n);
            qp.b_ineq.assign(k, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < n; ++j) qp.A_ineq(i, j) = jac[i][j];
                qp.b_ineq[i] = -c[i];
            }
        }
        if (nlp.bounds.size() == n) {
            qp.bounds.lower.resize(n);
            qp.bounds.upper.resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                qp.bounds.lower[j] = nlp.bounds.lower[j] - z[j];
                qp.bounds.upper[j] = nlp.bounds.upper[j] - z[j];
            }
        }
        const QpSolution qps = solve_qp(qp, 1e-10);
        if (qps.status == QpStatus::infeasible) {
            sol.status = NlpStatus::qp_infeasible;
            sol.note = "QP subproblem infeasible, phase-1 residual " +
                       std::to_string(qps.phase1_residual);
            break;
        }
        if (qps.status == QpStatus::iteration_limit) {
            sol.status = NlpStatus::qp_infeasible;
            sol.note = "QP subproblem hit its iteration cap";
            break;
        }

        // Convergence test at the current iterate with fresh QP multipliers.
        double stationarity = 0.0, complementarity = 0.0, feasibility = 0.0;
        {
            Vec stat = grad;
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < n; ++j) stat[j] += qps.multipliers[i] * jac[i][j];
                feasibility = std::max(feasibility, c[i]);
                complementarity =
                    std::max(complementarity, std::abs(qps.multipliers[i] * c[i]));
            }
            for (std::size_t j = 0; j < n && j < nlp.bounds.size(); ++j) {
                if (std::isfinite(nlp.bounds.lower[j])) {
                    stat[j] -= qps.lower_multipliers[j];
                    feasibility = std::max(feasibility, nlp.bounds.lower[j] - z[j]);
                    complementarity = std::max(complementarity,
                                               std::abs(qps.lower_multipliers[j] *
                                                        (nlp.bounds.lower[j] - z[j])));
                }
                if (std::isfinite(nlp.bounds.upper[j])) {
                    stat[j] += qps.upper_multipliers[j];
                    feasibility = std::max(feasibility, z[j] - nlp.bounds.upper[j]);
                    complementarity = std::max(complementarity,
                                               std::abs(qps.upper_multipliers[j] *
                                                        (z[j] - nlp.bounds.upper[j])));
                }
            }
            feasibility = std::max(feasibility, 0.0);
            stationarity = linalg::inf_norm(stat);
        }
        const double kkt_residual = std::max(stationarity, complementarity);

        if (kkt_residual <= opts.kkt_tol && feasibility <= opts.feas_tol) {
            sol.status = NlpStatus::converged;
            sol.z_star = z;
            sol.f_star = f;
            sol.multipliers = qps.multipliers;
            sol.lower_multipliers = qps.lower_multipliers;
            sol.upper_multipliers = qps.upper_multipliers;
            sol.kkt_residual = kkt_residual;
            sol.feasibility_residual = feasibility;
            if (trace) trace->push_back({iter, f, f + rho * sqp_detail::l1_violation(c), 0.0,
                                         kkt_residual});
            return sol;
        }

        // Merit penalty keeps pace with the multipliers.
        double lambda_inf = std::max(linalg::inf_norm(qps.multipliers),
                                     std::max(linalg::inf_norm(qps.lower_multipliers),
                                              linalg::inf_norm(qps.upper_multipliers)));
        rho = std::max(rho, 2.0 * (lambda_inf + 1.0));

        const Vec& d = qps.d;
        const double viol0 = sqp_detail::l1_violation(c);
        const double merit0 = f + rho * viol0;
        const double descent = linalg::dot(grad, d) - rho * viol0;

        double alpha = 1.0;
        bool accepted = false;
        double f_trial = f;
        Vec c_trial, z_trial;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, alpha *= 0.5) {
            z_trial = z;
            linalg::axpy(alpha, d, z_trial);
            if (nlp.bounds.size() == n) z_trial = nlp.bounds.clip(z_trial);
            double merit_trial;
            try {
                f_trial = nlp.objective(z_trial);
                c_trial = eval_constraints(z_trial);
                merit_trial = f_trial + rho * sqp_detail::l1_violation(c_trial);
            } catch (const std::exception&) {
                continue;  // evaluation blew up; halve the step
            }
            if (!std::isfinite(merit_trial)) continue;
            if (merit_trial <= merit0 + 1e-4 * alpha * descent) {
                accepted = true;
                break;
            }
        }
        if (trace)
            trace->push_back({iter, f, merit0, accepted ? alpha : 0.0, kkt_residual});
        if (!accepted) {
            sol.status = NlpStatus::line_search_failure;
            sol.note = "no acceptable step after " + std::to_string(opts.max_backtracks) +
                       " halvings";
            break;
        }

        s_prev = linalg::subtract(z_trial, z);
        grad_prev = grad;
        jac_prev = jac;
        lambda_prev = qps.multipliers;
        have_step = true;

        z = std::move(z_trial);
        f = f_trial;
        c = std::move(c_trial);
    }

    if (sol.status == NlpStatus::max_iter || sol.status == NlpStatus::line_search_failure ||
        sol.status == NlpStatus::qp_infeasible) {
        sol.z_star = z;
        sol.f_star = f;
        if (sol.multipliers.size() != k) sol.multipliers.assign(k, 0.0);
        if (sol.lower_multipliers.size() != n) sol.lower_multipliers.assign(n, 0.0);
        if (sol.upper_multipliers.size() != n) sol.upper_multipliers.assign(n, 0.0);
        const auto rep = nlp_kkt_report(nlp, z, sol.multipliers, sol.lower_multipliers,
                                        sol.upper_multipliers, opts.fd_step_scale);
        sol.kkt_residual = rep.kkt_residual();
        sol.feasibility_residual = rep.feasibility;
    }
    return sol;
}

}  // namespace attain
