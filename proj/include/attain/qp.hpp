#pragma once

// Dense convex QP solver for the subproblems one SQP iteration generates:
//
//   min  1/2 d'H d + g'd   s.t.  A d <= b,  lb <= d <= ub
//
// Primal active-set method. The working-set systems are solved through a
// Cholesky factor of H (regularized with tau*I when H is not numerically
// positive definite) and a Schur complement over the active rows. When the
// clipped origin violates the general rows, the same loop runs on an elastic
// reformulation min .. + M*s over (d, s) with rows relaxed to A d - b <= s
// and s >= 0, whose origin is trivially feasible; s driven to zero recovers
// the exact original solution, and a persistently positive s* is the
// infeasibility certificate. Constraint add/drop ties break on the smallest
// index, which also guards against cycling.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "attain/linalg.hpp"
#include "attain/model.hpp"

namespace attain {

struct QpProblem {
    Matrix H;        // m x m, symmetric
    Vec g;           // m
    Matrix A_ineq;   // k x m; rows a_i with a_i . d <= b_ineq_i; may be empty
    Vec b_ineq;      // k
    BoxSet bounds;   // on d; empty means unbounded

    std::size_t dimension() const { return g.size(); }
    std::size_t general_count() const { return b_ineq.size(); }
};

enum class QpStatus { optimal, infeasible, iteration_limit };

inline const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::optimal: return "optimal";
        case QpStatus::infeasible: return "infeasible";
        case QpStatus::iteration_limit: return "iteration_limit";
    }
    return "?";
}

/// Unified constraint indexing for active_set: [0, k) the general rows,
/// [k, k+m) lower bounds, [k+m, k+2m) upper bounds.
struct QpSolution {
    QpStatus status = QpStatus::optimal;
    Vec d;
    Vec multipliers;        // general rows, >= 0
    Vec lower_multipliers;  // bound rows, >= 0
    Vec upper_multipliers;  // bound rows, >= 0
    std::vector<std::size_t> active_set;
    int iterations = 0;
    double regularization = 0.0;   // tau added to diag(H), 0 when none
    double phase1_residual = 0.0;  // infeasibility certificate when status == infeasible
};

struct QpKktResiduals {
    double stationarity = 0.0;
    double primal_feasibility = 0.0;
    double dual_feasibility = 0.0;
    double complementarity = 0.0;

    double max_residual() const {
        return std::max(std::max(stationarity, primal_feasibility),
                        std::max(dual_feasibility, complementarity));
    }
};

/// Independent KKT audit of a returned solution (used by the solver's debug
/// self-check and by tests).
inline QpKktResiduals qp_kkt_residuals(const QpProblem& qp, const QpSolution& sol) {
    const std::size_t m = qp.dimension();
    const std::size_t k = qp.general_count();
    QpKktResiduals r;

    Vec stat = linalg::matvec(qp.H, sol.d);
    linalg::axpy(1.0, qp.g, stat);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < m; ++j) stat[j] += sol.multipliers[i] * qp.A_ineq(i, j);
    for (std::size_t j = 0; j < m && j < sol.lower_multipliers.size(); ++j)
        stat[j] -= sol.lower_multipliers[j];
    for (std::size_t j = 0; j < m && j < sol.upper_multipliers.size(); ++j)
        stat[j] += sol.upper_multipliers[j];
    r.stationarity = linalg::inf_norm(stat);

    for (std::size_t i = 0; i < k; ++i) {
        const double resid = linalg::dot(qp.A_ineq.row(i), sol.d) - qp.b_ineq[i];
        r.primal_feasibility = std::max(r.primal_feasibility, resid);
        r.dual_feasibility = std::max(r.dual_feasibility, -sol.multipliers[i]);
        r.complementarity = std::max(r.complementarity, std::abs(sol.multipliers[i] * resid));
    }
    for (std::size_t j = 0; j < qp.bounds.size(); ++j) {
        const double lo = qp.bounds.lower[j], hi = qp.bounds.upper[j];
        if (std::isfinite(lo)) {
            const double resid = lo - sol.d[j];
            r.primal_feasibility = std::max(r.primal_feasibility, resid);
            r.dual_feasibility = std::max(r.dual_feasibility, -sol.lower_multipliers[j]);
            r.complementarity =
                std::max(r.complementarity, std::abs(sol.lower_multipliers[j] * resid));
        }
        if (std::isfinite(hi)) {
            const double resid = sol.d[j] - hi;
            r.primal_feasibility = std::max(r.primal_feasibility, resid);
            r.dual_feasibility = std::max(r.dual_feasibility, -sol.upper_multipliers[j]);
            r.complementarity =
                std::max(r.complementarity, std::abs(sol.upper_multipliers[j] * resid));
        }
    }
    return r;
}

namespace qp_detail {

struct Row {
    Vec a;       // coefficient in the (possibly elastic-extended) space
    double b;
    std::size_t public_index;  // unified index; npos for internal rows
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct ActiveSetOutcome {
    QpStatus status = QpStatus::optimal;
    Vec v;
    Vec row_multipliers;  // one per row, >= 0 at optimum
    std::vector<std::size_t> working;
    int iterations = 0;
};

/// Primal active-set loop for strictly convex objectives. `lh` is the
/// Cholesky factor of the (regularized) Hessian; `v0` must satisfy every row.
inline ActiveSetOutcome active_set_loop(const Matrix& lh, const Vec& g,
                                        const std::vector<Row>& rows, Vec v0, int max_iter,
                                        double tol) {
    const std::size_t dim = g.size();
    ActiveSetOutcome out;
    out.v = std::move(v0);
    out.row_multipliers.assign(rows.size(), 0.0);

    std::vector<bool> in_working(rows.size(), false);
    std::vector<std::size_t> working;

    const double step_tol = std::max(1e-13, tol * 1e-2);
    const double drop_tol = std::max(1e-12, tol * 1e-3);

    for (int iter = 0; iter < max_iter; ++iter) {
        out.iterations = iter + 1;

        // grad = H v + g, through the factor to avoid storing H here.
        Vec grad = g;
        {
            // H v = L (L^T v)
            Vec tmp(dim, 0.0);
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t kk = i; kk < dim; ++kk) tmp[i] += lh(kk, i) * out.v[kk];
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t kk = 0; kk <= i; ++kk) grad[i] += lh(i, kk) * tmp[kk];
        }

        // Equality-constrained step on the working set, via the Schur
        // complement S = A_W H^{-1} A_W'.
        const Vec hinv_grad = linalg::cholesky_solve(lh, grad);
        Vec p(dim, 0.0);
        Vec nu;
        if (working.empty()) {
            for (std::size_t j = 0; j < dim; ++j) p[j] = -hinv_grad[j];
        } else {
            const std::size_t w = working.size();
            std::vector<Vec> hinv_a(w);
            for (std::size_t i = 0; i < w; ++i)
                hinv_a[i] = linalg::cholesky_solve(lh, rows[working[i]].a);
            Matrix schur(w, w);
            Vec rhs(w, 0.0);
            for (std::size_t i = 0; i < w; ++i) {
                for (std::size_t j = 0; j <= i; ++j) {
                    const double sij = linalg::dot(rows[working[i]].a, hinv_a[j]);
                    schur(i, j) = sij;
                    schur(j, i) = sij;
                }
                rhs[i] = -linalg::dot(rows[working[i]].a, hinv_grad);
            }
            const auto schur_fac = linalg::cholesky_regularized(schur, 1e-12);
            if (!schur_fac) {
                out.status = QpStatus::iteration_limit;  // degenerate working set
                return out;
            }
            nu = linalg::cholesky_solve(schur_fac->factor, rhs);
            // p = -H^{-1}(grad + A_W' nu)
            for (std::size_t j = 0; j < dim; ++j) p[j] = -hinv_grad[j];
            for (std::size_t i = 0; i < w; ++i) linalg::axpy(-nu[i], hinv_a[i], p);
        }

        // Stationarity threshold scales with the Newton-step magnitude: the
        // attainable |p| floor is eps * |H^{-1} grad| (big elastic penalties
        // push that well above any absolute tolerance).
        const double p_floor =
            std::max(step_tol * (1.0 + linalg::inf_norm(out.v)),
                     1e-13 * (1.0 + linalg::inf_norm(hinv_grad)));
        if (linalg::inf_norm(p) <= p_floor) {
            // Stationary on the working set; check multiplier signs.
            std::size_t drop = Row::npos;
            for (std::size_t i = 0; i < working.size(); ++i) {
                if (nu.size() > i && nu[i] < -drop_tol) {
                    if (drop == Row::npos || working[i] < working[drop]) drop = i;
                }
            }
            if (drop == Row::npos) {
                // Safeguard: refuse to certify a point that drifted off the
                // feasible set.
                double worst = 0.0;
                for (const auto& row : rows)
                    worst = std::max(worst, linalg::dot(row.a, out.v) - row.b);
                if (worst > 1e3 * std::max(tol, 1e-12) * (1.0 + linalg::inf_norm(out.v))) {
                    out.status = QpStatus::iteration_limit;
                    return out;
                }
                for (std::size_t i = 0; i < working.size(); ++i)
                    out.row_multipliers[working[i]] = std::max(0.0, nu.empty() ? 0.0 : nu[i]);
                out.working = working;
                out.status = QpStatus::optimal;
                return out;
            }
            in_working[working[drop]] = false;
            working.erase(working.begin() + static_cast<long>(drop));
            continue;
        }

        // Ratio test against rows outside the working set; smallest index
        // wins ties (cycling guard). The ascent threshold is relative to
        // ||a||*||p||: a row that is linearly dependent on the working set
        // has a'p at roundoff scale and must not be treated as blocking, or
        // duplicated constraints cycle forever.
        const double p_norm = linalg::inf_norm(p);
        double alpha = 1.0;
        std::vector<double> ratios(rows.size(), std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (in_working[r]) continue;
            const double ap = linalg::dot(rows[r].a, p);
            if (ap <= 1e-11 * (1.0 + linalg::inf_norm(rows[r].a)) * (1.0 + p_norm)) continue;
            const double slack = std::max(0.0, rows[r].b - linalg::dot(rows[r].a, out.v));
            ratios[r] = slack / ap;
            alpha = std::min(alpha, ratios[r]);
        }
        std::size_t blocking = Row::npos;
        for (std::size_t r = 0; r < rows.size() && blocking == Row::npos; ++r)
            if (ratios[r] <= alpha + 1e-14) blocking = r;

        linalg::axpy(alpha, p, out.v);
        if (blocking != Row::npos && alpha < 1.0) {
            in_working[blocking] = true;
            working.push_back(blocking);
        }
    }
    out.status = QpStatus::iteration_limit;
    return out;
}

inline std::vector<Row> build_rows(const QpProblem& qp, bool elastic) {
    const std::size_t m = qp.dimension();
    const std::size_t k = qp.general_count();
    const std::size_t dim = elastic ? m + 1 : m;
    std::vector<Row> rows;
    for (std::size_t i = 0; i < k; ++i) {
        Row r;
        r.a.assign(dim, 0.0);
        for (std::size_t j = 0; j < m; ++j) r.a[j] = qp.A_ineq(i, j);
        if (elastic) r.a[m] = -1.0;  // a.d - s <= b
        r.b = qp.b_ineq[i];
        r.public_index = i;
        rows.push_back(std::move(r));
    }
    for (std::size_t j = 0; j < qp.bounds.size(); ++j) {
        if (std::isfinite(qp.bounds.lower[j])) {
            Row r;
            r.a.assign(dim, 0.0);
            r.a[j] = -1.0;
            r.b = -qp.bounds.lower[j];
            r.public_index = k + j;
            rows.push_back(std::move(r));
        }
    }
    for (std::size_t j = 0; j < qp.bounds.size(); ++j) {
        if (std::isfinite(qp.bounds.upper[j])) {
            Row r;
            r.a.assign(dim, 0.0);
            r.a[j] = 1.0;
            r.b = qp.bounds.upper[j];
            r.public_index = k + m + j;
            rows.push_back(std::move(r));
        }
    }
    if (elastic) {
        Row r;  // -s <= 0
        r.a.assign(dim, 0.0);
        r.a[m] = -1.0;
        r.b = 0.0;
        r.public_index = Row::npos;
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void map_multipliers(const QpProblem& qp, const std::vector<Row>& rows,
                            const ActiveSetOutcome& outcome, QpSolution& sol) {
    const std::size_t m = qp.dimension();
    const std::size_t k = qp.general_count();
    sol.multipliers.assign(k, 0.0);
    sol.lower_multipliers.assign(m, 0.0);
    sol.upper_multipliers.assign(m, 0.0);
    sol.active_set.clear();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t pub = rows[r].public_index;
        if (pub == Row::npos) continue;
        const double lam = outcome.row_multipliers[r];
        if (pub < k)
            sol.multipliers[pub] = lam;
        else if (pub < k + m)
            sol.lower_multipliers[pub - k] = lam;
        else
            sol.upper_multipliers[pub - k - m] = lam;
    }
    for (std::size_t w : outcome.working) {
        if (rows[w].public_index != Row::npos) sol.active_set.push_back(rows[w].public_index);
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
}

/// Debug self-check: every optimal solve must satisfy the four KKT
/// conditions against the Hessian actually factorized (H + tau I).
inline void debug_check_kkt([[maybe_unused]] const QpProblem& qp,
                            [[maybe_unused]] const QpSolution& sol,
                            [[maybe_unused]] double tol) {
#ifndef NDEBUG
    if (sol.status != QpStatus::optimal) return;
    QpProblem solved = qp;
    for (std::size_t j = 0; j < solved.dimension(); ++j) solved.H(j, j) += sol.regularization;
    const auto r = qp_kkt_residuals(solved, sol);
    assert(r.max_residual() <= std::max(1e-6, 1e3 * tol) *
                                   (1.0 + linalg::inf_norm(sol.d) + linalg::inf_norm(qp.g)));
#endif
}

}  // namespace qp_detail

/// Solves the QP to KKT tolerance `tol`. `max_iter` of 0 picks a cap from
/// the problem size. Deterministic given identical inputs.
inline QpSolution solve_qp(const QpProblem& qp, double tol, int max_iter = 0) {
    using qp_detail::Row;
    const std::size_t m = qp.dimension();
    const std::size_t k = qp.general_count();

    double h_scale = 1.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) h_scale = std::max(h_scale, std::abs(qp.H(i, j)));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (std::abs(qp.H(i, j) - qp.H(j, i)) > 1e-10 * h_scale)
                throw std::invalid_argument("solve_qp: Hessian is not symmetric");

    QpSolution sol;
    const auto h_fac = linalg::cholesky_regularized(qp.H);
    if (!h_fac) throw std::invalid_argument("solve_qp: Hessian cannot be regularized");
    sol.regularization = h_fac->shift;

    // Regularized H actually used (keeps the self-check honest).
    Matrix h_used = qp.H;
    for (std::size_t j = 0; j < m; ++j) h_used(j, j) += h_fac->shift;

    Vec d0(m, 0.0);
    if (qp.bounds.size() == m) d0 = qp.bounds.clip(d0);

    bool need_elastic = false;
    for (std::size_t i = 0; i < k && !need_elastic; ++i)
        if (linalg::dot(qp.A_ineq.row(i), d0) > qp.b_ineq[i]) need_elastic = true;

    if (max_iter <= 0) max_iter = 100 + 30 * static_cast<int>(m + k + 2 * qp.bounds.size());

    if (!need_elastic) {
        const auto rows = qp_detail::build_rows(qp, false);
        auto outcome = qp_detail::active_set_loop(h_fac->factor, qp.g, rows, d0, max_iter, tol);
        sol.status = outcome.status;
        sol.iterations = outcome.iterations;
        sol.d = outcome.v;
        qp_detail::map_multipliers(qp, rows, outcome, sol);
        qp_detail::debug_check_kkt(qp, sol, tol);
        return sol;
    }

    // Elastic pass: minimize the original objective plus M*s over (d, s),
    // rows relaxed by s. Escalate M until s* reaches zero or stalls. The
    // slack carries curvature on the same scale as H so the working-set
    // systems stay well conditioned; at s* = 0 the slack curvature drops out
    // of the KKT conditions and the original solution is exact.
    const double scale = 1.0 + linalg::inf_norm(qp.g);
    double sigma = 1.0;
    for (std::size_t j = 0; j < m; ++j) sigma = std::max(sigma, std::abs(qp.H(j, j)));
    double big_m = 1e3 * scale;

    const auto rows = qp_detail::build_rows(qp, true);
    double s0 = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        s0 = std::max(s0, linalg::dot(qp.A_ineq.row(i), d0) - qp.b_ineq[i]);
    Vec v0 = d0;
    v0.push_back(s0);

    Matrix h_ext(m + 1, m + 1);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) h_ext(i, j) = h_used(i, j);
    h_ext(m, m) = sigma;
    const auto h_ext_fac = linalg::cholesky(h_ext);
    if (!h_ext_fac) throw std::invalid_argument("solve_qp: elastic Hessian not positive definite");

    qp_detail::ActiveSetOutcome outcome;
    const double feas_tol = std::max(tol, 1e-10);
    int total_iters = 0;
    for (int attempt = 0; attempt < 3; ++attempt, big_m *= 100.0) {
        Vec g_ext = qp.g;
        g_ext.push_back(big_m);
        outcome = qp_detail::active_set_loop(*h_ext_fac, g_ext, rows, v0, max_iter, tol);
        total_iters += outcome.iterations;
        if (outcome.status != QpStatus::optimal) {
            sol.status = outcome.status;
            sol.iterations = total_iters;
            sol.d.assign(outcome.v.begin(), outcome.v.begin() + static_cast<long>(m));
            qp_detail::map_multipliers(qp, rows, outcome, sol);
            return sol;
        }
        if (outcome.v[m] <= feas_tol) break;
        v0 = outcome.v;  // feasible for the next, stiffer elastic problem
    }

    sol.iterations = total_iters;
    sol.d.assign(outcome.v.begin(), outcome.v.begin() + static_cast<long>(m));
    qp_detail::map_multipliers(qp, rows, outcome, sol);
    if (outcome.v[m] > feas_tol) {
        sol.status = QpStatus::infeasible;
        sol.phase1_residual = outcome.v[m];
    } else {
        sol.status = QpStatus::optimal;
        qp_detail::debug_check_kkt(qp, sol, tol);
    }
    return sol;
}

}  // namespace attain
