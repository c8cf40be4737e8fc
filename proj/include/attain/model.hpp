#pragma once

// Domain types shared by all modules, plus structural validation of a
// problem specification. All types are immutable values after construction
// and safe to share read-only across concurrent evaluators.

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "attain/expr.hpp"
#include "attain/linalg.hpp"

namespace attain {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Design parameters theta; dimensionless, length p.
struct ParameterVector {
    Vec values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

/// State sample x; length n, model-specific units.
struct StateVector {
    Vec values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Axis-aligned box; entries may be +-inf to encode an unbounded side.
struct BoxSet {
    Vec lower;
    Vec upper;

    static BoxSet unbounded(std::size_t n) {
        return BoxSet{Vec(n, -kInf), Vec(n, kInf)};
    }

    std::size_t size() const { return lower.size(); }

    bool well_formed() const {
        if (lower.size() != upper.size()) return false;
        for (std::size_t j = 0; j < lower.size(); ++j) {
            if (std::isnan(lower[j]) || std::isnan(upper[j])) return false;
            if (lower[j] > upper[j]) return false;
        }
        return true;
    }

    bool contains(std::span<const double> x, double tol = 0.0) const {
        if (x.size() != lower.size()) return false;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (x[j] < lower[j] - tol || x[j] > upper[j] + tol) return false;
        return true;
    }

    Vec clip(std::span<const double> x) const {
        Vec out(x.begin(), x.end());
        for (std::size_t j = 0; j < out.size() && j < lower.size(); ++j)
            out[j] = std::min(std::max(out[j], lower[j]), upper[j]);
        return out;
    }
};

/// Positive weights w_i; normalization divides by the sum.
struct WeightVector {
    Vec w;

    std::size_t size() const { return w.size(); }
    double operator[](std::size_t i) const { return w[i]; }
};

enum class Aggregation { minimax, weighted_sum };
enum class StateBoundMode { monitor, penalize, reject };
enum class WarmStart { theta_init, best_stage1 };

inline double default_fd_step_scale() {
    return std::cbrt(std::numeric_limits<double>::epsilon());
}

struct SolverOptions {
    int integrator_steps = 200;
    double fd_step_scale = default_fd_step_scale();
    double kkt_tol = 1e-6;
    double feas_tol = 1e-6;
    int max_iter = 200;
    Aggregation aggregation = Aggregation::minimax;
    StateBoundMode state_bound_mode = StateBoundMode::monitor;
    double penalty_coefficient = 1e3;
    int multistart_count = 1;
    std::uint64_t seed = 2026;

    int max_backtracks = 40;                    // line-search halvings
    WarmStart warm_start = WarmStart::theta_init;
    bool normalize_weights = true;
    int jobs = 1;                               // cap on concurrent scenario evaluations
    std::string trace_path;                     // per-iteration solver trace CSV when set
};

/// One operating condition: dynamics, horizon, initial state, Bolza cost
/// pieces, and the state box.
struct Scenario {
    std::string id;
    std::vector<Expr> dynamics;  // component expressions over (t, x, theta)
    StateVector x0;
    double t0 = 0.0;
    double tf = 1.0;
    Expr terminal_cost;          // over (x, theta, tf)
    Expr running_cost;           // over (x, theta, t)
    BoxSet state_bounds;

    std::size_t state_dimension() const { return x0.size(); }
};

struct ProblemSpec {
    std::vector<Scenario> scenarios;
    std::size_t p = 0;
    BoxSet theta_bounds;
    ParameterVector theta_init;
    WeightVector weights;
    SolverOptions options;

    std::size_t scenario_count() const { return scenarios.size(); }
};

struct ValidationFinding {
    std::string scenario_id;  // empty for problem-level findings
    std::string field;
    std::string rule;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationFinding> findings;

    bool ok() const { return findings.empty(); }
    std::size_t count() const { return findings.size(); }
};

namespace model_detail {

inline void expect_finite(std::span<const double> v, const std::string& scenario_id,
                          const std::string& field, std::vector<ValidationFinding>& out) {
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v[j])) {
            out.push_back({scenario_id, field, "entry not finite",
                           field + "[" + std::to_string(j) + "] is not finite"});
            return;
        }
    }
}

inline std::set<std::string> variable_context(std::size_t n, std::size_t p, const char* extra) {
    std::set<std::string> ctx;
    for (std::size_t j = 0; j < n; ++j) ctx.insert("x" + std::to_string(j));
    for (std::size_t j = 0; j < p; ++j) ctx.insert("theta" + std::to_string(j));
    ctx.insert(extra);
    return ctx;
}

inline void check_expr_context(const Expr& e, const std::set<std::string>& ctx,
                               const std::string& scenario_id, const std::string& field,
                               std::vector<ValidationFinding>& out) {
    if (e.empty()) {
        out.push_back({scenario_id, field, "expression missing", field + " has no expression"});
        return;
    }
    for (const auto& v : e.free_variables()) {
        if (!ctx.count(v))
            out.push_back({scenario_id, field, "unknown variable",
                           field + " references variable '" + v + "' outside its context"});
    }
}

}  // namespace model_detail

/// Pure structural check: same spec in, same report out. Findings are data,
/// not failures; an empty report means every type invariant holds and the
/// spec is evaluable without dimension errors.
inline ValidationReport validate_problem(const ProblemSpec& spec) {
    using model_detail::check_expr_context;
    using model_detail::expect_finite;
    using model_detail::variable_context;

    ValidationReport report;
    auto& out = report.findings;

    if (spec.scenarios.empty()) {
        out.push_back({"", "scenarios", "scenario list empty", "at least one scenario is required"});
        return report;
    }
    if (spec.p == 0)
        out.push_back({"", "parameters.dim", "parameter dimension not positive",
                       "parameter dimension p must be >= 1"});

    if (!spec.theta_bounds.well_formed())
        out.push_back({"", "parameters.bounds", "bounds malformed",
                       "lower/upper must be equal-length with lower <= upper"});
    else if (spec.theta_bounds.size() != spec.p)
        out.push_back({"", "parameters.bounds", "bound dimension mismatch",
                       "theta bounds have length " + std::to_string(spec.theta_bounds.size()) +
                           ", expected " + std::to_string(spec.p)});

    if (spec.theta_init.size() != spec.p)
        out.push_back({"", "parameters.init", "parameter dimension mismatch",
                       "theta_init has length " + std::to_string(spec.theta_init.size()) +
                           ", expected " + std::to_string(spec.p)});
    else {
        expect_finite(spec.theta_init.values, "", "parameters.init", out);
        if (spec.theta_bounds.well_formed() && spec.theta_bounds.size() == spec.p &&
            !spec.theta_bounds.contains(spec.theta_init.values))
            out.push_back({"", "parameters.init", "initial parameters outside bounds",
                           "theta_init violates the parameter box"});
    }

    if (spec.weights.size() != spec.scenarios.size())
        out.push_back({"", "weights", "weight count mismatch",
                       "got " + std::to_string(spec.weights.size()) + " weights for " +
                           std::to_string(spec.scenarios.size()) + " scenarios"});
    for (std::size_t i = 0; i < spec.weights.size(); ++i) {
        if (!(spec.weights[i] > 0.0) || !std::isfinite(spec.weights[i]))
            out.push_back({"", "weights", "weight not positive",
                           "weights[" + std::to_string(i) + "] = must be finite and > 0"});
    }

    const auto& o = spec.options;
    if (o.integrator_steps < 1)
        out.push_back({"", "options.integrator_steps", "integrator steps below one",
                       "integrator_steps must be >= 1"});
    if (!(o.fd_step_scale > 0.0))
        out.push_back({"", "options.fd_step_scale", "tolerance not positive",
                       "fd_step_scale must be > 0"});
    if (!(o.kkt_tol > 0.0))
        out.push_back({"", "options.kkt_tol", "tolerance not positive", "kkt_tol must be > 0"});
    if (!(o.feas_tol > 0.0))
        out.push_back({"", "options.feas_tol", "tolerance not positive", "feas_tol must be > 0"});
    if (o.max_iter < 1)
        out.push_back({"", "options.max_iter", "iteration cap below one", "max_iter must be >= 1"});
    if (o.multistart_count < 1)
        out.push_back({"", "options.multistart_count", "multistart count below one",
                       "multistart_count must be >= 1"});
    if (o.penalty_coefficient < 0.0)
        out.push_back({"", "options.penalty_coefficient", "penalty negative",
                       "penalty_coefficient must be >= 0"});

    const std::size_t n_ref = spec.scenarios.front().state_dimension();
    std::set<std::string> seen_ids;
    for (const auto& sc : spec.scenarios) {
        const std::string& id = sc.id;
        if (!seen_ids.insert(id).second)
            out.push_back({id, "id", "duplicate scenario id", "scenario id '" + id + "' repeats"});

        const std::size_t n = sc.state_dimension();
        // Remark-style structural compatibility: one state dimension across
        // all scenarios, one shared parameter vector.
        if (n != n_ref)
            out.push_back({id, "x0", "state dimension mismatch",
                           "state dimension " + std::to_string(n) + " differs from " +
                               std::to_string(n_ref)});
        if (sc.dynamics.size() != n)
            out.push_back({id, "dynamics", "dynamics dimension mismatch",
                           std::to_string(sc.dynamics.size()) + " dynamics components for " +
                               std::to_string(n) + " states"});
        if (!(sc.tf > sc.t0))
            out.push_back({id, "tf", "non-positive horizon", "tf must exceed t0"});
        expect_finite(sc.x0.values, id, "x0", out);

        if (!sc.state_bounds.well_formed())
            out.push_back({id, "state_bounds", "bounds malformed",
                           "lower/upper must be equal-length with lower <= upper"});
        else if (sc.state_bounds.size() != n)
            out.push_back({id, "state_bounds", "bound dimension mismatch",
                           "state bounds have length " + std::to_string(sc.state_bounds.size()) +
                               ", expected " + std::to_string(n)});
        else if (!sc.state_bounds.contains(sc.x0.values))
            out.push_back({id, "x0", "initial state outside bounds",
                           "x0 violates the state box"});

        const auto dyn_ctx = variable_context(n, spec.p, "t");
        for (std::size_t j = 0; j < sc.dynamics.size(); ++j)
            check_expr_context(sc.dynamics[j], dyn_ctx, id,
                               "dynamics[" + std::to_string(j) + "]", out);
        check_expr_context(sc.running_cost, variable_context(n, spec.p, "t"), id, "running_cost",
                           out);
        check_expr_context(sc.terminal_cost, variable_context(n, spec.p, "tf"), id,
                           "terminal_cost", out);
    }

    return report;
}

}  // namespace attain
