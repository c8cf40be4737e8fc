#pragma once

// Fixed-step explicit integration of scenario dynamics. Classical RK4 on a
// uniform grid, with the running cost integrated as an augmented quadrature
// state so its accuracy order matches the state solution. Fixed step (rather
// than adaptive) keeps J(theta) smooth in theta, which the finite-difference
// gradients depend on.

#include <cstddef>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "attain/detail/format.hpp"
#include "attain/expr.hpp"
#include "attain/model.hpp"

namespace attain {

/// Integration aborted on a non-finite or absurdly large state component.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(std::size_t step_index, std::size_t component, const std::string& what)
        : std::runtime_error("integration diverged at step " + std::to_string(step_index) +
                             ", component " + std::to_string(component) + ": " + what),
          step_index_(step_index),
          component_(component) {}

    std::size_t step_index() const { return step_index_; }
    std::size_t component() const { return component_; }

private:
    std::size_t step_index_;
    std::size_t component_;
};

struct Trajectory {
    Vec times;                         // uniform grid, t0 to tf, steps + 1 points
    std::vector<StateVector> states;   // aligned with times; states[0] == x0
    Vec running_cost_accumulator;      // quadrature state q, qdot = psi; q[0] == 0

    std::size_t grid_points() const { return times.size(); }
    std::size_t state_dimension() const { return states.empty() ? 0 : states.front().size(); }
};

struct StateBoundViolation {
    std::size_t time_index;
    std::size_t component;
    double excess;  // distance outside the nearer bound, > 0
};

struct ViolationReport {
    std::vector<StateBoundViolation> violations;

    bool empty() const { return violations.empty(); }
    double total_squared_excess() const {
        double s = 0.0;
        for (const auto& v : violations) s += v.excess * v.excess;
        return s;
    }
};

namespace dynamics_detail {

inline constexpr double kDivergenceBound = 1e12;

/// Slot layout shared by every expression a scenario owns:
/// [t, x0..x{n-1}, theta0..theta{p-1}, tf].
inline std::vector<std::string> slot_names(std::size_t n, std::size_t p) {
    std::vector<std::string> names;
    names.reserve(n + p + 2);
    names.emplace_back("t");
    for (std::size_t j = 0; j < n; ++j) names.push_back("x" + std::to_string(j));
    for (std::size_t j = 0; j < p; ++j) names.push_back("theta" + std::to_string(j));
    names.emplace_back("tf");
    return names;
}

struct SlotIndex {
    std::size_t t = 0;
    std::size_t x0 = 1;
    std::size_t theta0;
    std::size_t tf;

    SlotIndex(std::size_t n, std::size_t p) : theta0(1 + n), tf(1 + n + p) {}
};

/// Scenario with all expressions compiled against the slot layout. Built once
/// per (scenario, theta-dimension) and reused across evaluations.
class CompiledScenario {
public:
    CompiledScenario(const Scenario& scenario, std::size_t p)
        : scenario_(&scenario), n_(scenario.state_dimension()), index_(n_, p) {
        const auto names = slot_names(n_, p);
        dynamics_.reserve(scenario.dynamics.size());
        for (std::size_t j = 0; j < scenario.dynamics.size(); ++j) {
            try {
                dynamics_.emplace_back(scenario.dynamics[j], names);
            } catch (const EvalError& err) {
                throw EvalError(err.offset(), "scenario '" + scenario.id + "' dynamics[" +
                                                  std::to_string(j) + "]: " + err.what());
            }
        }
        running_ = CompiledExpr(scenario.running_cost, names);
        terminal_ = CompiledExpr(scenario.terminal_cost, names);
    }

    const Scenario& scenario() const { return *scenario_; }
    std::size_t state_dimension() const { return n_; }
    const SlotIndex& index() const { return index_; }

    Vec make_slots(const ParameterVector& theta) const {
        Vec slots(index_.tf + 1, 0.0);
        for (std::size_t j = 0; j < theta.size(); ++j) slots[index_.theta0 + j] = theta[j];
        slots[index_.tf] = scenario_->tf;
        return slots;
    }

    /// dy for the augmented state [x; q]; slots must hold theta and tf.
    void rhs(double t, std::span<const double> y, Vec& slots, Vec& dy) const {
        slots[index_.t] = t;
        for (std::size_t j = 0; j < n_; ++j) slots[index_.x0 + j] = y[j];
        for (std::size_t j = 0; j < n_; ++j) {
            try {
                dy[j] = dynamics_[j].evaluate(slots);
            } catch (const EvalError& err) {
                throw EvalError(err.offset(), "dynamics component " + std::to_string(j) + ": " +
                                                  err.what());
            }
        }
        dy[n_] = running_.evaluate(slots);
    }

    double terminal(std::span<const double> x_final, Vec& slots) const {
        for (std::size_t j = 0; j < n_; ++j) slots[index_.x0 + j] = x_final[j];
        slots[index_.t] = scenario_->tf;
        return terminal_.evaluate(slots);
    }

private:
    const Scenario* scenario_;
    std::size_t n_;
    SlotIndex index_;
    std::vector<CompiledExpr> dynamics_;
    CompiledExpr running_;
    CompiledExpr terminal_;
};

inline void check_finite(std::span<const double> y, std::size_t n, std::size_t step) {
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(y[j]))
            throw IntegrationError(step, j, "state is not finite");
        if (std::abs(y[j]) > kDivergenceBound)
            throw IntegrationError(step, j, "state magnitude exceeds 1e12");
    }
}

inline Trajectory integrate_compiled(const CompiledScenario& cs, const ParameterVector& theta,
                                     int steps) {
    if (steps < 1) throw std::invalid_argument("integrate: steps must be >= 1");
    const Scenario& sc = cs.scenario();
    const std::size_t n = cs.state_dimension();
    const double h = (sc.tf - sc.t0) / static_cast<double>(steps);

    Vec slots = cs.make_slots(theta);
    Vec y(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) y[j] = sc.x0[j];

    Trajectory traj;
    traj.times.resize(static_cast<std::size_t>(steps) + 1);
    traj.states.reserve(traj.times.size());
    traj.running_cost_accumulator.resize(traj.times.size());

    Vec k1(n + 1), k2(n + 1), k3(n + 1), k4(n + 1), y_stage(n + 1);
    auto record = [&](std::size_t k) {
        traj.times[k] = (k == static_cast<std::size_t>(steps)) ? sc.tf
                                                               : sc.t0 + static_cast<double>(k) * h;
        traj.states.push_back(StateVector{Vec(y.begin(), y.begin() + static_cast<long>(n))});
        traj.running_cost_accumulator[k] = y[n];
    };
    record(0);

    for (int k = 0; k < steps; ++k) {
        const double t = sc.t0 + static_cast<double>(k) * h;
        cs.rhs(t, y, slots, k1);
        for (std::size_t j = 0; j <= n; ++j) y_stage[j] = y[j] + 0.5 * h * k1[j];
        cs.rhs(t + 0.5 * h, y_stage, slots, k2);
        for (std::size_t j = 0; j <= n; ++j) y_stage[j] = y[j] + 0.5 * h * k2[j];
        cs.rhs(t + 0.5 * h, y_stage, slots, k3);
        for (std::size_t j = 0; j <= n; ++j) y_stage[j] = y[j] + h * k3[j];
        cs.rhs(t + h, y_stage, slots, k4);
        for (std::size_t j = 0; j <= n; ++j)
            y[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        check_finite(y, n + 1, static_cast<std::size_t>(k) + 1);
        record(static_cast<std::size_t>(k) + 1);
    }
    return traj;
}

}  // namespace dynamics_detail

/// Componentwise evaluation of the dynamics expression vector at (t, x, theta).
inline StateVector derivative(const Scenario& scenario, double t, const StateVector& x,
                              const ParameterVector& theta) {
    Bindings b;
    b["t"] = t;
    b["tf"] = scenario.tf;
    for (std::size_t j = 0; j < x.size(); ++j) b["x" + std::to_string(j)] = x[j];
    for (std::size_t j = 0; j < theta.size(); ++j) b["theta" + std::to_string(j)] = theta[j];
    StateVector dx;
    dx.values.resize(scenario.dynamics.size());
    for (std::size_t j = 0; j < scenario.dynamics.size(); ++j) {
        try {
            dx.values[j] = scenario.dynamics[j].evaluate(b);
        } catch (const EvalError& err) {
            throw EvalError(err.offset(),
                            "dynamics component " + std::to_string(j) + ": " + err.what());
        }
    }
    return dx;
}

/// Classical RK4 with uniform step h = (tf - t0) / steps. theta need not lie
/// inside the parameter box; line searches probe outside it. Deterministic:
/// identical inputs give bitwise-identical trajectories.
inline Trajectory integrate(const Scenario& scenario, const ParameterVector& theta, int steps) {
    dynamics_detail::CompiledScenario cs(scenario, theta.size());
    return dynamics_detail::integrate_compiled(cs, theta, steps);
}

/// Grid samples outside the box, with the excess past the violated side.
inline ViolationReport check_state_bounds(const Trajectory& traj, const BoxSet& bounds) {
    ViolationReport report;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& x = traj.states[k];
        for (std::size_t j = 0; j < x.size() && j < bounds.size(); ++j) {
            if (x[j] < bounds.lower[j])
                report.violations.push_back({k, j, bounds.lower[j] - x[j]});
            else if (x[j] > bounds.upper[j])
                report.violations.push_back({k, j, x[j] - bounds.upper[j]});
        }
    }
    return report;
}

/// CSV export: header `t,x0,...,x{n-1},q`, one row per grid point, full
/// double precision.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    os << "t";
    for (std::size_t j = 0; j < traj.state_dimension(); ++j) os << ",x" << j;
    os << ",q\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        os << detail::format_full(traj.times[k]);
        for (std::size_t j = 0; j < traj.states[k].size(); ++j)
            os << ',' << detail::format_full(traj.states[k][j]);
        os << ',' << detail::format_full(traj.running_cost_accumulator[k]) << '\n';
    }
}

inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream os;
    write_trajectory_csv(traj, os);
    return os.str();
}

}  // namespace attain
