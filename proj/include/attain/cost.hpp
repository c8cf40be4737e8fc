#pragma once

// Bolza cost evaluation through simulation: J(theta) = terminal part at tf
// plus the running integral, with an optional quadratic penalty on state-box
// violations. Gradients are central finite differences in theta; the final
// time is never differentiated or optimized.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "attain/detail/fd.hpp"
#include "attain/detail/parallel.hpp"
#include "attain/dynamics.hpp"
#include "attain/model.hpp"

namespace attain {

/// State-box violation under `reject` mode.
class BoundRejectError : public std::runtime_error {
public:
    BoundRejectError(const std::string& scenario_id, std::size_t violation_count)
        : std::runtime_error("scenario '" + scenario_id + "': state bounds violated at " +
                             std::to_string(violation_count) + " grid samples (reject mode)"),
          scenario_id_(scenario_id) {}
    const std::string& scenario_id() const { return scenario_id_; }

private:
    std::string scenario_id_;
};

struct CostValue {
    double total = 0.0;
    double terminal_part = 0.0;
    double running_part = 0.0;
    double bound_penalty = 0.0;
};

/// One scenario with compiled expressions; reusable across theta probes and
/// safe to call concurrently (evaluation is pure).
class CostEvaluator {
public:
    CostEvaluator(const Scenario& scenario, std::size_t p, const SolverOptions& opts)
        : compiled_(scenario, p), opts_(opts) {}

    const Scenario& scenario() const { return compiled_.scenario(); }

    CostValue evaluate(const ParameterVector& theta) const {
        const Trajectory traj =
            dynamics_detail::integrate_compiled(compiled_, theta, opts_.integrator_steps);

        CostValue cv;
        cv.running_part = traj.running_cost_accumulator.back();

        Vec slots = compiled_.make_slots(theta);
        cv.terminal_part = compiled_.terminal(traj.states.back().values, slots);

        if (opts_.state_bound_mode != StateBoundMode::monitor) {
            const ViolationReport report =
                check_state_bounds(traj, compiled_.scenario().state_bounds);
            if (!report.empty()) {
                if (opts_.state_bound_mode == StateBoundMode::reject)
                    throw BoundRejectError(compiled_.scenario().id, report.violations.size());
                cv.bound_penalty = opts_.penalty_coefficient * report.total_squared_excess();
            }
        }
        cv.total = cv.terminal_part + cv.running_part + cv.bound_penalty;
        return cv;
    }

    Trajectory simulate(const ParameterVector& theta) const {
        return dynamics_detail::integrate_compiled(compiled_, theta, opts_.integrator_steps);
    }

private:
    dynamics_detail::CompiledScenario compiled_;
    SolverOptions opts_;
};

inline CostValue evaluate_cost(const Scenario& scenario, const ParameterVector& theta,
                               const SolverOptions& opts) {
    return CostEvaluator(scenario, theta.size(), opts).evaluate(theta);
}

/// All N scenario costs at one theta, in spec order. Per-scenario failures
/// are aggregated into a single error naming the offending scenarios.
inline std::vector<CostValue> evaluate_all(const ProblemSpec& spec, const ParameterVector& theta) {
    std::vector<CostValue> out(spec.scenarios.size());
    std::vector<std::string> errors(spec.scenarios.size());
    detail::parallel_for(spec.scenarios.size(), spec.options.jobs, [&](std::size_t i) {
        try {
            out[i] = evaluate_cost(spec.scenarios[i], theta, spec.options);
        } catch (const std::exception& e) {
            errors[i] = "scenario '" + spec.scenarios[i].id + "': " + e.what();
        }
    });
    std::string joined;
    for (const auto& e : errors) {
        if (e.empty()) continue;
        if (!joined.empty()) joined += "; ";
        joined += e;
    }
    if (!joined.empty()) throw std::runtime_error("evaluate_all: " + joined);
    return out;
}

/// Central-difference gradient with per-component step h_j = scale*(1+|theta_j|).
inline Vec gradient(const std::function<double(const ParameterVector&)>& f,
                    const ParameterVector& theta, double fd_step_scale) {
    Vec g(theta.size());
    ParameterVector probe = theta;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double h = detail::fd_step(theta.values[j], fd_step_scale);
        double fp = 0.0, fm = 0.0;
        probe.values[j] = theta.values[j] + h;
        try {
            fp = f(probe);
        } catch (const std::exception& e) {
            throw std::runtime_error("gradient probe failed at component " + std::to_string(j) +
                                     " (+): " + e.what());
        }
        probe.values[j] = theta.values[j] - h;
        try {
            fm = f(probe);
        } catch (const std::exception& e) {
            throw std::runtime_error("gradient probe failed at component " + std::to_string(j) +
                                     " (-): " + e.what());
        }
        probe.values[j] = theta.values[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace attain
