#pragma once

// The two-stage strategy. Stage 1 solves each operating condition on its own
// for (theta_i*, J_i*); Stage 2 solves one theta for all conditions through
// goal-attainment constraints J_i(theta) - gamma_i w_i <= J_i*, either as the
// classical single-gamma minimax program or as a weighted sum of per-scenario
// attainment levels. Reporting classifies each scenario as over-attained,
// met, or under-attained, and the weight sweep reruns Stage 2 across a grid
// of weightings from a common initial point.

#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "attain/cost.hpp"
#include "attain/detail/format.hpp"
#include "attain/detail/parallel.hpp"
#include "attain/detail/rng.hpp"
#include "attain/model.hpp"
#include "attain/sqp.hpp"

namespace attain {

struct GoalEntry {
    std::string scenario_id;
    ParameterVector theta_star;  // may be empty for user-supplied goals
    double J_star = 0.0;
    NlpStatus status = NlpStatus::converged;
    std::string error;  // non-empty when the scenario solve failed outright
};

struct GoalSet {
    std::vector<GoalEntry> entries;

    std::size_t size() const { return entries.size(); }
};

struct GoalSolution {
    ParameterVector theta_star;
    Vec gamma;                     // gamma_i = (J_i(theta*) - J_i*) / w_i
    std::vector<CostValue> costs;  // at theta_star, spec order
    double objective = 0.0;        // max gamma (minimax) or sum gamma (weighted_sum)
    Aggregation aggregation_used = Aggregation::minimax;
    NlpSolution solver;
    std::vector<std::string> scenario_ids;
    Vec goals;         // J_i* actually used
    Vec weights_used;  // after optional normalization
};

enum class AttainmentClass { over_attained, met, under_attained };

inline const char* to_string(AttainmentClass c) {
    switch (c) {
        case AttainmentClass::over_attained: return "over-attained";
        case AttainmentClass::met: return "met";
        case AttainmentClass::under_attained: return "under-attained";
    }
    return "?";
}

struct AttainmentRow {
    std::string scenario_id;
    double goal = 0.0;       // J_i*
    double achieved = 0.0;   // J_i(theta*)
    double deviation = 0.0;  // delta_i = achieved - goal
    double gamma = 0.0;      // delta_i / w_i
    AttainmentClass classification = AttainmentClass::met;
};

struct AttainmentReport {
    std::vector<AttainmentRow> rows;
    double tolerance = 0.0;
};

struct SweepRow {
    WeightVector weights;   // as requested (before normalization)
    GoalSolution solution;  // valid when error is empty
    std::string error;
};

struct SweepTable {
    std::vector<SweepRow> rows;
};

/// w / sum(w). Rejects non-positive entries; fills `notice` when the input
/// sum was not already unity (within 1e-9).
inline WeightVector normalize_weights(const WeightVector& w, std::string* notice = nullptr) {
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0) || !std::isfinite(w[i]))
            throw std::invalid_argument("weight not positive: w[" + std::to_string(i) +
                                        "] = " + detail::format_shortest(w.w[i]));
        sum += w[i];
    }
    if (w.size() == 0) throw std::invalid_argument("weight vector is empty");
    if (notice && std::abs(sum - 1.0) > 1e-9)
        *notice = "weights sum to " + detail::format_shortest(sum) + "; renormalizing to unity";
    WeightVector out = w;
    for (double& wi : out.w) wi /= sum;
    return out;
}

namespace pipeline_detail {

inline std::uint64_t scenario_stream_seed(std::uint64_t base, std::size_t scenario_index) {
    return base + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(scenario_index + 1);
}

/// Multistart initial points: theta_init first, then seeded uniform draws
/// inside Theta (falling back to a window around theta_init on unbounded
/// sides, for sampling only).
inline std::vector<ParameterVector> stage1_starts(const ProblemSpec& spec,
                                                  std::size_t scenario_index) {
    const auto& opts = spec.options;
    std::vector<ParameterVector> starts;
    starts.push_back(ParameterVector{spec.theta_bounds.clip(spec.theta_init.values)});
    detail::SplitMix64 rng(scenario_stream_seed(opts.seed, scenario_index));
    for (int s = 1; s < opts.multistart_count; ++s) {
        Vec draw(spec.p);
        for (std::size_t j = 0; j < spec.p; ++j) {
            const double init = starts.front().values[j];
            const double window = 10.0 * (1.0 + std::abs(init));
            double lo = spec.theta_bounds.lower[j];
            double hi = spec.theta_bounds.upper[j];
            if (!std::isfinite(lo)) lo = init - window;
            if (!std::isfinite(hi)) hi = init + window;
            draw[j] = rng.uniform(lo, hi);
        }
        starts.push_back(ParameterVector{std::move(draw)});
    }
    return starts;
}

inline NlpProblem single_scenario_nlp(const CostEvaluator& evaluator, const ProblemSpec& spec) {
    NlpProblem nlp;
    nlp.dimension = spec.p;
    nlp.bounds = spec.theta_bounds;
    nlp.objective = [&evaluator](const Vec& z) {
        return evaluator.evaluate(ParameterVector{z}).total;
    };
    return nlp;
}

inline void write_trace_csv(const std::vector<SqpTraceRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open trace file: " + path);
    os << "iteration,objective,merit,step_length,kkt_residual\n";
    for (const auto& r : rows) {
        os << r.iteration << ',' << detail::format_full(r.objective) << ','
           << detail::format_full(r.merit) << ',' << detail::format_full(r.step_length) << ','
           << detail::format_full(r.kkt_residual) << '\n';
    }
}

}  // namespace pipeline_detail

/// Stage 1: per-scenario (sub)-optimal parameters and goal values. Scenario
/// solves are independent and run under the jobs cap; failures are recorded
/// per entry and the remaining scenarios still complete.
inline GoalSet run_stage1(const ProblemSpec& spec, const SolverOptions& opts) {
    GoalSet goals;
    goals.entries.resize(spec.scenarios.size());

    ProblemSpec working = spec;
    working.options = opts;

    detail::parallel_for(spec.scenarios.size(), opts.jobs, [&](std::size_t i) {
        GoalEntry entry;
        entry.scenario_id = spec.scenarios[i].id;
        try {
            const CostEvaluator evaluator(spec.scenarios[i], spec.p, opts);
            const NlpProblem nlp = pipeline_detail::single_scenario_nlp(evaluator, working);
            const auto starts = pipeline_detail::stage1_starts(working, i);

            // Ties break on lowest J, then lowest restart index (kept by the
            // strict comparison). Starts whose evaluations blow up are
            // skipped; the scenario fails only if every start does.
            bool have_best = false;
            NlpSolution best;
            std::string last_error;
            for (const auto& start : starts) {
                NlpSolution run;
                try {
                    run = solve_nlp(nlp, start.values, opts);
                } catch (const std::exception& e) {
                    last_error = e.what();
                    continue;
                }
                if (!std::isfinite(run.f_star)) continue;
                if (!have_best || run.f_star < best.f_star) {
                    best = std::move(run);
                    have_best = true;
                }
            }
            if (!have_best)
                throw std::runtime_error(last_error.empty() ? "no start produced a finite cost"
                                                            : last_error);
            entry.theta_star = ParameterVector{best.z_star};
            entry.J_star = best.f_star;
            entry.status = best.status;
        } catch (const std::exception& e) {
            entry.error = e.what();
            entry.J_star = std::numeric_limits<double>::quiet_NaN();
            entry.status = NlpStatus::line_search_failure;
        }
        goals.entries[i] = std::move(entry);
    });
    return goals;
}

namespace pipeline_detail {

inline void require_alignment(const ProblemSpec& spec, const GoalSet& goals) {
    if (goals.size() != spec.scenarios.size())
        throw std::invalid_argument("goals not aligned with spec: " + std::to_string(goals.size()) +
                                    " entries for " + std::to_string(spec.scenarios.size()) +
                                    " scenarios");
    for (std::size_t i = 0; i < goals.size(); ++i) {
        const auto& e = goals.entries[i];
        if (e.scenario_id != spec.scenarios[i].id)
            throw std::invalid_argument("goals not aligned with spec: entry " + std::to_string(i) +
                                        " is '" + e.scenario_id + "', expected '" +
                                        spec.scenarios[i].id + "'");
        if (!e.error.empty() || !std::isfinite(e.J_star))
            throw std::invalid_argument("goal for scenario '" + e.scenario_id +
                                        "' is unusable: " +
                                        (e.error.empty() ? "J_star not finite" : e.error));
    }
}

}  // namespace pipeline_detail

/// Stage 2: one theta for all conditions. Builds the goal-attainment NLP over
/// z = (theta, gamma auxiliaries) and solves it with the SQP solver. The
/// reported gamma vector is always recomputed from the final theta.
inline GoalSolution run_goal_attainment(const ProblemSpec& spec, const GoalSet& goals_in,
                                        const SolverOptions& opts) {
    pipeline_detail::require_alignment(spec, goals_in);
    const std::size_t n_scen = spec.scenarios.size();
    const std::size_t p = spec.p;

    Vec weights = spec.weights.w;
    if (opts.normalize_weights) weights = normalize_weights(spec.weights).w;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (!(weights[i] > 0.0))
            throw std::invalid_argument("weight not positive: w[" + std::to_string(i) + "]");

    Vec goal_values(n_scen);
    for (std::size_t i = 0; i < n_scen; ++i) goal_values[i] = goals_in.entries[i].J_star;

    // Shared evaluators; pure and safe for concurrent probes.
    std::vector<std::unique_ptr<CostEvaluator>> evaluators;
    evaluators.reserve(n_scen);
    for (std::size_t i = 0; i < n_scen; ++i)
        evaluators.push_back(std::make_unique<CostEvaluator>(spec.scenarios[i], p, opts));

    auto all_costs = [&](const Vec& theta) {
        Vec j(n_scen);
        detail::parallel_for(n_scen, opts.jobs, [&](std::size_t i) {
            j[i] = evaluators[i]->evaluate(ParameterVector{Vec(theta)}).total;
        });
        return j;
    };

    // Initial theta: theta_init, or the Stage-1 minimizer with the best
    // worst-case attainment when warm starting.
    Vec theta0 = spec.theta_bounds.clip(spec.theta_init.values);
    if (opts.warm_start == WarmStart::best_stage1) {
        double best_score = std::numeric_limits<double>::infinity();
        for (const auto& entry : goals_in.entries) {
            if (entry.theta_star.size() != p) continue;
            const Vec j = all_costs(entry.theta_star.values);
            double score = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_scen; ++i)
                score = std::max(score, (j[i] - goal_values[i]) / weights[i]);
            if (score < best_score) {
                best_score = score;
                theta0 = spec.theta_bounds.clip(entry.theta_star.values);
            }
        }
    }

    const bool minimax = opts.aggregation == Aggregation::minimax;
    const std::size_t n_aux = minimax ? 1 : n_scen;
    const std::size_t dim = p + n_aux;

    NlpProblem nlp;
    nlp.dimension = dim;
    nlp.constraint_count = n_scen;
    nlp.bounds.lower.assign(dim, -kInf);
    nlp.bounds.upper.assign(dim, kInf);
    for (std::size_t j = 0; j < p; ++j) {
        nlp.bounds.lower[j] = spec.theta_bounds.lower[j];
        nlp.bounds.upper[j] = spec.theta_bounds.upper[j];
    }
    if (minimax) {
        nlp.objective = [p](const Vec& z) { return z[p]; };
        nlp.inequality_constraints = [&, p](const Vec& z) {
            const Vec j = all_costs(Vec(z.begin(), z.begin() + static_cast<long>(p)));
            Vec c(n_scen);
            for (std::size_t i = 0; i < n_scen; ++i)
                c[i] = j[i] - goal_values[i] - z[p] * weights[i];
            return c;
        };
    } else {
        nlp.objective = [p, n_scen](const Vec& z) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_scen; ++i) s += z[p + i];
            return s;
        };
        nlp.inequality_constraints = [&, p](const Vec& z) {
            const Vec j = all_costs(Vec(z.begin(), z.begin() + static_cast<long>(p)));
            Vec c(n_scen);
            for (std::size_t i = 0; i < n_scen; ++i)
                c[i] = j[i] - goal_values[i] - z[p + i] * weights[i];
            return c;
        };
    }

    // Strictly feasible start for the attainment levels.
    Vec z0(theta0);
    {
        const Vec j0 = all_costs(theta0);
        if (minimax) {
            double g0 = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_scen; ++i)
                g0 = std::max(g0, (j0[i] - goal_values[i]) / weights[i]);
            z0.push_back(g0 + 1.0);
        } else {
            for (std::size_t i = 0; i < n_scen; ++i)
                z0.push_back((j0[i] - goal_values[i]) / weights[i] + 1.0);
        }
    }

    std::vector<SqpTraceRow> trace;
    NlpSolution nsol = solve_nlp(nlp, z0, opts, opts.trace_path.empty() ? nullptr : &trace);
    if (!opts.trace_path.empty()) pipeline_detail::write_trace_csv(trace, opts.trace_path);

    GoalSolution out;
    out.aggregation_used = opts.aggregation;
    out.solver = nsol;
    out.goals = goal_values;
    out.weights_used = weights;
    out.theta_star =
        ParameterVector{Vec(nsol.z_star.begin(), nsol.z_star.begin() + static_cast<long>(p))};

    out.costs.resize(n_scen);
    detail::parallel_for(n_scen, opts.jobs, [&](std::size_t i) {
        out.costs[i] = evaluators[i]->evaluate(out.theta_star);
    });
    out.gamma.resize(n_scen);
    out.scenario_ids.resize(n_scen);
    for (std::size_t i = 0; i < n_scen; ++i) {
        out.gamma[i] = (out.costs[i].total - goal_values[i]) / weights[i];
        out.scenario_ids[i] = spec.scenarios[i].id;
    }
    if (minimax) {
        out.objective = -std::numeric_limits<double>::infinity();
        for (double gi : out.gamma) out.objective = std::max(out.objective, gi);
    } else {
        out.objective = 0.0;
        for (double gi : out.gamma) out.objective += gi;
    }
    return out;
}

/// Per-scenario goal vs. achieved cost, the raw and weight-normalized
/// deviations, and the under/over-attainment classification at tolerance
/// feas_tol on the raw deviation.
inline AttainmentReport attainment_report(const ProblemSpec& spec, const GoalSet& goals,
                                          const GoalSolution& solution) {
    pipeline_detail::require_alignment(spec, goals);
    AttainmentReport report;
    report.tolerance = spec.options.feas_tol;
    for (std::size_t i = 0; i < spec.scenarios.size(); ++i) {
        AttainmentRow row;
        row.scenario_id = spec.scenarios[i].id;
        row.goal = solution.goals[i];
        row.achieved = solution.costs[i].total;
        row.deviation = row.achieved - row.goal;
        row.gamma = solution.gamma[i];
        if (row.deviation < -report.tolerance)
            row.classification = AttainmentClass::over_attained;
        else if (row.deviation > report.tolerance)
            row.classification = AttainmentClass::under_attained;
        else
            row.classification = AttainmentClass::met;
        report.rows.push_back(std::move(row));
    }
    return report;
}

/// One Stage-2 solve per weight vector, each from the same theta_init so the
/// rows are comparable. Row failures are recorded and the sweep continues.
inline SweepTable weight_sweep(const ProblemSpec& spec, const GoalSet& goals,
                               const std::vector<WeightVector>& weight_list,
                               const SolverOptions& opts) {
    SweepTable table;
    table.rows.resize(weight_list.size());
    for (std::size_t r = 0; r < weight_list.size(); ++r) {
        SweepRow row;
        row.weights = weight_list[r];
        try {
            ProblemSpec variant = spec;
            variant.weights = weight_list[r];
            SolverOptions row_opts = opts;
            row_opts.warm_start = WarmStart::theta_init;  // comparability across rows
            row_opts.trace_path.clear();
            row.solution = run_goal_attainment(variant, goals, row_opts);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        table.rows[r] = std::move(row);
    }
    return table;
}

/// Recomputes the Stage-2 feasibility audit from scratch:
/// J_i(theta*) - gamma_i w_i <= J_i* + feas_tol for every scenario.
inline bool goal_feasibility_ok(const ProblemSpec& spec, const GoalSolution& solution,
                                double feas_tol) {
    for (std::size_t i = 0; i < spec.scenarios.size(); ++i) {
        const CostValue cv = evaluate_cost(spec.scenarios[i], solution.theta_star, spec.options);
        const double lhs = cv.total - solution.gamma[i] * solution.weights_used[i];
        if (lhs > solution.goals[i] + feas_tol) return false;
    }
    return true;
}

}  // namespace attain
