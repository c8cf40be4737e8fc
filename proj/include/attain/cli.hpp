#pragma once

// Batch command-line frontend. Thin adapter over the library: every command
// is a load + library call + write, so CLI outputs and direct library
// outputs are byte-identical. Human-readable summaries go to stdout, machine
// artifacts only to --out paths, failures print one `error:` line.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attain/io.hpp"
#include "attain/pipeline.hpp"

namespace attain {
namespace cli_detail {

inline int usage_error(const std::string& what) {
    std::cerr << "error: " << what << "\n";
    return 2;
}

inline int run_error(const std::string& what) {
    std::cerr << "error: " << what << "\n";
    return 1;
}

inline Vec parse_theta_list(const std::string& text) {
    Vec out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string cell =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t used = 0;
        out.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument("malformed number '" + cell + "'");
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline void apply_env_seed(SolverOptions& opts) {
    const char* env = std::getenv("ATTAIN_SEED");
    if (!env || !*env) return;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (!end || *end != '\0') throw CLI::ValidationError("ATTAIN_SEED must be an unsigned integer");
    opts.seed = static_cast<std::uint64_t>(v);
}

inline std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

inline std::string gamma_line(const Vec& gamma) {
    std::string s = "gamma = (";
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (i) s += ", ";
        s += fmt("%.6f", gamma[i]);
    }
    s += ")";
    return s;
}

inline std::string vector_brief(const Vec& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt("%.6g", v[i]);
    }
    s += "]";
    return s;
}

inline GoalSet resolve_goals(const LoadedProblem& doc, const std::string& goals_path,
                             const SolverOptions& opts, bool* ran_stage1) {
    if (!goals_path.empty()) return goal_set_from_json(read_text_file(goals_path));
    if (doc.goals) return *doc.goals;
    if (ran_stage1) *ran_stage1 = true;
    return run_stage1(doc.spec, opts);
}

inline void print_attainment(const AttainmentReport& report) {
    std::cout << "  scenario            goal          achieved         deviation  class\n";
    for (const auto& row : report.rows) {
        std::printf("  %-14s %13.6g %15.6g %15.6g  %s\n", row.scenario_id.c_str(), row.goal,
                    row.achieved, row.deviation, to_string(row.classification));
    }
}

}  // namespace cli_detail

/// argv without the program name; returns the process exit code.
inline int run_cli(const std::vector<std::string>& args) {
    using namespace cli_detail;

    CLI::App app{"goal-attainment tuning of dynamic-embedded cost functionals"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs, "cap on concurrent scenario evaluations")->capture_default_str();

    std::string problem_path, out_path, goals_path, scenario_id, theta_text, trace_path;
    std::string weights_path, plot_path, aggregation_text;

    auto* validate_cmd = app.add_subcommand("validate", "check a problem file");
    validate_cmd->add_option("file", problem_path, "problem JSON")->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "integrate one scenario and export CSV");
    simulate_cmd->add_option("file", problem_path, "problem JSON")->required();
    simulate_cmd->add_option("--scenario", scenario_id, "scenario id")->required();
    simulate_cmd->add_option("--theta", theta_text, "comma-separated parameters");
    simulate_cmd->add_option("--out", out_path, "trajectory CSV path")->required();

    auto* stage1_cmd = app.add_subcommand("stage1", "per-scenario goal solves");
    stage1_cmd->add_option("file", problem_path, "problem JSON")->required();
    stage1_cmd->add_option("--out", out_path, "goals JSON path")->required();

    auto* attain_cmd = app.add_subcommand("attain", "goal-attainment solve for one theta");
    attain_cmd->add_option("file", problem_path, "problem JSON")->required();
    attain_cmd->add_option("--goals", goals_path, "goals JSON (default: stage1)");
    attain_cmd->add_option("--aggregation", aggregation_text, "minimax|weighted_sum");
    attain_cmd->add_option("--out", out_path, "solution JSON path")->required();
    attain_cmd->add_option("--trace", trace_path, "per-iteration solver trace CSV");

    auto* sweep_cmd = app.add_subcommand("sweep", "goal attainment across a weight grid");
    sweep_cmd->add_option("file", problem_path, "problem JSON")->required();
    sweep_cmd->add_option("--goals", goals_path, "goals JSON")->required();
    sweep_cmd->add_option("--weights-file", weights_path, "CSV, one weight vector per row")
        ->required();
    sweep_cmd->add_option("--out", out_path, "sweep table CSV path")->required();
    sweep_cmd->add_option("--plot-data", plot_path, "plot-ready CSV path");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        return usage_error(e.what());
    }

    try {
        // validate shows findings instead of failing the load.
        const bool strict = !validate_cmd->parsed();
        LoadedProblem doc = load_problem_document(read_text_file(problem_path), strict);
        if (jobs > 0) doc.spec.options.jobs = jobs;
        apply_env_seed(doc.spec.options);
        const ProblemSpec& spec = doc.spec;

        if (validate_cmd->parsed()) {
            if (!doc.validation.ok()) {
                for (const auto& f : doc.validation.findings) {
                    std::cout << "finding: "
                              << (f.scenario_id.empty() ? std::string("problem")
                                                        : "scenario '" + f.scenario_id + "'")
                              << " " << f.field << ": " << f.rule << " (" << f.message << ")\n";
                }
                return run_error("validation failed with " +
                                 std::to_string(doc.validation.count()) + " finding(s)");
            }
            std::cout << "ok: N=" << spec.scenarios.size() << " scenarios, p=" << spec.p
                      << " parameters\n";
            return 0;
        }

        if (simulate_cmd->parsed()) {
            const Scenario* scenario = nullptr;
            for (const auto& sc : spec.scenarios)
                if (sc.id == scenario_id) scenario = &sc;
            if (!scenario) return usage_error("unknown scenario id '" + scenario_id + "'");
            ParameterVector theta = spec.theta_init;
            if (!theta_text.empty()) {
                theta.values = parse_theta_list(theta_text);
                if (theta.size() != spec.p)
                    return usage_error("--theta needs " + std::to_string(spec.p) + " values");
            }
            const Trajectory traj = integrate(*scenario, theta, spec.options.integrator_steps);
            write_text_file(out_path, trajectory_to_csv(traj));
            const auto violations = check_state_bounds(traj, scenario->state_bounds);
            std::cout << "simulated scenario '" << scenario_id << "': " << traj.grid_points()
                      << " grid points, q(tf) = "
                      << fmt("%.9g", traj.running_cost_accumulator.back()) << "\n";
            if (!violations.empty())
                std::cout << "state bounds violated at " << violations.violations.size()
                          << " sample(s)\n";
            std::cout << "wrote " << out_path << "\n";
            return 0;
        }

        if (stage1_cmd->parsed()) {
            const GoalSet goals = run_stage1(spec, spec.options);
            write_results(goals, out_path);
            std::cout << "stage1: " << goals.size() << " scenario(s)\n";
            std::cout << "  scenario            J_star      status\n";
            bool all_ok = true;
            for (const auto& e : goals.entries) {
                std::printf("  %-14s %13.9g  %s\n", e.scenario_id.c_str(), e.J_star,
                            e.error.empty() ? to_string(e.status) : "failed");
                if (!e.error.empty() || e.status != NlpStatus::converged) all_ok = false;
            }
            std::cout << "wrote " << out_path << "\n";
            return all_ok ? 0 : run_error("one or more scenario solves did not converge");
        }

        if (attain_cmd->parsed()) {
            SolverOptions opts = spec.options;
            if (!aggregation_text.empty()) {
                try {
                    opts.aggregation =
                        io_detail::parse_aggregation(aggregation_text, "--aggregation");
                } catch (const LoadError& e) {
                    return usage_error(e.what());
                }
            }
            opts.trace_path = trace_path;
            if (opts.normalize_weights) {
                std::string notice;
                normalize_weights(spec.weights, &notice);
                if (!notice.empty()) std::cout << "notice: " << notice << "\n";
            }
            bool ran_stage1 = false;
            const GoalSet goals = resolve_goals(doc, goals_path, opts, &ran_stage1);
            if (ran_stage1) std::cout << "no goals supplied; ran stage 1 first\n";
            const GoalSolution sol = run_goal_attainment(spec, goals, opts);
            write_results(sol, out_path);

            std::cout << "aggregation: " << io_detail::aggregation_name(sol.aggregation_used)
                      << "\n";
            std::cout << "theta_star = " << vector_brief(sol.theta_star.values) << "\n";
            std::cout << gamma_line(sol.gamma) << "\n";
            std::cout << "objective = " << fmt("%.9g", sol.objective) << "\n";
            print_attainment(attainment_report(spec, goals, sol));
            std::cout << "solver: " << to_string(sol.solver.status) << " in "
                      << sol.solver.iterations << " iteration(s)\n";
            std::cout << "wrote " << out_path << "\n";
            if (sol.solver.status != NlpStatus::converged)
                return run_error("goal attainment did not converge: status " +
                                 std::string(to_string(sol.solver.status)));
            return 0;
        }

        if (sweep_cmd->parsed()) {
            const GoalSet goals = goal_set_from_json(read_text_file(goals_path));
            const auto weight_list = load_weights_csv(read_text_file(weights_path));
            if (weight_list.empty()) return run_error("weights file has no weight vectors");
            const SweepTable table = weight_sweep(spec, goals, weight_list, spec.options);
            write_text_file(out_path, sweep_table_to_csv(table, spec.scenarios.size(), spec.p));
            if (!plot_path.empty())
                write_text_file(plot_path, sweep_plot_csv(table, spec.scenarios.size()));
            std::size_t failures = 0;
            for (const auto& row : table.rows)
                if (!row.error.empty()) ++failures;
            std::cout << "sweep: " << table.rows.size() << " weight vector(s), " << failures
                      << " failure(s)\n";
            std::cout << "wrote " << out_path << "\n";
            if (!plot_path.empty()) std::cout << "wrote " << plot_path << "\n";
            return failures == 0 ? 0 : run_error(std::to_string(failures) + " sweep row(s) failed");
        }

        return usage_error("no command given");
    } catch (const LoadError& e) {
        return run_error(e.what());
    } catch (const CLI::ValidationError& e) {
        return usage_error(e.what());
    } catch (const std::invalid_argument& e) {
        return usage_error(e.what());
    } catch (const std::exception& e) {
        return run_error(e.what());
    }
}

inline int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace attain
