#include <catch2/catch.hpp>

#include "attain/detail/rng.hpp"
#include "attain/io.hpp"

#include <regex>
#include <string>

using namespace attain;

namespace {

const char* kMinimalProblem = R"json({
  "schema": 1,
  "parameters": {"dim": 1, "init": [0.5]},
  "weights": [1.0],
  "scenarios": [
    {"id": "only", "dynamics": ["-x0"], "x0": [1.0], "tf": 1.0, "running_cost": "x0^2"}
  ]
})json";

std::string with_replacement(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

bool spec_equal(const ProblemSpec& a, const ProblemSpec& b) {
    if (a.p != b.p || a.scenarios.size() != b.scenarios.size()) return false;
    if (a.theta_bounds.lower != b.theta_bounds.lower) return false;
    if (a.theta_bounds.upper != b.theta_bounds.upper) return false;
    if (a.theta_init.values != b.theta_init.values) return false;
    if (a.weights.w != b.weights.w) return false;
    for (std::size_t i = 0; i < a.scenarios.size(); ++i) {
        const Scenario& x = a.scenarios[i];
        const Scenario& y = b.scenarios[i];
        if (x.id != y.id || x.t0 != y.t0 || x.tf != y.tf) return false;
        if (x.x0.values != y.x0.values) return false;
        if (x.state_bounds.lower != y.state_bounds.lower) return false;
        if (x.state_bounds.upper != y.state_bounds.upper) return false;
        if (x.dynamics.size() != y.dynamics.size()) return false;
        for (std::size_t d = 0; d < x.dynamics.size(); ++d)
            if (to_string(x.dynamics[d]) != to_string(y.dynamics[d])) return false;
        if (to_string(x.terminal_cost) != to_string(y.terminal_cost)) return false;
        if (to_string(x.running_cost) != to_string(y.running_cost)) return false;
    }
    const SolverOptions& p = a.options;
    const SolverOptions& q = b.options;
    return p.integrator_steps == q.integrator_steps && p.fd_step_scale == q.fd_step_scale &&
           p.kkt_tol == q.kkt_tol && p.feas_tol == q.feas_tol && p.max_iter == q.max_iter &&
           p.max_backtracks == q.max_backtracks && p.aggregation == q.aggregation &&
           p.state_bound_mode == q.state_bound_mode &&
           p.penalty_coefficient == q.penalty_coefficient &&
           p.multistart_count == q.multistart_count && p.seed == q.seed &&
           p.normalize_weights == q.normalize_weights && p.warm_start == q.warm_start &&
           p.jobs == q.jobs;
}

}  // namespace

TEST_CASE("minimal problem file loads with defaults", "[io]") {
    const ProblemSpec spec = load_problem(kMinimalProblem);
    CHECK(spec.scenarios.size() == 1);
    CHECK(spec.p == 1);
    CHECK(spec.scenarios[0].t0 == 0.0);                       // defaulted
    CHECK(to_string(spec.scenarios[0].terminal_cost) == "0"); // defaulted
    CHECK(spec.theta_bounds.lower[0] == -kInf);               // open bounds
    CHECK(spec.options.integrator_steps == 200);              // default options
    CHECK(spec.options.aggregation == Aggregation::minimax);
    CHECK(validate_problem(spec).ok());
}

TEST_CASE("load errors carry document paths", "[io]") {
    SECTION("missing tf") {
        const std::string text = with_replacement(kMinimalProblem, "\"tf\": 1.0, ", "");
        try {
            load_problem(text);
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("scenarios[0].tf") != std::string::npos);
        }
    }
    SECTION("negative weight cites the positivity rule") {
        const std::string text = with_replacement(kMinimalProblem, "[1.0]", "[-0.1]");
        try {
            load_problem(text);
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            const std::string what = e.what();
            CHECK(what.find("weights[0]") != std::string::npos);
            CHECK(what.find("positive") != std::string::npos);
        }
    }
    SECTION("expression syntax error names scenario and field") {
        const std::string text = with_replacement(kMinimalProblem, "\"x0^2\"", "\"x0^\"");
        try {
            load_problem(text);
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            const std::string what = e.what();
            CHECK(what.find("scenarios[0].running_cost") != std::string::npos);
            CHECK(what.find("'only'") != std::string::npos);
            CHECK(what.find("offset") != std::string::npos);
        }
    }
    SECTION("malformed JSON reports a byte offset") {
        try {
            load_problem("{\"schema\": 1,,}");
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
        }
    }
    SECTION("unknown option key") {
        const std::string text =
            with_replacement(std::string(kMinimalProblem), "]\n}", "],\n \"options\": {\"spd\": 1}\n}");
        CHECK_THROWS_AS(load_problem(text), LoadError);
    }
    SECTION("strict mode fails on validation findings with a path") {
        const std::string text = with_replacement(kMinimalProblem, "\"tf\": 1.0", "\"tf\": 0.0");
        try {
            load_problem(text, true);
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("scenarios[0].tf") != std::string::npos);
        }
        CHECK_NOTHROW(load_problem(text, false));
    }
}

TEST_CASE("every load error message carries a path or byte offset", "[io][property]") {
    const std::vector<std::string> broken = {
        "not json at all",
        "[1,2,3]",
        R"({"schema": 2, "parameters": {"dim":1,"init":[0]}, "weights":[1], "scenarios":[]})",
        with_replacement(kMinimalProblem, "\"dim\": 1", "\"dim\": \"one\""),
        with_replacement(kMinimalProblem, "\"x0\": [1.0]", "\"x0\": [true]"),
        with_replacement(kMinimalProblem, "\"id\": \"only\"", "\"id\": 7"),
        with_replacement(kMinimalProblem, "\"dynamics\": [\"-x0\"]", "\"dynamics\": \"-x0\""),
    };
    const std::regex locator(R"((scenarios\[\d+\]|parameters|weights|schema|\$|byte offset|goals\[\d+\]))");
    for (const auto& text : broken) {
        try {
            load_problem(text);
            FAIL("expected LoadError for: " << text);
        } catch (const LoadError& e) {
            INFO(e.what());
            CHECK(std::regex_search(std::string(e.what()), locator));
        }
    }
}

TEST_CASE("problem write/load round-trip is the identity", "[io][property]") {
    attain::detail::SplitMix64 rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        ProblemSpec spec;
        spec.p = 1 + rng.next() % 3;
        spec.theta_bounds = BoxSet::unbounded(spec.p);
        for (std::size_t j = 0; j < spec.p; ++j) {
            if (rng.uniform() < 0.7) spec.theta_bounds.lower[j] = rng.uniform(-3.0, -0.5);
            if (rng.uniform() < 0.7) spec.theta_bounds.upper[j] = rng.uniform(0.5, 3.0);
        }
        spec.theta_init.values.assign(spec.p, 0.0);
        for (auto& v : spec.theta_init.values) v = rng.uniform(-0.4, 0.4);
        const std::size_t n_scen = 1 + rng.next() % 3;
        spec.weights.w.assign(n_scen, 0.0);
        for (auto& w : spec.weights.w) w = rng.uniform(0.1, 3.0);
        for (std::size_t s = 0; s < n_scen; ++s) {
            Scenario sc;
            sc.id = "scen_" + std::to_string(s);
            const std::size_t n = 1 + rng.next() % 2;
            for (std::size_t d = 0; d < n; ++d)
                sc.dynamics.push_back(parse("-x" + std::to_string(d) + "*" +
                                            std::to_string(1 + (rng.next() % 3))));
            sc.x0.values.assign(n, 0.0);
            for (auto& v : sc.x0.values) v = rng.uniform(-1.0, 1.0);
            sc.t0 = rng.uniform(0.0, 0.5);
            sc.tf = sc.t0 + rng.uniform(0.5, 2.0);
            sc.terminal_cost = parse("x0^2 + 0.25");
            sc.running_cost = parse("x0^2 + theta0^2/3");
            sc.state_bounds = BoxSet::unbounded(n);
            if (rng.uniform() < 0.5) sc.state_bounds.lower.assign(n, -10.0);
            spec.scenarios.push_back(std::move(sc));
        }
        spec.options.integrator_steps = 40 + static_cast<int>(rng.next() % 100);
        spec.options.seed = rng.next();
        spec.options.aggregation =
            rng.uniform() < 0.5 ? Aggregation::minimax : Aggregation::weighted_sum;
        spec.options.multistart_count = 1 + static_cast<int>(rng.next() % 4);

        const std::string text = problem_to_json(spec);
        const ProblemSpec loaded = load_problem(text, false);
        CHECK(spec_equal(spec, loaded));
        // and the writer is stable under one round-trip
        CHECK(problem_to_json(loaded) == text);
    }
}

TEST_CASE("goal set JSON round-trips exactly", "[io]") {
    GoalSet goals;
    goals.entries.push_back(
        {"a", ParameterVector{{1.0 / 3.0, 2.0 / 7.0}}, 0.12345678901234567, NlpStatus::converged,
         ""});
    goals.entries.push_back(
        {"b", ParameterVector{{-5.5}}, -3.25, NlpStatus::max_iter, ""});
    const std::string text = goal_set_to_json(goals);
    CHECK(text.find("\"J_star\"") != std::string::npos);
    CHECK(text.find("0.33333333333333331") != std::string::npos);  // 17 significant digits

    const GoalSet back = goal_set_from_json(text);
    REQUIRE(back.size() == 2);
    CHECK(back.entries[0].scenario_id == "a");
    CHECK(back.entries[0].J_star == goals.entries[0].J_star);
    CHECK(back.entries[0].theta_star.values == goals.entries[0].theta_star.values);
    CHECK(back.entries[0].status == NlpStatus::converged);
    CHECK(back.entries[1].status == NlpStatus::max_iter);
}

TEST_CASE("user-authored goal files need only id and J_star", "[io]") {
    const GoalSet goals = goal_set_from_json(R"([{"id": "x", "J_star": 1.5}])");
    REQUIRE(goals.size() == 1);
    CHECK(goals.entries[0].J_star == 1.5);
    CHECK(goals.entries[0].status == NlpStatus::converged);
}

TEST_CASE("sweep CSV layout", "[io]") {
    SECTION("empty table is a header row only") {
        const std::string csv = sweep_table_to_csv(SweepTable{}, 2, 1);
        CHECK(csv == "w_0,w_1,theta_0,gamma_0,gamma_1,J_0,J_1,objective,status\n");
    }
    SECTION("failed rows keep their weights") {
        SweepTable table;
        SweepRow row;
        row.weights.w = {0.25, 0.75};
        row.error = "solver exploded";
        table.rows.push_back(row);
        const std::string csv = sweep_table_to_csv(table, 2, 1);
        CHECK(csv.find("0.25,0.75,nan") != std::string::npos);
        CHECK(csv.find("error") != std::string::npos);
    }
}

TEST_CASE("weights CSV accepts an optional header", "[io]") {
    const auto plain = load_weights_csv("0.5,0.5\n0.9,0.1\n");
    REQUIRE(plain.size() == 2);
    CHECK(plain[1].w == Vec{0.9, 0.1});
    const auto headed = load_weights_csv("w_a,w_b\n0.5,0.5\n");
    REQUIRE(headed.size() == 1);
    CHECK_THROWS_AS(load_weights_csv("0.5,0.5\nnot,numbers\n"), LoadError);
}

TEST_CASE("result writers are byte-deterministic", "[io]") {
    GoalSet goals;
    goals.entries.push_back({"a", ParameterVector{{0.1}}, 0.7, NlpStatus::converged, ""});
    CHECK(goal_set_to_json(goals) == goal_set_to_json(goals));

    GoalSolution sol;
    sol.theta_star.values = {1.0};
    sol.gamma = {0.5};
    sol.costs = {CostValue{1.0, 0.25, 0.75, 0.0}};
    sol.objective = 0.5;
    sol.scenario_ids = {"a"};
    sol.goals = {0.5};
    sol.weights_used = {1.0};
    sol.solver.status = NlpStatus::converged;
    const std::string a = goal_solution_to_json(sol);
    CHECK(a == goal_solution_to_json(sol));
    CHECK(a.find("\"kkt_residual\"") != std::string::npos);
}
