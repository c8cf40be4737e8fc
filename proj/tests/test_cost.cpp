#include <catch2/catch.hpp>

#include "attain/cost.hpp"
#include "attain/io.hpp"

#include <cmath>

using namespace attain;

namespace {

Scenario unit_running_scenario(double tf) {
    Scenario sc;
    sc.id = "unit";
    sc.dynamics = {parse("0")};
    sc.x0.values = {0.0};
    sc.t0 = 0.0;
    sc.tf = tf;
    sc.terminal_cost = parse("0");
    sc.running_cost = parse("1");
    sc.state_bounds = BoxSet::unbounded(1);
    return sc;
}

Scenario decay_quadratic_scenario() {
    Scenario sc;
    sc.id = "decay";
    sc.dynamics = {parse("-x0")};
    sc.x0.values = {1.0};
    sc.t0 = 0.0;
    sc.tf = 1.0;
    sc.terminal_cost = parse("0");
    sc.running_cost = parse("x0^2");
    sc.state_bounds = BoxSet::unbounded(1);
    return sc;
}

const ParameterVector kNoTheta{};

}  // namespace

TEST_CASE("cost of unit integrand equals the horizon", "[cost]") {
    SolverOptions opts;
    const CostValue cv = evaluate_cost(unit_running_scenario(2.0), kNoTheta, opts);
    CHECK(cv.total == Approx(2.0).margin(1e-9));
    CHECK(cv.terminal_part == 0.0);
    CHECK(cv.bound_penalty == 0.0);
}

TEST_CASE("analytic decay cost (1 - e^-2)/2", "[cost]") {
    SolverOptions opts;
    opts.integrator_steps = 200;
    const CostValue cv = evaluate_cost(decay_quadratic_scenario(), kNoTheta, opts);
    CHECK(cv.total == Approx(0.4323323583816936).margin(1e-6));
    CHECK(cv.running_part == Approx(cv.total).margin(1e-12));
}

TEST_CASE("terminal-only cost is exact", "[cost]") {
    Scenario sc = unit_running_scenario(1.0);
    sc.x0.values = {3.0};
    sc.running_cost = parse("0");
    sc.terminal_cost = parse("x0^2");
    const CostValue cv = evaluate_cost(sc, kNoTheta, SolverOptions{});
    CHECK(cv.total == 9.0);
    CHECK(cv.terminal_part == 9.0);
}

TEST_CASE("total decomposition identity", "[cost]") {
    SolverOptions opts;
    opts.state_bound_mode = StateBoundMode::penalize;
    opts.penalty_coefficient = 10.0;
    Scenario sc = unit_running_scenario(2.0);
    sc.dynamics = {parse("1")};
    sc.terminal_cost = parse("x0");
    sc.state_bounds = BoxSet{{-kInf}, {1.0}};  // violated past t = 1
    const CostValue cv = evaluate_cost(sc, kNoTheta, opts);
    CHECK(cv.bound_penalty > 0.0);
    CHECK(cv.total ==
          Approx(cv.terminal_part + cv.running_part + cv.bound_penalty).margin(1e-12));
}

TEST_CASE("state bound modes", "[cost]") {
    Scenario sc = unit_running_scenario(2.0);
    sc.dynamics = {parse("1")};
    sc.state_bounds = BoxSet{{-kInf}, {1.0}};
    SolverOptions opts;

    SECTION("monitor ignores the violation") {
        opts.state_bound_mode = StateBoundMode::monitor;
        CHECK(evaluate_cost(sc, kNoTheta, opts).bound_penalty == 0.0);
    }
    SECTION("penalize adds coefficient * sum of squared excess") {
        opts.state_bound_mode = StateBoundMode::penalize;
        opts.penalty_coefficient = 7.0;
        const CostValue cv = evaluate_cost(sc, kNoTheta, opts);
        const auto report =
            check_state_bounds(integrate(sc, kNoTheta, opts.integrator_steps), sc.state_bounds);
        CHECK(cv.bound_penalty == Approx(7.0 * report.total_squared_excess()).margin(1e-12));
    }
    SECTION("reject raises") {
        opts.state_bound_mode = StateBoundMode::reject;
        CHECK_THROWS_AS(evaluate_cost(sc, kNoTheta, opts), BoundRejectError);
    }
}

TEST_CASE("evaluate_all matches per-scenario evaluation and order", "[cost]") {
    ProblemSpec spec;
    spec.p = 0;
    spec.theta_bounds = BoxSet::unbounded(0);
    spec.weights.w = {0.5, 0.5};
    spec.scenarios = {unit_running_scenario(1.0), unit_running_scenario(2.0)};
    spec.scenarios[1].id = "unit2";

    const auto costs = evaluate_all(spec, kNoTheta);
    REQUIRE(costs.size() == 2);
    CHECK(costs[0].total == Approx(1.0).margin(1e-9));
    CHECK(costs[1].total == Approx(2.0).margin(1e-9));

    SECTION("duplicate scenarios give equal values") {
        ProblemSpec twin = spec;
        twin.scenarios[1] = twin.scenarios[0];
        twin.scenarios[1].id = "copy";
        const auto pair = evaluate_all(twin, kNoTheta);
        CHECK(pair[0].total == pair[1].total);
    }
    SECTION("failures carry scenario ids") {
        ProblemSpec broken = spec;
        broken.scenarios[1].running_cost = parse("log(0-1-t)");
        try {
            evaluate_all(broken, kNoTheta);
            FAIL("expected error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("unit2") != std::string::npos);
        }
    }
}

TEST_CASE("central-difference gradient", "[cost]") {
    const double scale = default_fd_step_scale();
    SECTION("quadratic") {
        auto f = [](const ParameterVector& th) {
            return th[0] * th[0] + th[1] * th[1];
        };
        const Vec g = gradient(f, ParameterVector{{1.0, 2.0}}, scale);
        CHECK(g[0] == Approx(2.0).margin(1e-7));
        CHECK(g[1] == Approx(4.0).margin(1e-7));
    }
    SECTION("constant") {
        auto f = [](const ParameterVector&) { return 4.5; };
        const Vec g = gradient(f, ParameterVector{{0.3, -2.0, 5.0}}, scale);
        for (double gj : g) CHECK(gj == Approx(0.0).margin(1e-9));
    }
    SECTION("sin at zero") {
        auto f = [](const ParameterVector& th) { return std::sin(th[0]); };
        const Vec g = gradient(f, ParameterVector{{0.0}}, scale);
        CHECK(g[0] == Approx(1.0).margin(1e-9));
    }
    SECTION("probe failures name component and direction") {
        auto f = [](const ParameterVector& th) {
            if (th[0] < 0.0) throw std::runtime_error("boom");
            return th[0];
        };
        try {
            gradient(f, ParameterVector{{0.0}}, scale);
            FAIL("expected error");
        } catch (const std::exception& e) {
            const std::string what = e.what();
            CHECK(what.find("component 0") != std::string::npos);
            CHECK(what.find("(-)") != std::string::npos);
        }
    }
}

TEST_CASE("FD gradient agrees with an independent forward scheme", "[cost][property]") {
    // Simulated cost with analytic smoothness; guards against step-size
    // pathologies in the central scheme.
    const auto doc = load_problem_document(read_text_file(ATTAIN_PROBLEM_DIR "/two_scenario.json"));
    const ProblemSpec& spec = doc.spec;
    const double scale = spec.options.fd_step_scale;
    for (std::size_t s = 0; s < spec.scenarios.size(); ++s) {
        const CostEvaluator evaluator(spec.scenarios[s], spec.p, spec.options);
        auto f = [&](const ParameterVector& th) { return evaluator.evaluate(th).total; };
        const ParameterVector theta{{1.3, 0.8}};
        const Vec central = gradient(f, theta, scale);
        for (std::size_t j = 0; j < spec.p; ++j) {
            const double h = detail::fd_step(theta[j], scale) / 10.0;
            ParameterVector probe = theta;
            probe.values[j] += h;
            const double forward = (f(probe) - f(theta)) / h;
            CHECK(central[j] == Approx(forward).epsilon(1e-4));
        }
    }
}

TEST_CASE("cost is invariant under refinement beyond convergence", "[cost]") {
    const auto doc = load_problem_document(read_text_file(ATTAIN_PROBLEM_DIR "/two_scenario.json"));
    for (const auto& sc : doc.spec.scenarios) {
        SolverOptions coarse = doc.spec.options;
        SolverOptions fine = doc.spec.options;
        fine.integrator_steps = 2 * coarse.integrator_steps;
        const double a = evaluate_cost(sc, doc.spec.theta_init, coarse).total;
        const double b = evaluate_cost(sc, doc.spec.theta_init, fine).total;
        CHECK(std::abs(a - b) < 1e-6);
    }
}
