#include <catch2/catch.hpp>

#include "attain/cost.hpp"
#include "attain/detail/rng.hpp"
#include "attain/model.hpp"

#include <string>

using namespace attain;

namespace {

ProblemSpec well_formed_two_scenario() {
    ProblemSpec spec;
    spec.p = 2;
    spec.theta_bounds = BoxSet{{0.0, 0.0}, {5.0, 5.0}};
    spec.theta_init.values = {1.0, 1.0};
    spec.weights.w = {0.5, 0.5};
    for (int i = 0; i < 2; ++i) {
        Scenario sc;
        sc.id = i == 0 ? "a" : "b";
        sc.dynamics = {parse("x1"), parse("-theta0*x0 - theta1*x1")};
        sc.x0.values = {1.0, 0.0};
        sc.t0 = 0.0;
        sc.tf = 2.0;
        sc.terminal_cost = parse("x0^2");
        sc.running_cost = parse("x0^2 + x1^2");
        sc.state_bounds = BoxSet::unbounded(2);
        spec.scenarios.push_back(std::move(sc));
    }
    return spec;
}

bool has_finding(const ValidationReport& r, const std::string& rule) {
    for (const auto& f : r.findings)
        if (f.rule == rule) return true;
    return false;
}

}  // namespace

TEST_CASE("well-formed spec validates clean", "[model]") {
    const auto report = validate_problem(well_formed_two_scenario());
    for (const auto& f : report.findings)
        UNSCOPED_INFO(f.scenario_id << " " << f.field << ": " << f.rule);
    CHECK(report.ok());
}

TEST_CASE("state dimension mismatch is a finding", "[model]") {
    auto spec = well_formed_two_scenario();
    spec.scenarios[1].dynamics = {parse("x1"), parse("-x0"), parse("0")};
    spec.scenarios[1].x0.values = {1.0, 0.0, 0.0};
    spec.scenarios[1].state_bounds = BoxSet::unbounded(3);
    const auto report = validate_problem(spec);
    CHECK(has_finding(report, "state dimension mismatch"));
    bool names_scenario = false;
    for (const auto& f : report.findings)
        if (f.rule == "state dimension mismatch" && f.scenario_id == "b") names_scenario = true;
    CHECK(names_scenario);
}

TEST_CASE("non-positive weight is a finding", "[model]") {
    auto spec = well_formed_two_scenario();
    spec.weights.w = {0.5, -0.1};
    CHECK(has_finding(validate_problem(spec), "weight not positive"));
}

TEST_CASE("assorted invariant violations", "[model]") {
    auto spec = well_formed_two_scenario();

    SECTION("tf <= t0") {
        spec.scenarios[0].tf = spec.scenarios[0].t0;
        CHECK(has_finding(validate_problem(spec), "non-positive horizon"));
    }
    SECTION("x0 outside state bounds") {
        spec.scenarios[0].state_bounds = BoxSet{{-0.5, -0.5}, {0.5, 0.5}};
        CHECK(has_finding(validate_problem(spec), "initial state outside bounds"));
    }
    SECTION("theta_init outside bounds") {
        spec.theta_init.values = {7.0, 1.0};
        CHECK(has_finding(validate_problem(spec), "initial parameters outside bounds"));
    }
    SECTION("malformed box") {
        spec.theta_bounds.lower = {1.0, 1.0};
        spec.theta_bounds.upper = {0.0, 5.0};
        CHECK(has_finding(validate_problem(spec), "bounds malformed"));
    }
    SECTION("dynamics component count") {
        spec.scenarios[0].dynamics.pop_back();
        CHECK(has_finding(validate_problem(spec), "dynamics dimension mismatch"));
    }
    SECTION("unknown variable in dynamics") {
        spec.scenarios[0].dynamics[0] = parse("x5");
        const auto report = validate_problem(spec);
        CHECK(has_finding(report, "unknown variable"));
    }
    SECTION("t in terminal cost is out of context") {
        spec.scenarios[0].terminal_cost = parse("t*x0");
        CHECK(has_finding(validate_problem(spec), "unknown variable"));
    }
    SECTION("tf allowed in terminal cost") {
        spec.scenarios[0].terminal_cost = parse("tf*x0");
        CHECK(validate_problem(spec).ok());
    }
    SECTION("duplicate scenario ids") {
        spec.scenarios[1].id = "a";
        CHECK(has_finding(validate_problem(spec), "duplicate scenario id"));
    }
    SECTION("bad options") {
        spec.options.kkt_tol = 0.0;
        spec.options.integrator_steps = 0;
        const auto report = validate_problem(spec);
        CHECK(has_finding(report, "tolerance not positive"));
        CHECK(has_finding(report, "integrator steps below one"));
    }
}

TEST_CASE("validate_problem is pure", "[model]") {
    const auto spec = well_formed_two_scenario();
    const auto r1 = validate_problem(spec);
    const auto r2 = validate_problem(spec);
    REQUIRE(r1.count() == r2.count());
    for (std::size_t i = 0; i < r1.count(); ++i) {
        CHECK(r1.findings[i].field == r2.findings[i].field);
        CHECK(r1.findings[i].rule == r2.findings[i].rule);
    }
}

TEST_CASE("accepted specs evaluate without dimension errors", "[model][property]") {
    attain::detail::SplitMix64 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.next() % 3;
        const std::size_t p = 1 + rng.next() % 3;
        const std::size_t n_scen = 1 + rng.next() % 3;
        ProblemSpec spec;
        spec.p = p;
        spec.theta_bounds = BoxSet{Vec(p, -2.0), Vec(p, 2.0)};
        spec.theta_init.values.assign(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) spec.theta_init.values[j] = rng.uniform(-1.5, 1.5);
        spec.weights.w.assign(n_scen, 0.0);
        for (auto& w : spec.weights.w) w = rng.uniform(0.1, 2.0);
        for (std::size_t s = 0; s < n_scen; ++s) {
            Scenario sc;
            sc.id = "s" + std::to_string(s);
            for (std::size_t j = 0; j < n; ++j) {
                // smooth, contracting dynamics so nothing diverges
                const std::string xj = "x" + std::to_string(j);
                const std::string tj = "theta" + std::to_string(rng.next() % p);
                sc.dynamics.push_back(parse("-" + xj + " + 0.1*sin(" + tj + ")"));
            }
            sc.x0.values.assign(n, 0.0);
            for (auto& v : sc.x0.values) v = rng.uniform(-1.0, 1.0);
            sc.t0 = 0.0;
            sc.tf = rng.uniform(0.5, 2.0);
            sc.terminal_cost = parse("x0^2 + theta0^2");
            sc.running_cost = parse("x" + std::to_string(n - 1) + "^2");
            sc.state_bounds = BoxSet::unbounded(n);
            spec.scenarios.push_back(std::move(sc));
        }
        spec.options.integrator_steps = 32;

        REQUIRE(validate_problem(spec).ok());
        const auto costs = evaluate_all(spec, spec.theta_init);
        REQUIRE(costs.size() == n_scen);
        for (const auto& c : costs) CHECK(std::isfinite(c.total));
    }
}
