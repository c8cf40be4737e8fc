#include <catch2/catch.hpp>

#include "attain/cli.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace attain;
using namespace attain::testsupport;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;

    TempDir() {
        path = fs::temp_directory_path() /
               ("attain_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int cli(std::initializer_list<std::string> args) { return run_cli(std::vector<std::string>(args)); }

std::string shipped_problem() { return std::string(ATTAIN_PROBLEM_DIR) + "/two_scenario.json"; }

}  // namespace

TEST_CASE("validate command", "[cli]") {
    CHECK(cli({"validate", shipped_problem()}) == 0);

    TempDir tmp;
    const std::string bad = tmp.file("bad.json");
    write_text_file(bad, R"({"schema":1,"parameters":{"dim":1,"init":[0]},"weights":[-1],
        "scenarios":[{"id":"s","dynamics":["-x0"],"x0":[1],"tf":1}]})");
    CHECK(cli({"validate", bad}) == 1);
}

TEST_CASE("usage errors exit 2", "[cli]") {
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"simulate", shipped_problem()}) == 2);              // missing required flags
    CHECK(cli({"attain", shipped_problem()}) == 2);                // missing --out
    CHECK(cli({}) == 2);
    TempDir tmp;
    CHECK(cli({"simulate", shipped_problem(), "--scenario", "nope", "--out",
               tmp.file("t.csv")}) == 2);                          // unknown scenario id
}

TEST_CASE("missing problem file exits 1", "[cli]") {
    TempDir tmp;
    CHECK(cli({"validate", tmp.file("absent.json")}) == 1);
}

TEST_CASE("simulate output equals the library trajectory byte for byte", "[cli]") {
    TempDir tmp;
    const std::string out = tmp.file("traj.csv");
    REQUIRE(cli({"simulate", shipped_problem(), "--scenario", "nominal", "--theta", "1.5,0.75",
                 "--out", out}) == 0);

    const auto doc = load_problem_document(read_text_file(shipped_problem()));
    const Trajectory traj = integrate(doc.spec.scenarios[0], ParameterVector{{1.5, 0.75}},
                                      doc.spec.options.integrator_steps);
    CHECK(read_text_file(out) == trajectory_to_csv(traj));
}

TEST_CASE("stage1 output equals the library goal set byte for byte", "[cli]") {
    TempDir tmp;
    const std::string out = tmp.file("goals.json");
    REQUIRE(cli({"stage1", shipped_problem(), "--out", out}) == 0);

    const auto doc = load_problem_document(read_text_file(shipped_problem()));
    const GoalSet goals = run_stage1(doc.spec, doc.spec.options);
    CHECK(read_text_file(out) == goal_set_to_json(goals));
}

TEST_CASE("attain consumes goals and matches the library solution", "[cli]") {
    TempDir tmp;
    const std::string goals_path = tmp.file("goals.json");
    const std::string sol_path = tmp.file("sol.json");
    REQUIRE(cli({"stage1", shipped_problem(), "--out", goals_path}) == 0);
    REQUIRE(cli({"attain", shipped_problem(), "--goals", goals_path, "--out", sol_path}) == 0);

    const auto doc = load_problem_document(read_text_file(shipped_problem()));
    const GoalSet goals = goal_set_from_json(read_text_file(goals_path));
    const GoalSolution sol = run_goal_attainment(doc.spec, goals, doc.spec.options);
    CHECK(read_text_file(sol_path) == goal_solution_to_json(sol));
}

TEST_CASE("attain without goals runs stage 1 implicitly", "[cli]") {
    TempDir tmp;
    const std::string sol_path = tmp.file("sol.json");
    CHECK(cli({"attain", shipped_problem(), "--out", sol_path}) == 0);
    CHECK(fs::exists(sol_path));
}

TEST_CASE("attain honors --aggregation", "[cli]") {
    TempDir tmp;
    const std::string goals_path = tmp.file("goals.json");
    const std::string sol_path = tmp.file("sol.json");
    REQUIRE(cli({"stage1", shipped_problem(), "--out", goals_path}) == 0);
    REQUIRE(cli({"attain", shipped_problem(), "--goals", goals_path, "--aggregation",
                 "weighted_sum", "--out", sol_path}) == 0);
    CHECK(read_text_file(sol_path).find("\"aggregation\": \"weighted_sum\"") !=
          std::string::npos);
    CHECK(cli({"attain", shipped_problem(), "--goals", goals_path, "--aggregation", "bogus",
               "--out", sol_path}) == 2);
}

TEST_CASE("sweep emits one plot row per weight vector", "[cli]") {
    TempDir tmp;
    const std::string goals_path = tmp.file("goals.json");
    const std::string sweep_path = tmp.file("sweep.csv");
    const std::string plot_path = tmp.file("plot.csv");
    const std::string weights_path = tmp.file("w.csv");
    write_text_file(weights_path, "0.5,0.5\n0.8,0.2\n0.2,0.8\n");

    REQUIRE(cli({"stage1", shipped_problem(), "--out", goals_path}) == 0);
    REQUIRE(cli({"sweep", shipped_problem(), "--goals", goals_path, "--weights-file",
                 weights_path, "--out", sweep_path, "--plot-data", plot_path}) == 0);

    auto data_rows = [](const std::string& text) {
        std::size_t rows = 0;
        std::istringstream is(text);
        std::string line;
        std::getline(is, line);  // header
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        return rows;
    };
    CHECK(data_rows(read_text_file(plot_path)) == 3);
    CHECK(data_rows(read_text_file(sweep_path)) == 3);
}

TEST_CASE("attain trace flag writes the iteration log", "[cli]") {
    TempDir tmp;
    const std::string goals_path = tmp.file("goals.json");
    const std::string sol_path = tmp.file("sol.json");
    const std::string trace_path = tmp.file("trace.csv");
    REQUIRE(cli({"stage1", shipped_problem(), "--out", goals_path}) == 0);
    REQUIRE(cli({"attain", shipped_problem(), "--goals", goals_path, "--out", sol_path,
                 "--trace", trace_path}) == 0);
    const std::string trace = read_text_file(trace_path);
    CHECK(trace.rfind("iteration,objective,merit,step_length,kkt_residual\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') >= 2);
}

TEST_CASE("attain prints the attainment levels", "[cli]") {
    // conflicting quadratics with zero goals: gamma = (2, 2) at theta* = 0
    TempDir tmp;
    const std::string problem_path = tmp.file("quads.json");
    const std::string goals_path = tmp.file("goals.json");
    const std::string sol_path = tmp.file("sol.json");
    write_text_file(problem_path, problem_to_json(conflicting_quadratics_spec()));
    write_text_file(goals_path, goal_set_to_json(zero_goals(conflicting_quadratics_spec())));

    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    const int rc = cli({"attain", problem_path, "--goals", goals_path, "--aggregation", "minimax",
                        "--out", sol_path});
    std::cout.rdbuf(old);
    REQUIRE(rc == 0);
    CHECK(captured.str().find("gamma = (2.000") != std::string::npos);

    const GoalSolution sol = run_goal_attainment(load_problem(read_text_file(problem_path)),
                                                 goal_set_from_json(read_text_file(goals_path)),
                                                 load_problem(read_text_file(problem_path)).options);
    CHECK(read_text_file(sol_path) == goal_solution_to_json(sol));
    CHECK(sol.gamma[0] == Approx(2.0).margin(1e-3));
    CHECK(sol.gamma[1] == Approx(2.0).margin(1e-3));
}

TEST_CASE("ATTAIN_SEED overrides the options seed", "[cli]") {
    TempDir tmp;
    const std::string out_env = tmp.file("goals_env.json");
    ::setenv("ATTAIN_SEED", "777", 1);
    const int rc = cli({"stage1", shipped_problem(), "--out", out_env});
    ::unsetenv("ATTAIN_SEED");
    REQUIRE(rc == 0);

    auto doc = load_problem_document(read_text_file(shipped_problem()));
    doc.spec.options.seed = 777;
    const GoalSet goals = run_stage1(doc.spec, doc.spec.options);
    CHECK(read_text_file(out_env) == goal_set_to_json(goals));
}

TEST_CASE("jobs flag leaves results byte-identical", "[cli]") {
    TempDir tmp;
    const std::string serial = tmp.file("serial.json");
    const std::string parallel = tmp.file("parallel.json");
    REQUIRE(cli({"stage1", shipped_problem(), "--out", serial}) == 0);
    REQUIRE(cli({"--jobs", "4", "stage1", shipped_problem(), "--out", parallel}) == 0);
    CHECK(read_text_file(serial) == read_text_file(parallel));
}
