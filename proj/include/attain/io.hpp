#pragma once

// Problem-file ingestion (JSON, schema 1), schema validation, and result
// persistence. Loading goes through nlohmann/json; results are written by a
// small fixed-order serializer so identical inputs give byte-identical files,
// with every float at 17 significant digits for exact round-trips.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "attain/detail/format.hpp"
#include "attain/model.hpp"
#include "attain/pipeline.hpp"

namespace attain {

/// Load failure; the message always carries a document path (like
/// `scenarios[1].tf`) or a byte offset.
class LoadError : public std::runtime_error {
public:
    explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

namespace io_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw LoadError(path + ": " + what);
}

inline const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required field");
    return *it;
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

inline bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected a boolean");
    return j.get<bool>();
}

inline Vec as_vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    Vec out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

/// Bound arrays allow null entries for an unbounded side.
inline Vec as_bound_vector(const json& j, const std::string& path, double open_side) {
    if (!j.is_array()) fail(path, "expected an array of numbers or nulls");
    Vec out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].is_null())
            out.push_back(open_side);
        else
            out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline Expr parse_expr_field(const json& j, const std::string& path, const std::string& id) {
    const std::string text = as_string(j, path);
    try {
        return parse(text);
    } catch (const ParseError& e) {
        fail(path, "scenario '" + id + "': " + e.what());
    }
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) known = true;
        if (!known) fail(path + "." + it.key(), "unknown field");
    }
}

inline Aggregation parse_aggregation(const std::string& s, const std::string& path) {
    if (s == "minimax") return Aggregation::minimax;
    if (s == "weighted_sum") return Aggregation::weighted_sum;
    fail(path, "expected 'minimax' or 'weighted_sum'");
}

inline StateBoundMode parse_state_bound_mode(const std::string& s, const std::string& path) {
    if (s == "monitor") return StateBoundMode::monitor;
    if (s == "penalize") return StateBoundMode::penalize;
    if (s == "reject") return StateBoundMode::reject;
    fail(path, "expected 'monitor', 'penalize' or 'reject'");
}

inline WarmStart parse_warm_start(const std::string& s, const std::string& path) {
    if (s == "theta_init") return WarmStart::theta_init;
    if (s == "best_stage1") return WarmStart::best_stage1;
    fail(path, "expected 'theta_init' or 'best_stage1'");
}

inline NlpStatus parse_nlp_status(const std::string& s, const std::string& path) {
    if (s == "converged") return NlpStatus::converged;
    if (s == "max_iter") return NlpStatus::max_iter;
    if (s == "line_search_failure") return NlpStatus::line_search_failure;
    if (s == "qp_infeasible") return NlpStatus::qp_infeasible;
    fail(path, "unknown solver status '" + s + "'");
}

inline SolverOptions parse_options(const json& j, const std::string& path) {
    SolverOptions o;
    if (j.is_null()) return o;
    if (!j.is_object()) fail(path, "expected an object");
    reject_unknown_keys(j,
                        {"integrator_steps", "fd_step_scale", "kkt_tol", "feas_tol", "max_iter",
                         "max_backtracks", "aggregation", "state_bound_mode",
                         "penalty_coefficient", "multistart_count", "seed", "normalize_weights",
                         "warm_start", "jobs"},
                        path);
    if (j.contains("integrator_steps"))
        o.integrator_steps = as_int(j["integrator_steps"], path + ".integrator_steps");
    if (j.contains("fd_step_scale"))
        o.fd_step_scale = as_number(j["fd_step_scale"], path + ".fd_step_scale");
    if (j.contains("kkt_tol")) o.kkt_tol = as_number(j["kkt_tol"], path + ".kkt_tol");
    if (j.contains("feas_tol")) o.feas_tol = as_number(j["feas_tol"], path + ".feas_tol");
    if (j.contains("max_iter")) o.max_iter = as_int(j["max_iter"], path + ".max_iter");
    if (j.contains("max_backtracks"))
        o.max_backtracks = as_int(j["max_backtracks"], path + ".max_backtracks");
    if (j.contains("aggregation"))
        o.aggregation = parse_aggregation(as_string(j["aggregation"], path + ".aggregation"),
                                          path + ".aggregation");
    if (j.contains("state_bound_mode"))
        o.state_bound_mode = parse_state_bound_mode(
            as_string(j["state_bound_mode"], path + ".state_bound_mode"),
            path + ".state_bound_mode");
    if (j.contains("penalty_coefficient"))
        o.penalty_coefficient = as_number(j["penalty_coefficient"], path + ".penalty_coefficient");
    if (j.contains("multistart_count"))
        o.multistart_count = as_int(j["multistart_count"], path + ".multistart_count");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) fail(path + ".seed", "expected an integer");
        o.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("normalize_weights"))
        o.normalize_weights = as_bool(j["normalize_weights"], path + ".normalize_weights");
    if (j.contains("warm_start"))
        o.warm_start = parse_warm_start(as_string(j["warm_start"], path + ".warm_start"),
                                        path + ".warm_start");
    if (j.contains("jobs")) o.jobs = as_int(j["jobs"], path + ".jobs");
    return o;
}

}  // namespace io_detail

struct LoadedProblem {
    ProblemSpec spec;
    std::optional<GoalSet> goals;  // goal overrides shipped inside the problem file
    ValidationReport validation;
};

/// Full document load. In strict mode validation findings fail the load;
/// otherwise they are returned for the caller to present.
inline LoadedProblem load_problem_document(const std::string& text, bool strict = true) {
    using io_detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw LoadError("JSON decode error at byte offset " + std::to_string(e.byte) + ": " +
                        e.what());
    }
    if (!doc.is_object()) io_detail::fail("$", "top level must be an object");
    io_detail::reject_unknown_keys(
        doc, {"schema", "name", "description", "parameters", "weights", "scenarios", "goals",
              "options"},
        "$");
    const int schema = io_detail::as_int(io_detail::require(doc, "schema", "$"), "schema");
    if (schema != 1) io_detail::fail("schema", "unsupported schema version");

    LoadedProblem out;
    ProblemSpec& spec = out.spec;

    const json& params = io_detail::require(doc, "parameters", "$");
    io_detail::reject_unknown_keys(params, {"dim", "lower", "upper", "init"}, "parameters");
    const int dim = io_detail::as_int(io_detail::require(params, "dim", "parameters"),
                                      "parameters.dim");
    if (dim < 1) io_detail::fail("parameters.dim", "must be >= 1");
    spec.p = static_cast<std::size_t>(dim);
    spec.theta_bounds = BoxSet::unbounded(spec.p);
    if (params.contains("lower"))
        spec.theta_bounds.lower = io_detail::as_bound_vector(params["lower"], "parameters.lower",
                                                             -kInf);
    if (params.contains("upper"))
        spec.theta_bounds.upper = io_detail::as_bound_vector(params["upper"], "parameters.upper",
                                                             kInf);
    spec.theta_init.values =
        io_detail::as_vector(io_detail::require(params, "init", "parameters"), "parameters.init");

    spec.weights.w =
        io_detail::as_vector(io_detail::require(doc, "weights", "$"), "weights");
    for (std::size_t i = 0; i < spec.weights.size(); ++i)
        if (!(spec.weights[i] > 0.0))
            io_detail::fail("weights[" + std::to_string(i) + "]",
                            "weight not positive: weights must be assigned positive values");

    const json& scen = io_detail::require(doc, "scenarios", "$");
    if (!scen.is_array() || scen.empty()) io_detail::fail("scenarios", "expected a non-empty array");
    for (std::size_t s = 0; s < scen.size(); ++s) {
        const std::string path = "scenarios[" + std::to_string(s) + "]";
        const json& js = scen[s];
        io_detail::reject_unknown_keys(js,
                                       {"id", "dynamics", "x0", "t0", "tf", "terminal_cost",
                                        "running_cost", "state_lower", "state_upper"},
                                       path);
        Scenario sc;
        sc.id = io_detail::as_string(io_detail::require(js, "id", path), path + ".id");
        const json& dyn = io_detail::require(js, "dynamics", path);
        if (!dyn.is_array()) io_detail::fail(path + ".dynamics", "expected an array of expressions");
        for (std::size_t d = 0; d < dyn.size(); ++d)
            sc.dynamics.push_back(io_detail::parse_expr_field(
                dyn[d], path + ".dynamics[" + std::to_string(d) + "]", sc.id));
        sc.x0.values = io_detail::as_vector(io_detail::require(js, "x0", path), path + ".x0");
        sc.t0 = js.contains("t0") ? io_detail::as_number(js["t0"], path + ".t0") : 0.0;
        sc.tf = io_detail::as_number(io_detail::require(js, "tf", path), path + ".tf");
        sc.terminal_cost =
            js.contains("terminal_cost")
                ? io_detail::parse_expr_field(js["terminal_cost"], path + ".terminal_cost", sc.id)
                : parse("0");
        sc.running_cost =
            js.contains("running_cost")
                ? io_detail::parse_expr_field(js["running_cost"], path + ".running_cost", sc.id)
                : parse("0");
        sc.state_bounds = BoxSet::unbounded(sc.x0.size());
        if (js.contains("state_lower"))
            sc.state_bounds.lower =
                io_detail::as_bound_vector(js["state_lower"], path + ".state_lower", -kInf);
        if (js.contains("state_upper"))
            sc.state_bounds.upper =
                io_detail::as_bound_vector(js["state_upper"], path + ".state_upper", kInf);
        spec.scenarios.push_back(std::move(sc));
    }

    spec.options = doc.contains("options") ? io_detail::parse_options(doc["options"], "options")
                                           : SolverOptions{};

    if (doc.contains("goals") && !doc["goals"].is_null()) {
        const json& jg = doc["goals"];
        if (!jg.is_array()) io_detail::fail("goals", "expected an array");
        GoalSet gs;
        for (std::size_t i = 0; i < jg.size(); ++i) {
            const std::string path = "goals[" + std::to_string(i) + "]";
            io_detail::reject_unknown_keys(jg[i], {"id", "J_star", "theta_star", "status"}, path);
            GoalEntry e;
            e.scenario_id =
                io_detail::as_string(io_detail::require(jg[i], "id", path), path + ".id");
            e.J_star = io_detail::as_number(io_detail::require(jg[i], "J_star", path),
                                            path + ".J_star");
            if (jg[i].contains("theta_star"))
                e.theta_star.values =
                    io_detail::as_vector(jg[i]["theta_star"], path + ".theta_star");
            if (jg[i].contains("status"))
                e.status = io_detail::parse_nlp_status(
                    io_detail::as_string(jg[i]["status"], path + ".status"), path + ".status");
            gs.entries.push_back(std::move(e));
        }
        out.goals = std::move(gs);
    }

    out.validation = validate_problem(spec);
    if (strict && !out.validation.ok()) {
        const auto& f = out.validation.findings.front();
        std::string where = f.field;
        for (std::size_t s = 0; s < spec.scenarios.size(); ++s)
            if (!f.scenario_id.empty() && spec.scenarios[s].id == f.scenario_id)
                where = "scenarios[" + std::to_string(s) + "]." + f.field;
        throw LoadError(where + ": validation failed: " + f.rule + " (" +
                        std::to_string(out.validation.count()) + " finding(s) total)");
    }
    return out;
}

inline ProblemSpec load_problem(const std::string& text, bool strict = true) {
    return load_problem_document(text, strict).spec;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open file for writing: " + path);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path);
}

namespace io_detail {

inline std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
    return out;
}

// Non-finite values have no JSON encoding; null keeps artifacts parseable.
inline std::string num(double v) {
    return std::isfinite(v) ? detail::format_full(v) : std::string("null");
}

// CSV cells render nan/inf literally.
inline std::string csv_num(double v) { return detail::format_full(v); }

inline double as_number_or_nan(const json& j, const std::string& path) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return as_number(j, path);
}

inline std::string array(const Vec& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += num(v[i]);
    }
    out += "]";
    return out;
}

/// Bound arrays: non-finite sides serialize as null.
inline std::string bound_array(const Vec& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::isfinite(v[i]) ? num(v[i]) : "null";
    }
    out += "]";
    return out;
}

inline std::string expr_string(const Expr& e) { return escape(to_string(e)); }

inline const char* aggregation_name(Aggregation a) {
    return a == Aggregation::minimax ? "minimax" : "weighted_sum";
}

inline const char* state_bound_mode_name(StateBoundMode m) {
    switch (m) {
        case StateBoundMode::monitor: return "monitor";
        case StateBoundMode::penalize: return "penalize";
        case StateBoundMode::reject: return "reject";
    }
    return "?";
}

inline const char* warm_start_name(WarmStart w) {
    return w == WarmStart::theta_init ? "theta_init" : "best_stage1";
}

}  // namespace io_detail

/// Problem writer; load_problem of the output reproduces the spec.
inline std::string problem_to_json(const ProblemSpec& spec,
                                   const std::optional<GoalSet>& goals = std::nullopt) {
    using namespace io_detail;
    std::string s;
    s += "{\n";
    s += "  \"schema\": 1,\n";
    s += "  \"parameters\": {\n";
    s += "    \"dim\": " + std::to_string(spec.p) + ",\n";
    s += "    \"lower\": " + bound_array(spec.theta_bounds.lower) + ",\n";
    s += "    \"upper\": " + bound_array(spec.theta_bounds.upper) + ",\n";
    s += "    \"init\": " + array(spec.theta_init.values) + "\n";
    s += "  },\n";
    s += "  \"weights\": " + array(spec.weights.w) + ",\n";
    s += "  \"scenarios\": [\n";
    for (std::size_t i = 0; i < spec.scenarios.size(); ++i) {
        const Scenario& sc = spec.scenarios[i];
        s += "    {\n";
        s += "      \"id\": " + escape(sc.id) + ",\n";
        s += "      \"dynamics\": [";
        for (std::size_t d = 0; d < sc.dynamics.size(); ++d) {
            if (d) s += ",";
            s += expr_string(sc.dynamics[d]);
        }
        s += "],\n";
        s += "      \"x0\": " + array(sc.x0.values) + ",\n";
        s += "      \"t0\": " + num(sc.t0) + ",\n";
        s += "      \"tf\": " + num(sc.tf) + ",\n";
        s += "      \"terminal_cost\": " + expr_string(sc.terminal_cost) + ",\n";
        s += "      \"running_cost\": " + expr_string(sc.running_cost) + ",\n";
        s += "      \"state_lower\": " + bound_array(sc.state_bounds.lower) + ",\n";
        s += "      \"state_upper\": " + bound_array(sc.state_bounds.upper) + "\n";
        s += (i + 1 < spec.scenarios.size()) ? "    },\n" : "    }\n";
    }
    s += "  ],\n";
    if (goals) {
        s += "  \"goals\": [\n";
        for (std::size_t i = 0; i < goals->entries.size(); ++i) {
            const GoalEntry& e = goals->entries[i];
            s += "    {\"id\": " + escape(e.scenario_id) + ", \"J_star\": " + num(e.J_star) + "}";
            s += (i + 1 < goals->entries.size()) ? ",\n" : "\n";
        }
        s += "  ],\n";
    }
    const SolverOptions& o = spec.options;
    s += "  \"options\": {\n";
    s += "    \"integrator_steps\": " + std::to_string(o.integrator_steps) + ",\n";
    s += "    \"fd_step_scale\": " + num(o.fd_step_scale) + ",\n";
    s += "    \"kkt_tol\": " + num(o.kkt_tol) + ",\n";
    s += "    \"feas_tol\": " + num(o.feas_tol) + ",\n";
    s += "    \"max_iter\": " + std::to_string(o.max_iter) + ",\n";
    s += "    \"max_backtracks\": " + std::to_string(o.max_backtracks) + ",\n";
    s += "    \"aggregation\": " + escape(aggregation_name(o.aggregation)) + ",\n";
    s += "    \"state_bound_mode\": " + escape(state_bound_mode_name(o.state_bound_mode)) + ",\n";
    s += "    \"penalty_coefficient\": " + num(o.penalty_coefficient) + ",\n";
    s += "    \"multistart_count\": " + std::to_string(o.multistart_count) + ",\n";
    s += "    \"seed\": " + std::to_string(o.seed) + ",\n";
    s += "    \"normalize_weights\": " + std::string(o.normalize_weights ? "true" : "false") +
         ",\n";
    s += "    \"warm_start\": " + escape(warm_start_name(o.warm_start)) + ",\n";
    s += "    \"jobs\": " + std::to_string(o.jobs) + "\n";
    s += "  }\n";
    s += "}\n";
    return s;
}

inline std::string goal_set_to_json(const GoalSet& goals) {
    using namespace io_detail;
    std::string s;
    s += "{\n";
    s += "  \"schema\": 1,\n";
    s += "  \"goals\": [\n";
    for (std::size_t i = 0; i < goals.entries.size(); ++i) {
        const GoalEntry& e = goals.entries[i];
        s += "    {\n";
        s += "      \"id\": " + escape(e.scenario_id) + ",\n";
        s += "      \"J_star\": " + num(e.J_star) + ",\n";
        s += "      \"theta_star\": " + array(e.theta_star.values) + ",\n";
        s += "      \"status\": " + escape(to_string(e.status));
        if (!e.error.empty()) s += ",\n      \"error\": " + escape(e.error);
        s += "\n";
        s += (i + 1 < goals.entries.size()) ? "    },\n" : "    }\n";
    }
    s += "  ]\n";
    s += "}\n";
    return s;
}

inline GoalSet goal_set_from_json(const std::string& text) {
    using io_detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw LoadError("JSON decode error at byte offset " + std::to_string(e.byte) + ": " +
                        e.what());
    }
    const json& jg = doc.is_array() ? doc : io_detail::require(doc, "goals", "$");
    if (!jg.is_array()) io_detail::fail("goals", "expected an array");
    GoalSet out;
    for (std::size_t i = 0; i < jg.size(); ++i) {
        const std::string path = "goals[" + std::to_string(i) + "]";
        GoalEntry e;
        e.scenario_id = io_detail::as_string(io_detail::require(jg[i], "id", path), path + ".id");
        e.J_star = io_detail::as_number_or_nan(io_detail::require(jg[i], "J_star", path),
                                               path + ".J_star");
        if (jg[i].contains("theta_star"))
            e.theta_star.values = io_detail::as_vector(jg[i]["theta_star"], path + ".theta_star");
        if (jg[i].contains("status"))
            e.status = io_detail::parse_nlp_status(
                io_detail::as_string(jg[i]["status"], path + ".status"), path + ".status");
        if (jg[i].contains("error"))
            e.error = io_detail::as_string(jg[i]["error"], path + ".error");
        out.entries.push_back(std::move(e));
    }
    return out;
}

inline std::string goal_solution_to_json(const GoalSolution& sol) {
    using namespace io_detail;
    std::string s;
    s += "{\n";
    s += "  \"schema\": 1,\n";
    s += "  \"aggregation\": " + escape(aggregation_name(sol.aggregation_used)) + ",\n";
    s += "  \"objective\": " + num(sol.objective) + ",\n";
    s += "  \"theta_star\": " + array(sol.theta_star.values) + ",\n";
    s += "  \"gamma\": " + array(sol.gamma) + ",\n";
    s += "  \"scenarios\": [\n";
    for (std::size_t i = 0; i < sol.scenario_ids.size(); ++i) {
        s += "    {\n";
        s += "      \"id\": " + escape(sol.scenario_ids[i]) + ",\n";
        s += "      \"weight\": " + num(sol.weights_used[i]) + ",\n";
        s += "      \"J_star\": " + num(sol.goals[i]) + ",\n";
        s += "      \"J\": " + num(sol.costs[i].total) + ",\n";
        s += "      \"terminal_part\": " + num(sol.costs[i].terminal_part) + ",\n";
        s += "      \"running_part\": " + num(sol.costs[i].running_part) + ",\n";
        s += "      \"bound_penalty\": " + num(sol.costs[i].bound_penalty) + ",\n";
        s += "      \"gamma\": " + num(sol.gamma[i]) + "\n";
        s += (i + 1 < sol.scenario_ids.size()) ? "    },\n" : "    }\n";
    }
    s += "  ],\n";
    s += "  \"solver\": {\n";
    s += "    \"status\": " + escape(to_string(sol.solver.status)) + ",\n";
    s += "    \"iterations\": " + std::to_string(sol.solver.iterations) + ",\n";
    s += "    \"kkt_residual\": " + num(sol.solver.kkt_residual) + ",\n";
    s += "    \"feasibility_residual\": " + num(sol.solver.feasibility_residual) + "\n";
    s += "  }\n";
    s += "}\n";
    return s;
}

/// SweepTable CSV: weights, theta*, gamma, per-scenario J, objective, status.
/// Failed rows keep their weights and carry nan cells plus the error status.
inline std::string sweep_table_to_csv(const SweepTable& table, std::size_t n_scen,
                                      std::size_t p) {
    using io_detail::csv_num;
    std::string s;
    for (std::size_t i = 0; i < n_scen; ++i) s += "w_" + std::to_string(i) + ",";
    for (std::size_t j = 0; j < p; ++j) s += "theta_" + std::to_string(j) + ",";
    for (std::size_t i = 0; i < n_scen; ++i) s += "gamma_" + std::to_string(i) + ",";
    for (std::size_t i = 0; i < n_scen; ++i) s += "J_" + std::to_string(i) + ",";
    s += "objective,status\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < n_scen; ++i)
            s += csv_num(i < row.weights.size() ? row.weights[i] : nan) + ",";
        const bool ok = row.error.empty();
        for (std::size_t j = 0; j < p; ++j)
            s += csv_num(ok && j < row.solution.theta_star.size() ? row.solution.theta_star[j] : nan) +
                 ",";
        for (std::size_t i = 0; i < n_scen; ++i)
            s += csv_num(ok && i < row.solution.gamma.size() ? row.solution.gamma[i] : nan) + ",";
        for (std::size_t i = 0; i < n_scen; ++i)
            s += csv_num(ok && i < row.solution.costs.size() ? row.solution.costs[i].total : nan) + ",";
        s += csv_num(ok ? row.solution.objective : nan) + ",";
        s += ok ? to_string(row.solution.solver.status) : "error";
        s += "\n";
    }
    return s;
}

/// Plot-ready trade-off data: one row per weight vector, no status column.
inline std::string sweep_plot_csv(const SweepTable& table, std::size_t n_scen) {
    using io_detail::csv_num;
    std::string s;
    for (std::size_t i = 0; i < n_scen; ++i) s += "w_" + std::to_string(i) + ",";
    for (std::size_t i = 0; i < n_scen; ++i) s += "J_" + std::to_string(i) + ",";
    for (std::size_t i = 0; i < n_scen; ++i) s += "gamma_" + std::to_string(i) + ",";
    s += "objective\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : table.rows) {
        const bool ok = row.error.empty();
        for (std::size_t i = 0; i < n_scen; ++i)
            s += csv_num(i < row.weights.size() ? row.weights[i] : nan) + ",";
        for (std::size_t i = 0; i < n_scen; ++i)
            s += csv_num(ok && i < row.solution.costs.size() ? row.solution.costs[i].total : nan) + ",";
        for (std::size_t i = 0; i < n_scen; ++i)
            s += csv_num(ok && i < row.solution.gamma.size() ? row.solution.gamma[i] : nan) + ",";
        s += csv_num(ok ? row.solution.objective : nan) + "\n";
    }
    return s;
}

inline void write_results(const GoalSet& goals, const std::string& path) {
    write_text_file(path, goal_set_to_json(goals));
}

inline void write_results(const GoalSolution& sol, const std::string& path) {
    write_text_file(path, goal_solution_to_json(sol));
}

inline void write_results(const SweepTable& table, std::size_t n_scen, std::size_t p,
                          const std::string& path) {
    write_text_file(path, sweep_table_to_csv(table, n_scen, p));
}

/// Weight grids for sweeps: CSV, one weight vector per row; an optional
/// header row is skipped.
inline std::vector<WeightVector> load_weights_csv(const std::string& text) {
    std::vector<WeightVector> out;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        WeightVector w;
        std::istringstream ls(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                w.w.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (line_no == 1) continue;  // header row
            throw LoadError("weights CSV line " + std::to_string(line_no) +
                            ": expected comma-separated numbers");
        }
        if (!w.w.empty()) out.push_back(std::move(w));
    }
    return out;
}

}  // namespace attain
