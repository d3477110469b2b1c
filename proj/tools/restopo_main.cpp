#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "restopo/bench.hpp"
#include "restopo/case.hpp"
#include "restopo/heuristics.hpp"
#include "restopo/restoration.hpp"
#include "restopo/topology.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInvalidCase = 2;
constexpr int kExitLimit = 3;

// The only environment hook: an output-directory override for relative
// --out paths.
std::string resolve_out(const std::string& out) {
    const char* dir = std::getenv("RESTOPO_OUT_DIR");
    if (!dir || !*dir || out.empty()) return out;
    std::filesystem::path p(out);
    if (p.is_absolute()) return out;
    return (std::filesystem::path(dir) / p).string();
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::string path = resolve_out(out);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    f << text;
}

restopo::NetworkCase load_valid_case(const std::string& path) {
    restopo::NetworkCase c = restopo::load_case(path);
    std::vector<restopo::Violation> v = restopo::validate(c);
    if (!v.empty()) {
        for (const auto& viol : v)
            std::cerr << "invalid case: " << viol.entity << ": " << viol.rule << '\n';
        throw restopo::CaseError("case failed validation");
    }
    return c;
}

nlohmann::json topology_json(const restopo::Topology& full,
                             const restopo::Topology& tree,
                             const std::vector<int>& cuts) {
    nlohmann::json j;
    j["n_buses"] = tree.n_buses();
    j["closed_lines"] = tree.line_ids();
    j["cut_lines"] = cuts;
    j["radial"] = restopo::is_radial(tree);
    (void)full;
    return j;
}

int cmd_solve(const std::string& case_path, const std::string& out, double tol) {
    restopo::NetworkCase c = load_valid_case(case_path);
    auto t0 = std::chrono::steady_clock::now();
    restopo::IhResult r = restopo::iterative_heuristic(c, tol);
    restopo::DispatchSolution d = restopo::evaluate(c, r.topology, tol);
    auto t1 = std::chrono::steady_clock::now();
    if (d.status == restopo::QpStatus::infeasible) return kExitInfeasible;
    if (d.status == restopo::QpStatus::limit) return kExitLimit;

    double model_ms = d.solve_ms;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& it : r.trace.iterations) {
        trace.push_back({{"n_lines", it.n_lines},
                         {"mesh_count", it.mesh_count},
                         {"n_loop_lines", it.n_loop_lines},
                         {"cut_line", it.cut_line},
                         {"cut_flow", it.cut_flow},
                         {"solve_ms", it.solve_ms}});
        model_ms += it.solve_ms;
    }
    double total_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    nlohmann::json j;
    j["case"] = c.meta.name;
    j["command"] = "solve";
    j["topology"] = topology_json(restopo::full_topology(c), r.topology,
                                  r.cuts.cut_lines);
    j["trace"] = std::move(trace);
    j["dispatch"] = nlohmann::json::parse(restopo::dispatch_to_json(d));
    j["timing"] = {{"total_ms", total_ms},
                   {"model_ms", model_ms},
                   {"graph_ms", std::max(0.0, total_ms - model_ms)}};
    emit(out, j.dump(2));
    return kExitOk;
}

int cmd_oracle(const std::string& case_path, const std::string& out, double tol,
               long long tree_limit, bool dump_objectives) {
    restopo::NetworkCase c = load_valid_case(case_path);
    restopo::OracleResult r =
        restopo::brute_force_oracle(c, tol, tree_limit, dump_objectives);
    restopo::DispatchSolution d = restopo::evaluate(c, r.best_topology, tol);

    restopo::Topology full = restopo::full_topology(c);
    std::vector<int> cuts;
    for (int id : full.line_ids())
        if (!r.best_topology.has_line(id)) cuts.push_back(id);

    nlohmann::json j;
    j["case"] = c.meta.name;
    j["command"] = "oracle";
    j["best_objective"] = r.best_objective;
    j["trees_evaluated"] = r.trees_evaluated;
    j["topology"] = topology_json(full, r.best_topology, cuts);
    j["dispatch"] = nlohmann::json::parse(restopo::dispatch_to_json(d));
    if (dump_objectives) j["tree_objectives"] = r.tree_objectives;
    emit(out, j.dump(2));
    return kExitOk;
}

int cmd_bench(const std::string& case_path, const std::string& out,
              const std::vector<std::string>& method_names,
              restopo::ScenarioSpec spec, restopo::BenchOptions opt) {
    restopo::NetworkCase c = load_valid_case(case_path);
    std::vector<restopo::Method> methods;
    for (const std::string& name : method_names) {
        auto m = restopo::method_from_string(name);
        if (!m) {
            std::cerr << "unknown method '" << name << "' (expected ih, mst, oracle)\n";
            return kExitInvalidCase;
        }
        methods.push_back(*m);
    }
    restopo::BenchReport report = restopo::run_benchmark(c, spec, methods, opt);
    emit(out, restopo::report_csv(report));
    if (!out.empty()) {
        std::filesystem::path p(resolve_out(out));
        p.replace_extension(".summary.json");
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file " + p.string());
        f << restopo::report_summary_json(report) << '\n';
    } else {
        std::cout << restopo::report_summary_json(report) << '\n';
    }
    return kExitOk;
}

int cmd_info(const std::string& case_path) {
    restopo::NetworkCase c = load_valid_case(case_path);
    restopo::Topology t = restopo::full_topology(c);
    int n_loads = 0;
    for (const auto& b : c.buses) n_loads += b.is_load ? 1 : 0;
    std::cout << "case:       " << c.meta.name << '\n'
              << "buses:      " << t.n_buses() << '\n'
              << "lines:      " << t.n_lines() << '\n'
              << "meshes:     " << restopo::mesh_count(t) << '\n'
              << "loop lines: " << restopo::loop_lines(t).size() << '\n'
              << "sources:    " << c.sources.size() << '\n'
              << "storages:   " << c.storages.size() << '\n'
              << "loads:      " << n_loads << '\n'
              << "periods:    " << c.periods.n_periods << '\n';
    return kExitOk;
}

int cmd_validate(const std::string& case_path) {
    restopo::NetworkCase c = restopo::load_case(case_path);
    std::vector<restopo::Violation> v = restopo::validate(c);
    if (v.empty()) {
        std::cout << "ok\n";
        return kExitOk;
    }
    for (const auto& viol : v)
        std::cout << viol.entity << ": " << viol.rule << '\n';
    return kExitInvalidCase;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"restopo: radial restoration-topology toolkit"};
    app.require_subcommand(1);

    std::string case_path, out;
    double tol = 1e-8;
    long long tree_limit = 200000;
    bool dump_objectives = false;
    std::vector<std::string> method_names = {"ih"};
    restopo::ScenarioSpec spec;
    std::uint64_t seed = 0;
    int scenarios = 0, jobs = 1, place_sources = 0, critical_loads = 0;
    double critical_weight = 100.0, normal_weight = 1.0;
    bool redact_timing = false;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--case", case_path, "case file")->required();
        if (with_out) sub->add_option("--out", out, "output file (default stdout)");
    };

    CLI::App* solve = app.add_subcommand("solve", "cut loops until radial, then dispatch");
    add_common(solve, true);
    solve->add_option("--tol", tol, "solver tolerance");

    CLI::App* oracle = app.add_subcommand("oracle", "exhaustive spanning-tree optimum");
    add_common(oracle, true);
    oracle->add_option("--tol", tol, "solver tolerance");
    oracle->add_option("--tree-limit", tree_limit, "max spanning trees to enumerate");
    oracle->add_flag("--dump-objectives", dump_objectives,
                     "record every tree's objective");

    CLI::App* bench = app.add_subcommand("bench", "randomized method comparison");
    add_common(bench, true);
    bench->add_option("--tol", tol, "solver tolerance");
    bench->add_option("--seed", seed, "scenario seed");
    bench->add_option("--scenarios", scenarios, "number of scenarios")->required();
    bench->add_option("--methods", method_names, "methods: ih, mst, oracle")
        ->delimiter(',');
    bench->add_option("--tree-limit", tree_limit, "oracle enumeration cap");
    bench->add_option("--jobs", jobs, "parallel scenario workers");
    bench->add_option("--place-sources", place_sources,
                      "relocate this many sources per scenario (0 keeps base)");
    bench->add_option("--critical-loads", critical_loads,
                      "critical loads drawn per scenario");
    bench->add_option("--critical-weight", critical_weight, "weight of critical loads");
    bench->add_option("--normal-weight", normal_weight, "weight of other loads");
    bench->add_flag("--redact-timing", redact_timing,
                    "zero timing fields for byte-stable reports");

    CLI::App* info = app.add_subcommand("info", "print case statistics");
    add_common(info, false);

    CLI::App* validate = app.add_subcommand("validate", "check case invariants");
    add_common(validate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalidCase;
    }

    try {
        if (solve->parsed()) return cmd_solve(case_path, out, tol);
        if (oracle->parsed())
            return cmd_oracle(case_path, out, tol, tree_limit, dump_objectives);
        if (bench->parsed()) {
            spec.seed = seed;
            spec.n_scenarios = scenarios;
            spec.n_sources_to_place = place_sources;
            spec.n_critical_loads = critical_loads;
            spec.critical_weight = critical_weight;
            spec.normal_weight = normal_weight;
            restopo::BenchOptions opt;
            opt.tol = tol;
            opt.tree_limit = tree_limit;
            opt.jobs = jobs;
            opt.redact_timing = redact_timing;
            return cmd_bench(case_path, out, method_names, spec, opt);
        }
        if (info->parsed()) return cmd_info(case_path);
        if (validate->parsed()) return cmd_validate(case_path);
    } catch (const restopo::OracleLimitError& e) {
        std::cerr << e.what() << '\n';
        return kExitLimit;
    } catch (const restopo::EnumLimitError& e) {
        std::cerr << e.what() << '\n';
        return kExitLimit;
    } catch (const restopo::HeuristicError& e) {
        std::cerr << e.what() << '\n';
        return e.status == restopo::QpStatus::infeasible ? kExitInfeasible
                                                         : kExitLimit;
    } catch (const restopo::CaseError& e) {
        std::cerr << e.what() << '\n';
        return kExitInvalidCase;
    } catch (const restopo::GraphError& e) {
        std::cerr << e.what() << '\n';
        return kExitInvalidCase;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kExitInvalidCase;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kExitLimit;
    }
    return kExitOk;
}
