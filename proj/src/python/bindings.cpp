#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "restopo/bench.hpp"
#include "restopo/case.hpp"
#include "restopo/heuristics.hpp"
#include "restopo/restoration.hpp"
#include "restopo/topology.hpp"

namespace py = pybind11;
using namespace restopo;

namespace {

// Result documents are rendered once (the same JSON the command-line tool
// emits) and handed to Python as native containers.
py::object json_to_py(const nlohmann::json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::null: return py::none();
        case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
        case nlohmann::json::value_t::number_integer:
            return py::int_(j.get<long long>());
        case nlohmann::json::value_t::number_unsigned:
            return py::int_(j.get<unsigned long long>());
        case nlohmann::json::value_t::number_float:
            return py::float_(j.get<double>());
        case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
        case nlohmann::json::value_t::array: {
            py::list out;
            for (const auto& item : j) out.append(json_to_py(item));
            return out;
        }
        case nlohmann::json::value_t::object: {
            py::dict out;
            for (auto it = j.begin(); it != j.end(); ++it)
                out[py::str(it.key())] = json_to_py(it.value());
            return out;
        }
        default: return py::none();
    }
}

py::dict dispatch_to_dict(const DispatchSolution& d) {
    return json_to_py(nlohmann::json::parse(dispatch_to_json(d)));
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const std::string& name : names) {
        auto m = method_from_string(name);
        if (!m) throw std::invalid_argument("unknown method: " + name);
        out.push_back(*m);
    }
    return out;
}

py::dict trace_to_dict(const IhTrace& trace) {
    py::list iterations;
    for (const IhIteration& it : trace.iterations) {
        py::dict row;
        row["n_lines"] = it.n_lines;
        row["mesh_count"] = it.mesh_count;
        row["n_loop_lines"] = it.n_loop_lines;
        row["cut_line"] = it.cut_line;
        row["cut_flow"] = it.cut_flow;
        row["solve_ms"] = it.solve_ms;
        iterations.append(row);
    }
    py::dict out;
    out["iterations"] = iterations;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "service restoration toolkit: radial reconfiguration of "
              "distribution networks via convex dispatch models";

    // --- error types -----------------------------------------------------
    auto case_error = py::register_exception<CaseError>(m, "CaseError");
    py::register_exception<ParseError>(m, "ParseError", case_error);
    py::register_exception<RefError>(m, "RefError", case_error);
    py::register_exception<GraphError>(m, "GraphError");
    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
    py::register_exception<HeuristicError>(m, "HeuristicError");
    py::register_exception<OracleLimitError>(m, "OracleLimitError");
    py::register_exception<EnumLimitError>(m, "EnumLimitError");

    // --- case documents ----------------------------------------------------
    py::class_<NetworkCase>(m, "NetworkCase")
        .def_property_readonly("name",
                               [](const NetworkCase& c) { return c.meta.name; })
        .def_property_readonly("w0", [](const NetworkCase& c) { return c.w0; })
        .def_property_readonly(
            "n_periods", [](const NetworkCase& c) { return c.periods.n_periods; })
        .def_property_readonly(
            "interval_hours",
            [](const NetworkCase& c) { return c.periods.interval_hours; })
        .def_property_readonly(
            "n_buses", [](const NetworkCase& c) { return c.buses.size(); })
        .def_property_readonly(
            "n_lines", [](const NetworkCase& c) { return c.lines.size(); })
        .def_property_readonly(
            "n_sources", [](const NetworkCase& c) { return c.sources.size(); })
        .def_property_readonly(
            "n_storages", [](const NetworkCase& c) { return c.storages.size(); })
        .def_property_readonly("bus_ids",
                               [](const NetworkCase& c) {
                                   std::vector<int> ids;
                                   for (const Bus& b : c.buses) ids.push_back(b.id);
                                   return ids;
                               })
        .def_property_readonly("line_ids",
                               [](const NetworkCase& c) {
                                   std::vector<int> ids;
                                   for (const Line& l : c.lines) ids.push_back(l.id);
                                   return ids;
                               })
        .def("to_json", [](const NetworkCase& c) { return serialize_case(c); })
        .def("__repr__", [](const NetworkCase& c) {
            return "NetworkCase(name='" + c.meta.name +
                   "', buses=" + std::to_string(c.buses.size()) +
                   ", lines=" + std::to_string(c.lines.size()) + ")";
        });

    m.def("load_case", &load_case, py::arg("path"),
          "Read and parse a case file.");
    m.def("parse_case", &parse_case, py::arg("text"),
          "Parse a case document from a JSON string.");
    m.def("save_case", &save_case, py::arg("case"), py::arg("path"));
    m.def(
        "validate",
        [](const NetworkCase& c) {
            py::list out;
            for (const Violation& v : validate(c)) {
                py::dict d;
                d["entity"] = v.entity;
                d["rule"] = v.rule;
                out.append(d);
            }
            return out;
        },
        py::arg("case"),
        "Invariant violations as a list of {entity, rule} dicts; empty means "
        "the case is usable.");

    // --- topology ----------------------------------------------------------
    py::class_<Topology>(m, "Topology")
        .def_property_readonly("n_buses", &Topology::n_buses)
        .def_property_readonly("n_lines", &Topology::n_lines)
        .def_property_readonly("line_ids", &Topology::line_ids)
        .def("has_line", &Topology::has_line, py::arg("line_id"))
        .def("without", &Topology::without, py::arg("line_id"),
             "Copy of this topology with one line opened.")
        .def("__repr__", [](const Topology& t) {
            return "Topology(buses=" + std::to_string(t.n_buses()) +
                   ", lines=" + std::to_string(t.n_lines()) + ")";
        });

    m.def("full_topology", &full_topology, py::arg("case"),
          "Topology with every case line closed.");
    m.def("is_connected", &is_connected, py::arg("topology"));
    m.def("is_radial", &is_radial, py::arg("topology"));
    m.def("mesh_count", &mesh_count, py::arg("topology"),
          "Independent loops: lines - buses + 1.");
    m.def("loop_lines", &loop_lines, py::arg("topology"),
          "Ids of the lines lying on at least one cycle, ascending.");
    m.def("max_spanning_tree", &max_spanning_tree, py::arg("topology"),
          py::arg("weights"));
    m.def(
        "enumerate_spanning_trees",
        [](const Topology& t, long long limit) {
            return enumerate_spanning_trees(t, limit);
        },
        py::arg("topology"), py::arg("limit") = 200000);

    // --- dispatch ------------------------------------------------------------
    m.def(
        "evaluate",
        [](const NetworkCase& c, const Topology* t, double tol) {
            DispatchSolution d = t ? evaluate(c, *t, tol)
                                   : evaluate(c, full_topology(c), tol);
            return dispatch_to_dict(d);
        },
        py::arg("case"), py::arg("topology") = nullptr, py::arg("tol") = 1e-8,
        "Solve the dispatch model on a topology (all lines closed when "
        "omitted); returns the result document as a dict.");

    // --- reconfiguration -------------------------------------------------------
    m.def(
        "iterative_heuristic",
        [](const NetworkCase& c, double tol) {
            IhResult r = iterative_heuristic(c, tol);
            py::dict out;
            out["topology"] = r.topology;
            out["cut_lines"] = r.cuts.cut_lines;
            out["trace"] = trace_to_dict(r.trace);
            return out;
        },
        py::arg("case"), py::arg("tol") = 1e-8,
        "Open one loop line per re-solve until radial; returns topology, cut "
        "order, and the per-iteration trace.");

    m.def("mst_baseline", &mst_baseline, py::arg("case"), py::arg("tol") = 1e-8,
          "One meshed solve, then the maximum spanning tree under |P| "
          "weights.");

    m.def(
        "brute_force_oracle",
        [](const NetworkCase& c, double tol, long long limit,
           bool keep_objectives) {
            OracleResult r = brute_force_oracle(c, tol, limit, keep_objectives);
            py::dict out;
            out["topology"] = r.best_topology;
            out["objective"] = r.best_objective;
            out["trees_evaluated"] = r.trees_evaluated;
            if (keep_objectives) out["tree_objectives"] = r.tree_objectives;
            return out;
        },
        py::arg("case"), py::arg("tol") = 1e-8, py::arg("limit") = 200000,
        py::arg("keep_objectives") = false,
        "Evaluate every spanning tree and return the best.");

    // --- benchmarking ---------------------------------------------------------
    m.def("sigma", &sigma, py::arg("f_star"), py::arg("f_x"),
          "Relative optimality gap |f_star - f_x| / f_star.");

    m.def(
        "generate_scenarios",
        [](const NetworkCase& base, std::uint64_t seed, int n_scenarios,
           int place_sources, int critical_loads, double critical_weight,
           double normal_weight) {
            ScenarioSpec spec;
            spec.seed = seed;
            spec.n_scenarios = n_scenarios;
            spec.n_sources_to_place = place_sources;
            spec.n_critical_loads = critical_loads;
            spec.critical_weight = critical_weight;
            spec.normal_weight = normal_weight;
            return generate_scenarios(base, spec);
        },
        py::arg("base"), py::arg("seed"), py::arg("n_scenarios"),
        py::arg("place_sources") = 0, py::arg("critical_loads") = 0,
        py::arg("critical_weight") = 100.0, py::arg("normal_weight") = 1.0);

    m.def(
        "run_benchmark",
        [](const NetworkCase& base, std::uint64_t seed, int n_scenarios,
           const std::vector<std::string>& methods, int place_sources,
           int critical_loads, double critical_weight, double normal_weight,
           double tol, long long tree_limit, int jobs, bool redact_timing) {
            ScenarioSpec spec;
            spec.seed = seed;
            spec.n_scenarios = n_scenarios;
            spec.n_sources_to_place = place_sources;
            spec.n_critical_loads = critical_loads;
            spec.critical_weight = critical_weight;
            spec.normal_weight = normal_weight;
            BenchOptions opt;
            opt.tol = tol;
            opt.tree_limit = tree_limit;
            opt.jobs = jobs;
            opt.redact_timing = redact_timing;
            BenchReport rep;
            {
                py::gil_scoped_release release;
                rep = run_benchmark(base, spec, parse_methods(methods), opt);
            }
            py::dict out;
            out["csv"] = report_csv(rep);
            out["summary"] =
                json_to_py(nlohmann::json::parse(report_summary_json(rep)));
            return out;
        },
        py::arg("base"), py::arg("seed"), py::arg("n_scenarios"),
        py::arg("methods"), py::arg("place_sources") = 0,
        py::arg("critical_loads") = 0, py::arg("critical_weight") = 100.0,
        py::arg("normal_weight") = 1.0, py::arg("tol") = 1e-8,
        py::arg("tree_limit") = 200000, py::arg("jobs") = 1,
        py::arg("redact_timing") = false,
        "Run every method on every scenario; returns {'csv': str, 'summary': "
        "dict}.");
}
