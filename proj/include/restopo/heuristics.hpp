#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "restopo/case.hpp"
#include "restopo/restoration.hpp"
#include "restopo/topology.hpp"

namespace restopo {

// One loop-cutting step: the state examined and the line opened.
struct IhIteration {
    int n_lines = 0;       // closed lines before the cut
    int mesh_count = 0;    // independent loops before the cut
    int n_loop_lines = 0;  // cut candidates
    int cut_line = 0;
    double cut_flow = 0.0; // summed |P| of the cut line across periods
    double solve_ms = 0.0;
};

struct IhTrace {
    std::vector<IhIteration> iterations;
};

// Radial topology, the opened lines in cut order, and the per-iteration
// audit trail.
struct IhResult {
    Topology topology;
    CutSet cuts;
    IhTrace trace;
};

// A dispatch solve came back non-optimal mid-heuristic; the trace up to
// the failing iteration is attached.
struct HeuristicError : std::runtime_error {
    HeuristicError(const std::string& what, IhTrace partial, QpStatus st)
        : std::runtime_error(what), trace(std::move(partial)), status(st) {}
    IhTrace trace;
    QpStatus status;
};

// The loop line carrying the least active power; ties go to the lowest id.
int select_cut(const std::vector<int>& loop, const std::map<int, double>& flows);

// Cut one loop line per iteration, re-solving the meshed restoration model
// each time, until the topology is radial.
IhResult iterative_heuristic(const NetworkCase& c, double tol = 1e-8);

// One meshed solve; keep the maximum spanning tree under weights |P|
// (summed over periods).
Topology mst_baseline(const NetworkCase& c, double tol = 1e-8);

struct OracleResult {
    Topology best_topology;
    double best_objective = 0.0;
    long long trees_evaluated = 0;
    std::vector<double> tree_objectives; // populated only when requested
};

// Spanning-tree enumeration blew past the cap; carries whatever had been
// evaluated so far (absent when the cap was hit before the first tree).
struct OracleLimitError : std::runtime_error {
    OracleLimitError(const std::string& what, std::optional<OracleResult> p)
        : std::runtime_error(what), partial(std::move(p)) {}
    std::optional<OracleResult> partial;
};

// Evaluate every spanning tree and return the best (ties keep the tree
// enumerated first).
OracleResult brute_force_oracle(const NetworkCase& c, double tol = 1e-8,
                                long long limit = 200000,
                                bool keep_objectives = false);

} // namespace restopo
