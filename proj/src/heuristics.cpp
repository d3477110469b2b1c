#include "restopo/heuristics.hpp"

#include <cmath>
#include <utility>

namespace restopo {

int select_cut(const std::vector<int>& loop, const std::map<int, double>& flows) {
    if (loop.empty()) throw std::invalid_argument("select_cut: empty loop set");
    int best = -1;
    double best_mag = 0.0;
    for (int id : loop) {
        auto it = flows.find(id);
        if (it == flows.end())
            throw std::invalid_argument("select_cut: no flow for line " +
                                        std::to_string(id));
        double mag = std::abs(it->second);
        if (best < 0 || mag < best_mag || (mag == best_mag && id < best)) {
            best = id;
            best_mag = mag;
        }
    }
    return best;
}

IhResult iterative_heuristic(const NetworkCase& c, double tol) {
    Topology topo = full_topology(c);
    if (!is_connected(topo))
        throw GraphError("iterative_heuristic: case graph is disconnected");

    CutSet cuts;
    IhTrace trace;
    while (mesh_count(topo) >= 1) {
        int n_l = mesh_count(topo);
        std::vector<int> loops = loop_lines(topo);
        DispatchSolution d = evaluate(c, topo, tol);
        if (d.status != QpStatus::optimal)
            throw HeuristicError("iterative_heuristic: meshed solve returned " +
                                     std::string(to_string(d.status)),
                                 std::move(trace), d.status);
        std::map<int, double> flows;
        for (int id : loops) flows[id] = d.flow_magnitude(id);
        int cut = select_cut(loops, flows);

        trace.iterations.push_back({topo.n_lines(), n_l,
                                    static_cast<int>(loops.size()), cut, flows[cut],
                                    d.solve_ms});
        cuts.cut_lines.push_back(cut);
        topo = topo.without(cut);
    }
    return {std::move(topo), std::move(cuts), std::move(trace)};
}

Topology mst_baseline(const NetworkCase& c, double tol) {
    Topology topo = full_topology(c);
    if (!is_connected(topo))
        throw GraphError("mst_baseline: case graph is disconnected");
    DispatchSolution d = evaluate(c, topo, tol);
    if (d.status != QpStatus::optimal)
        throw HeuristicError("mst_baseline: meshed solve returned " +
                                 std::string(to_string(d.status)),
                             IhTrace{}, d.status);
    std::map<int, double> weights;
    for (int id : topo.line_ids()) weights[id] = d.flow_magnitude(id);
    return max_spanning_tree(topo, weights);
}

OracleResult brute_force_oracle(const NetworkCase& c, double tol, long long limit,
                                bool keep_objectives) {
    Topology full = full_topology(c);
    if (!is_connected(full))
        throw GraphError("brute_force_oracle: case graph is disconnected");

    std::optional<Topology> best_tree;
    double best_obj = 0.0;
    std::vector<double> objs;
    long long count = 0;
    auto visit = [&](const Topology& tree) {
        DispatchSolution d = evaluate(c, tree, tol);
        if (d.status != QpStatus::optimal)
            throw HeuristicError("brute_force_oracle: tree solve returned " +
                                     std::string(to_string(d.status)),
                                 IhTrace{}, d.status);
        ++count;
        if (keep_objectives) objs.push_back(d.objective);
        if (!best_tree || d.objective > best_obj) {
            best_tree = tree;
            best_obj = d.objective;
        }
    };
    try {
        for_each_spanning_tree(full, limit, visit);
    } catch (const EnumLimitError&) {
        std::optional<OracleResult> partial;
        if (best_tree)
            partial = OracleResult{std::move(*best_tree), best_obj, count,
                                   std::move(objs)};
        throw OracleLimitError("brute_force_oracle: more than " +
                                   std::to_string(limit) + " spanning trees",
                               std::move(partial));
    }
    return {std::move(*best_tree), best_obj, count, std::move(objs)};
}

} // namespace restopo
