#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "restopo/case.hpp"
#include "restopo/topology.hpp"

namespace testutil {

#ifndef RESTOPO_CASE_DIR
#define RESTOPO_CASE_DIR "cases"
#endif

inline restopo::NetworkCase fixture(const std::string& name) {
    return restopo::load_case(std::string(RESTOPO_CASE_DIR) + "/" + name + ".json");
}

// Deterministic generator shared by the randomized suites; results must not
// depend on the platform's <random> internals.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t limit = ~0ULL - ~0ULL % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Random connected topology: a spanning tree over n buses plus `extra`
// chords between buses at tree-distance <= 3, so every added mesh stays
// small and the enumeration oracle stays cheap.
inline restopo::Topology random_topology(int n, int extra, Rng& rng) {
    std::vector<restopo::TopoEdge> edges;
    std::vector<int> parent(n, -1);
    for (int v = 1; v < n; ++v) {
        int u = static_cast<int>(rng.below(v));
        parent[v] = u;
        edges.push_back({v, u, v}); // line id = child bus index
    }
    auto depth_path = [&](int v) {
        std::vector<int> path;
        for (int x = v; x != -1; x = parent[x]) path.push_back(x);
        return path;
    };
    auto tree_dist = [&](int a, int b) {
        std::vector<int> pa = depth_path(a), pb = depth_path(b);
        for (std::size_t i = 0; i < pa.size(); ++i)
            for (std::size_t j = 0; j < pb.size(); ++j)
                if (pa[i] == pb[j]) return static_cast<int>(i + j);
        return 1 << 20;
    };
    int next_id = n;
    for (int k = 0; k < extra; ++k) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            int a = static_cast<int>(rng.below(n));
            int b = static_cast<int>(rng.below(n));
            if (a == b) continue;
            if (tree_dist(a, b) > 3) continue;
            edges.push_back({next_id++, a, b});
            break;
        }
    }
    return restopo::Topology(n, std::move(edges));
}

// Cases derived from a random topology: one or two generous sources, light
// loads everywhere else, ample thermal caps. Always valid and feasible.
inline restopo::NetworkCase random_case(int n, int extra, Rng& rng) {
    restopo::Topology t = random_topology(n, extra, rng);
    restopo::NetworkCase c;
    c.meta.name = "random";
    double total_load = 0.0;
    for (int i = 0; i < n; ++i) {
        restopo::Bus b;
        b.id = i + 1;
        if (i > 0) {
            double p = 0.01 + 0.04 * rng.unit();
            b.p_load = {p};
            b.q_load = {0.3 * p};
            b.weight = (rng.below(10) == 0) ? 100.0 : 1.0;
            total_load += p;
        } else {
            b.p_load = {0.0};
            b.q_load = {0.0};
        }
        c.buses.push_back(std::move(b));
    }
    for (const restopo::TopoEdge& e : t.lines()) {
        restopo::Line l;
        l.id = e.line_id;
        l.from_bus = e.from + 1;
        l.to_bus = e.to + 1;
        l.resistance = 0.005 + 0.015 * rng.unit();
        l.p_max = 2.0;
        c.lines.push_back(l);
    }
    restopo::Source s;
    s.bus = 1;
    s.p_max = 1.5 * total_load + 0.5;
    s.q_max = s.p_max;
    c.sources.push_back(s);
    if (n >= 10 && rng.below(2) == 0) {
        restopo::Source dg;
        dg.bus = static_cast<int>(2 + rng.below(n - 1));
        dg.p_max = 0.3;
        dg.q_max = 0.2;
        c.sources.push_back(dg);
    }
    restopo::mark_load_buses(c);
    return c;
}

// Spanning-tree count by the matrix-tree theorem: determinant of the
// Laplacian with one row/column removed. Exact for the sizes used here.
inline long long kirchhoff_tree_count(const restopo::Topology& t) {
    int n = t.n_buses();
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (const restopo::TopoEdge& e : t.lines()) {
        lap(e.from, e.from) += 1.0;
        lap(e.to, e.to) += 1.0;
        lap(e.from, e.to) -= 1.0;
        lap(e.to, e.from) -= 1.0;
    }
    if (n <= 1) return 1;
    Eigen::MatrixXd minor = lap.bottomRightCorner(n - 1, n - 1);
    return static_cast<long long>(std::llround(minor.determinant()));
}

// Reference loop-line finder: a line is on a cycle iff removing it keeps
// the graph connected.
inline std::vector<int> loop_lines_by_removal(const restopo::Topology& t) {
    std::vector<int> out;
    for (int id : t.line_ids())
        if (restopo::is_connected(t.without(id))) out.push_back(id);
    return out;
}

} // namespace testutil
