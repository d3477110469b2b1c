#include "restopo/topology.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace restopo {

Topology::Topology(int n_buses, std::vector<TopoEdge> closed_lines)
    : n_buses_(n_buses), lines_(std::move(closed_lines)) {
    if (n_buses_ < 0) throw GraphError("topology: negative bus count");
    std::sort(lines_.begin(), lines_.end(),
              [](const TopoEdge& a, const TopoEdge& b) { return a.line_id < b.line_id; });
    for (std::size_t i = 0; i < lines_.size(); ++i) {
        const TopoEdge& e = lines_[i];
        if (e.from < 0 || e.from >= n_buses_ || e.to < 0 || e.to >= n_buses_)
            throw GraphError("topology: line " + std::to_string(e.line_id) +
                             " has endpoint outside the bus range");
        if (e.from == e.to)
            throw GraphError("topology: line " + std::to_string(e.line_id) +
                             " is a self loop");
        if (i > 0 && lines_[i - 1].line_id == e.line_id)
            throw GraphError("topology: duplicate line id " + std::to_string(e.line_id));
    }
    adj_.assign(n_buses_, {});
    for (std::size_t i = 0; i < lines_.size(); ++i) {
        adj_[lines_[i].from].push_back(static_cast<int>(i));
        adj_[lines_[i].to].push_back(static_cast<int>(i));
    }
}

bool Topology::has_line(int line_id) const {
    auto it = std::lower_bound(lines_.begin(), lines_.end(), line_id,
                               [](const TopoEdge& e, int id) { return e.line_id < id; });
    return it != lines_.end() && it->line_id == line_id;
}

std::vector<int> Topology::line_ids() const {
    std::vector<int> ids;
    ids.reserve(lines_.size());
    for (const TopoEdge& e : lines_) ids.push_back(e.line_id);
    return ids;
}

Topology Topology::without(int line_id) const {
    std::vector<TopoEdge> kept;
    kept.reserve(lines_.size());
    bool found = false;
    for (const TopoEdge& e : lines_) {
        if (e.line_id == line_id) {
            found = true;
            continue;
        }
        kept.push_back(e);
    }
    if (!found)
        throw GraphError("topology: cannot open unknown line " + std::to_string(line_id));
    return Topology(n_buses_, std::move(kept));
}

bool is_connected(const Topology& t) {
    const int n = t.n_buses();
    if (n <= 1) return true;
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int ei : t.adjacency()[u]) {
            const TopoEdge& e = t.lines()[ei];
            int v = (e.from == u) ? e.to : e.from;
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    return reached == n;
}

int mesh_count(const Topology& t) {
    if (!is_connected(t))
        throw GraphError("mesh_count: topology is not a single connected island");
    return t.n_lines() - t.n_buses() + 1;
}

namespace {

// Iterative DFS computing discovery/low values. An edge is a bridge iff
// low[child] > disc[parent]; everything else lies on a cycle. The edge used
// to enter a vertex is skipped by index, so parallel lines are handled.
std::vector<char> bridge_flags(const Topology& t) {
    const int n = t.n_buses();
    const int m = t.n_lines();
    std::vector<char> is_bridge(m, 0);
    std::vector<int> disc(n, -1), low(n, 0), parent_edge(n, -1), it_pos(n, 0);
    int timer = 0;
    for (int root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        std::vector<int> stack{root};
        disc[root] = low[root] = timer++;
        while (!stack.empty()) {
            int u = stack.back();
            if (it_pos[u] < static_cast<int>(t.adjacency()[u].size())) {
                int ei = t.adjacency()[u][it_pos[u]++];
                if (ei == parent_edge[u]) continue;
                const TopoEdge& e = t.lines()[ei];
                int v = (e.from == u) ? e.to : e.from;
                if (disc[v] == -1) {
                    disc[v] = low[v] = timer++;
                    parent_edge[v] = ei;
                    stack.push_back(v);
                } else {
                    low[u] = std::min(low[u], disc[v]);
                }
            } else {
                stack.pop_back();
                if (!stack.empty()) {
                    int p = stack.back();
                    low[p] = std::min(low[p], low[u]);
                    if (low[u] > disc[p]) is_bridge[parent_edge[u]] = 1;
                }
            }
        }
    }
    return is_bridge;
}

struct UnionFind {
    std::vector<int> parent, rank_;
    explicit UnionFind(int n) : parent(n), rank_(n, 0) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }
};

} // namespace

std::vector<int> loop_lines(const Topology& t) {
    if (!is_connected(t))
        throw GraphError("loop_lines: topology is not a single connected island");
    std::vector<char> bridges = bridge_flags(t);
    std::vector<int> out;
    for (int i = 0; i < t.n_lines(); ++i)
        if (!bridges[i]) out.push_back(t.lines()[i].line_id);
    return out;
}

bool is_radial(const Topology& t) {
    return t.n_lines() == t.n_buses() - 1 && is_connected(t);
}

Topology max_spanning_tree(const Topology& t, const std::map<int, double>& weights) {
    if (!is_connected(t))
        throw GraphError("max_spanning_tree: topology is not connected");
    std::vector<TopoEdge> order = t.lines();
    for (const TopoEdge& e : order)
        if (weights.find(e.line_id) == weights.end())
            throw std::invalid_argument("max_spanning_tree: missing weight for line " +
                                        std::to_string(e.line_id));
    // Higher ids go first within a weight tie, so the dropped line of a tied
    // cycle is the lowest id, matching the cut tie-break used elsewhere.
    std::stable_sort(order.begin(), order.end(),
                     [&](const TopoEdge& a, const TopoEdge& b) {
                         double wa = weights.at(a.line_id), wb = weights.at(b.line_id);
                         if (wa != wb) return wa > wb;
                         return a.line_id > b.line_id;
                     });
    UnionFind uf(t.n_buses());
    std::vector<TopoEdge> tree;
    tree.reserve(t.n_buses() - 1);
    for (const TopoEdge& e : order)
        if (uf.unite(e.from, e.to)) tree.push_back(e);
    return Topology(t.n_buses(), std::move(tree));
}

namespace {

// Backtracking deletion/contraction over lines in ascending id order: each
// line is either put into the tree (if it does not close a cycle) or
// discarded (if the remaining lines still connect the graph).
struct TreeEnumerator {
    const Topology& topo;
    long long limit;
    const std::function<void(const Topology&)>& visit;
    long long count = 0;
    std::vector<TopoEdge> chosen;

    TreeEnumerator(const Topology& t, long long lim,
                   const std::function<void(const Topology&)>& v)
        : topo(t), limit(lim), visit(v) {}

    // Can the partial tree in `uf_in` still be completed using only lines
    // from `next` on?
    bool can_complete(std::size_t next, const UnionFind& uf_in) const {
        UnionFind uf = uf_in;
        int merges = 0;
        for (std::size_t i = next; i < topo.lines().size(); ++i) {
            const TopoEdge& e = topo.lines()[i];
            if (uf.unite(e.from, e.to)) ++merges;
        }
        int needed = topo.n_buses() - 1 - static_cast<int>(chosen.size());
        return merges == needed;
    }

    void run(std::size_t next, UnionFind uf) {
        if (static_cast<int>(chosen.size()) == topo.n_buses() - 1) {
            ++count;
            if (count > limit) throw EnumLimitError(count - 1);
            visit(Topology(topo.n_buses(), chosen));
            return;
        }
        if (next >= topo.lines().size()) return;
        const TopoEdge& e = topo.lines()[next];
        // Include branch first: trees come out in lexicographic id order.
        UnionFind with = uf;
        if (with.unite(e.from, e.to)) {
            chosen.push_back(e);
            run(next + 1, std::move(with));
            chosen.pop_back();
        }
        // Exclude branch, pruned when the rest cannot reconnect.
        if (can_complete(next + 1, uf)) run(next + 1, std::move(uf));
    }
};

} // namespace

void for_each_spanning_tree(const Topology& t, long long limit,
                            const std::function<void(const Topology&)>& visit) {
    if (limit <= 0) throw std::invalid_argument("enumerate_spanning_trees: limit must be > 0");
    if (!is_connected(t))
        throw GraphError("enumerate_spanning_trees: topology is not connected");
    TreeEnumerator en(t, limit, visit);
    en.run(0, UnionFind(t.n_buses()));
}

std::vector<Topology> enumerate_spanning_trees(const Topology& t, long long limit) {
    std::vector<Topology> trees;
    for_each_spanning_tree(t, limit, [&](const Topology& tree) { trees.push_back(tree); });
    return trees;
}

} // namespace restopo
