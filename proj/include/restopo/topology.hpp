#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace restopo {

// An undirected line in a topology. Endpoints are dense bus indices in
// [0, n_buses); line_id is the case-level identifier. Parallel lines
// between the same pair of buses are allowed as long as ids differ.
struct TopoEdge {
    int line_id = 0;
    int from = 0;
    int to = 0;
};

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The set of currently closed lines over a fixed bus set. Immutable after
// construction; adjacency is derived once. Lines are kept sorted by id.
class Topology {
  public:
    Topology(int n_buses, std::vector<TopoEdge> closed_lines);

    int n_buses() const { return n_buses_; }
    const std::vector<TopoEdge>& lines() const { return lines_; }
    int n_lines() const { return static_cast<int>(lines_.size()); }
    bool has_line(int line_id) const;
    std::vector<int> line_ids() const;

    // Copy of this topology with one line opened.
    Topology without(int line_id) const;

    // adjacency()[bus] lists indices into lines() touching that bus.
    const std::vector<std::vector<int>>& adjacency() const { return adj_; }

  private:
    int n_buses_ = 0;
    std::vector<TopoEdge> lines_;
    std::vector<std::vector<int>> adj_;
};

// Lines opened so far, in cut order.
struct CutSet {
    std::vector<int> cut_lines;
};

bool is_connected(const Topology& t);

// Number of independent loops |E| - |N| + 1. Only defined for a single
// connected island; throws GraphError otherwise.
int mesh_count(const Topology& t);

// Line ids lying on at least one cycle (the non-bridges), ascending.
// Throws GraphError when t is disconnected.
std::vector<int> loop_lines(const Topology& t);

// Connected and |E| = |N| - 1.
bool is_radial(const Topology& t);

// Spanning tree maximizing total weight. Every closed line needs a weight.
// Weight ties are resolved so that the lowest-id line is the one dropped.
Topology max_spanning_tree(const Topology& t, const std::map<int, double>& weights);

struct EnumLimitError : std::runtime_error {
    explicit EnumLimitError(long long partial)
        : std::runtime_error("spanning tree enumeration exceeded limit"),
          partial_count(partial) {}
    long long partial_count = 0;
};

// All spanning trees of t, each exactly once, in a deterministic order
// (lexicographic by included line ids). Throws EnumLimitError carrying the
// partial count as soon as more than `limit` trees would be produced.
std::vector<Topology> enumerate_spanning_trees(const Topology& t, long long limit);

// Visitor form used by the oracle; visit order matches the vector form.
void for_each_spanning_tree(const Topology& t, long long limit,
                            const std::function<void(const Topology&)>& visit);

} // namespace restopo
