#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ccm/complex.hpp"

namespace ccm {

// Simple undirected graph: duplicate-free unordered vertex pairs, no
// self-loops.
struct Graph {
    int vertex_count = 0;
    std::vector<std::pair<int, int>> edges;  // canonical: first < second, sorted

    static Graph make(int vertex_count, std::vector<std::pair<int, int>> edges);
    std::vector<std::vector<int>> adjacency() const;

    static Graph from_json_string(const std::string& text);
    static Graph load(const std::string& path);
    std::string to_json_string(bool pretty = false) const;
    void save(const std::string& path, bool pretty = false) const;
};

enum class LiftMode { Identity, Hypergraph, Simplicial, Cellular };

LiftMode parse_lift_mode(const std::string& name);
std::string lift_mode_name(LiftMode mode);

// Graph as a dim <= 1 complex: edges become rank-1 cells.
CombinatorialComplex lift_identity(const Graph& g);

// Clique complex truncated at dimension 2: every triangle becomes a
// rank-2 cell.
CombinatorialComplex lift_simplicial(const Graph& g);

// One rank-2 cell per fundamental cycle of a BFS spanning forest (rooted at
// the lowest vertex id of each component) whose length is at most
// max_cycle_len.
CombinatorialComplex lift_cellular(const Graph& g, int max_cycle_len);

// Rank-1 cells are the closed 1-hop neighborhoods {v} + N(v), deduplicated;
// singleton hyperedges are dropped to keep the rank function monotone
// against the rank-0 cells.
CombinatorialComplex lift_hypergraph(const Graph& g);

CombinatorialComplex lift(const Graph& g, LiftMode mode, int max_cycle_len = 6);

}  // namespace ccm
