#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "ccm/error.hpp"

namespace ccm {

// A ranked cell: a non-empty, sorted, duplicate-free vertex set.
struct Cell {
    std::vector<int> vertices;
    int rank = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

// Binary containment matrix between two consecutive ranks. Entry (i, j) is 1
// iff the i-th lower-rank cell's vertex set is contained in the j-th
// higher-rank cell's vertex set.
struct IncidenceMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::pair<int, int>> entries;  // sorted (row, col) positions
};

// Which adjacent-rank cells a given cell exchanges messages with.
// The argument cell lives at the rank the messages arrive at.
enum class Neighborhood {
    NodesOfEdge,  // 0 -> 1: vertices of an edge
    EdgesOfNode,  // 1 -> 0: edges incident to a node
    FacesOfEdge,  // 2 -> 1: faces containing an edge
    EdgesOfFace,  // 1 -> 2: edges bounding a face
};

// Immutable 2-dimensional combinatorial complex. Cells are stored per rank
// in canonical order (lexicographic by vertex set); rank-0 singletons are
// synthesized for every vertex referenced by a higher cell. Construction
// validates rank monotonicity: sigma subset-of tau implies
// rank(sigma) <= rank(tau).
class CombinatorialComplex {
public:
    CombinatorialComplex() = default;  // the empty complex
    static CombinatorialComplex build(int vertex_count, const std::vector<Cell>& cells);

    int vertex_count() const { return vertex_count_; }
    int dimension() const;
    const std::vector<Cell>& cells(int rank) const;
    std::size_t cell_count(int rank) const { return cells(rank).size(); }
    std::size_t total_cells() const;

    // level 1: |V0| x |E1| node-edge matrix; level 2: |E1| x |F2| edge-face.
    IncidenceMatrix incidence(int level) const;

    std::vector<int> neighborhood(int cell_index, Neighborhood kind) const;

    std::string to_json_string(bool pretty = false) const;
    static CombinatorialComplex from_json_string(const std::string& text);
    static CombinatorialComplex load(const std::string& path);
    void save(const std::string& path, bool pretty = false) const;

    friend bool operator==(const CombinatorialComplex&, const CombinatorialComplex&) = default;

private:
    int vertex_count_ = 0;
    std::array<std::vector<Cell>, 3> by_rank_;
};

// Relabels every vertex id through `perm` (old id -> new id) and rebuilds,
// which re-canonicalizes cell order under the new labels.
CombinatorialComplex relabel(const CombinatorialComplex& cc, const std::vector<int>& perm);

}  // namespace ccm
