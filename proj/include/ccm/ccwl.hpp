#pragma once

#include <array>
#include <map>
#include <vector>

#include "ccm/complex.hpp"

namespace ccm {

// Per-rank cell colorings produced by refinement.
struct ColorAssignment {
    std::array<std::vector<int>, 3> colors;
    int iteration = 0;

    // Distinct colors over all cells of this complex.
    std::size_t class_count() const;
    bool all_singleton_classes(const CombinatorialComplex& cc) const;
    // Sorted (rank, color) pairs -- the label multiset two complexes are
    // compared on.
    std::vector<std::pair<int, int>> tagged_multiset() const;
};

// Refinement signature of one cell: its rank, its current color, and the
// sorted color lists of its adjacent-rank neighborhoods. Interning these
// in a dictionary realizes an injective relabeling hash.
struct ColorSignature {
    int rank = 0;
    int own = 0;
    std::vector<int> first;   // nodes: edge colors; edges: node colors; faces: edge colors
    std::vector<int> second;  // edges only: face colors

    auto operator<=>(const ColorSignature&) const = default;
};

// Interning dictionary. Shared between the two complexes of a comparison so
// equal signatures receive equal ids on both sides.
class ColorDictionary {
public:
    int intern(const ColorSignature& s);
    std::size_t size() const { return table_.size(); }

private:
    std::map<ColorSignature, int> table_;
};

// All cells of all ranks start at color 0.
ColorAssignment init_colors(const CombinatorialComplex& cc);

// One refinement round. New node labels hash the node color with the
// multiset of incident edge colors; edge labels add the vertex and face
// multisets; face labels add the bounding edge multiset.
ColorAssignment refine_step(const CombinatorialComplex& cc, const ColorAssignment& colors,
                            ColorDictionary& dict);

// Iterates refine_step until the induced cell partition stops changing.
// Stabilizes within total_cells() iterations.
ColorAssignment stable_colors(const CombinatorialComplex& cc);

struct DistinguishResult {
    bool distinguished = false;
    int iteration = 0;            // first differing iteration, or last compared
    std::vector<int> classes_a;   // per-iteration class counts
    std::vector<int> classes_b;
};

// Compares rank-tagged label multisets per iteration under a shared
// dictionary. Returns at the first iteration where they differ, or reports
// indistinguishable once both partitions are stable.
DistinguishResult distinguish(const CombinatorialComplex& a, const CombinatorialComplex& b,
                              int max_iters = -1);

// Exhaustive search over vertex bijections for a rank-preserving cell
// correspondence. Validation oracle; vertex counts must be <= 10.
bool brute_force_isomorphic(const CombinatorialComplex& a, const CombinatorialComplex& b);

// Stable refinement with label-independent color ids: each round renumbers
// the distinct signatures in their sorted order, so the resulting ids are
// invariant under vertex relabeling. `initial` seeds the node/edge/face
// colors (pass init_colors(cc).colors for purely structural refinement);
// initial ids must themselves be label-independent for the output to be.
ColorAssignment canonical_stable_colors(const CombinatorialComplex& cc,
                                        const std::array<std::vector<int>, 3>& initial);

}  // namespace ccm
