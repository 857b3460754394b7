#include "ccm/ccwl.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace ccm {

std::size_t ColorAssignment::class_count() const {
    std::set<int> distinct;
    for (const auto& rank_colors : colors) distinct.insert(rank_colors.begin(), rank_colors.end());
    return distinct.size();
}

bool ColorAssignment::all_singleton_classes(const CombinatorialComplex& cc) const {
    return class_count() == cc.total_cells();
}

std::vector<std::pair<int, int>> ColorAssignment::tagged_multiset() const {
    std::vector<std::pair<int, int>> out;
    for (int rank = 0; rank <= 2; ++rank)
        for (int c : colors[static_cast<std::size_t>(rank)]) out.emplace_back(rank, c);
    std::sort(out.begin(), out.end());
    return out;
}

int ColorDictionary::intern(const ColorSignature& s) {
    auto [it, inserted] = table_.emplace(s, static_cast<int>(table_.size()));
    return it->second;
}

ColorAssignment init_colors(const CombinatorialComplex& cc) {
    ColorAssignment a;
    for (int rank = 0; rank <= 2; ++rank)
        a.colors[static_cast<std::size_t>(rank)].assign(cc.cell_count(rank), 0);
    a.iteration = 0;
    return a;
}

namespace {

// Adjacency index: for every cell, the indices of its neighbors at each
// relevant adjacent rank.
struct NeighborIndex {
    std::vector<std::vector<int>> edges_of_node;
    std::vector<std::vector<int>> nodes_of_edge;
    std::vector<std::vector<int>> faces_of_edge;
    std::vector<std::vector<int>> edges_of_face;

    explicit NeighborIndex(const CombinatorialComplex& cc) {
        edges_of_node.resize(cc.cell_count(0));
        nodes_of_edge.resize(cc.cell_count(1));
        faces_of_edge.resize(cc.cell_count(1));
        edges_of_face.resize(cc.cell_count(2));
        for (const auto& [v, e] : cc.incidence(1).entries) {
            edges_of_node[static_cast<std::size_t>(v)].push_back(e);
            nodes_of_edge[static_cast<std::size_t>(e)].push_back(v);
        }
        for (const auto& [e, f] : cc.incidence(2).entries) {
            faces_of_edge[static_cast<std::size_t>(e)].push_back(f);
            edges_of_face[static_cast<std::size_t>(f)].push_back(e);
        }
    }
};

std::vector<int> sorted_colors(const std::vector<int>& neighbor_ids,
                               const std::vector<int>& palette) {
    std::vector<int> out;
    out.reserve(neighbor_ids.size());
    for (int i : neighbor_ids) out.push_back(palette[static_cast<std::size_t>(i)]);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ColorSignature> build_signatures(const CombinatorialComplex& cc,
                                             const NeighborIndex& index,
                                             const ColorAssignment& colors) {
    std::vector<ColorSignature> sigs;
    sigs.reserve(cc.total_cells());
    const auto& [nodes, edges, faces] = colors.colors;
    for (std::size_t v = 0; v < cc.cell_count(0); ++v)
        sigs.push_back({0, nodes[v], sorted_colors(index.edges_of_node[v], edges), {}});
    for (std::size_t e = 0; e < cc.cell_count(1); ++e)
        sigs.push_back({1, edges[e], sorted_colors(index.nodes_of_edge[e], nodes),
                        sorted_colors(index.faces_of_edge[e], faces)});
    for (std::size_t f = 0; f < cc.cell_count(2); ++f)
        sigs.push_back({2, faces[f], sorted_colors(index.edges_of_face[f], edges), {}});
    return sigs;
}

ColorAssignment assign_from_ids(const CombinatorialComplex& cc, const std::vector<int>& ids,
                                int iteration) {
    ColorAssignment next;
    next.iteration = iteration;
    std::size_t pos = 0;
    for (int rank = 0; rank <= 2; ++rank) {
        auto& out = next.colors[static_cast<std::size_t>(rank)];
        out.assign(cc.cell_count(rank), 0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = ids[pos++];
    }
    return next;
}

}  // namespace

ColorAssignment refine_step(const CombinatorialComplex& cc, const ColorAssignment& colors,
                            ColorDictionary& dict) {
    const NeighborIndex index(cc);
    const auto sigs = build_signatures(cc, index, colors);
    std::vector<int> ids;
    ids.reserve(sigs.size());
    for (const auto& s : sigs) ids.push_back(dict.intern(s));
    return assign_from_ids(cc, ids, colors.iteration + 1);
}

ColorAssignment stable_colors(const CombinatorialComplex& cc) {
    ColorDictionary dict;
    ColorAssignment current = init_colors(cc);
    const int bound = static_cast<int>(cc.total_cells());
    for (int it = 0; it < bound; ++it) {
        ColorAssignment next = refine_step(cc, current, dict);
        // Refinement only splits classes, so an unchanged class count means
        // an unchanged partition.
        if (next.class_count() == current.class_count()) return next;
        current = std::move(next);
    }
    return current;
}

DistinguishResult distinguish(const CombinatorialComplex& a, const CombinatorialComplex& b,
                              int max_iters) {
    if (max_iters < 0)
        max_iters = static_cast<int>(std::max(a.total_cells(), b.total_cells()));
    ColorDictionary dict;
    ColorAssignment ca = init_colors(a), cb = init_colors(b);
    DistinguishResult result;
    result.classes_a.push_back(static_cast<int>(ca.class_count()));
    result.classes_b.push_back(static_cast<int>(cb.class_count()));
    if (ca.tagged_multiset() != cb.tagged_multiset()) {
        result.distinguished = true;
        result.iteration = 0;
        return result;
    }
    for (int it = 1; it <= max_iters; ++it) {
        const std::size_t prev_a = ca.class_count(), prev_b = cb.class_count();
        ca = refine_step(a, ca, dict);
        cb = refine_step(b, cb, dict);
        result.classes_a.push_back(static_cast<int>(ca.class_count()));
        result.classes_b.push_back(static_cast<int>(cb.class_count()));
        result.iteration = it;
        if (ca.tagged_multiset() != cb.tagged_multiset()) {
            result.distinguished = true;
            return result;
        }
        if (ca.class_count() == prev_a && cb.class_count() == prev_b) return result;
    }
    return result;
}

bool brute_force_isomorphic(const CombinatorialComplex& a, const CombinatorialComplex& b) {
    if (a.vertex_count() > 10 || b.vertex_count() > 10)
        throw TooLarge("brute-force isomorphism limited to 10 vertices");
    if (a.vertex_count() != b.vertex_count()) return false;
    for (int rank = 0; rank <= 2; ++rank)
        if (a.cell_count(rank) != b.cell_count(rank)) return false;

    std::array<std::set<std::vector<int>>, 3> target;
    for (int rank = 0; rank <= 2; ++rank)
        for (const Cell& c : b.cells(rank))
            target[static_cast<std::size_t>(rank)].insert(c.vertices);

    std::vector<int> perm(static_cast<std::size_t>(a.vertex_count()));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (int rank = 0; rank <= 2 && ok; ++rank)
            for (const Cell& c : a.cells(rank)) {
                std::vector<int> mapped;
                mapped.reserve(c.vertices.size());
                for (int v : c.vertices) mapped.push_back(perm[static_cast<std::size_t>(v)]);
                std::sort(mapped.begin(), mapped.end());
                if (!target[static_cast<std::size_t>(rank)].count(mapped)) {
                    ok = false;
                    break;
                }
            }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

ColorAssignment canonical_stable_colors(const CombinatorialComplex& cc,
                                        const std::array<std::vector<int>, 3>& initial) {
    for (int rank = 0; rank <= 2; ++rank)
        if (initial[static_cast<std::size_t>(rank)].size() != cc.cell_count(rank))
            throw ShapeMismatch("initial colors do not match cell counts");
    const NeighborIndex index(cc);
    ColorAssignment current;
    current.colors = initial;
    current.iteration = 0;
    const int bound = static_cast<int>(cc.total_cells()) + 1;
    for (int it = 0; it < bound; ++it) {
        const auto sigs = build_signatures(cc, index, current);
        // Renumber by sorted signature order: ids depend only on signature
        // content, never on cell enumeration order.
        std::vector<ColorSignature> distinct(sigs);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        std::vector<int> ids;
        ids.reserve(sigs.size());
        for (const auto& s : sigs) {
            const auto pos = std::lower_bound(distinct.begin(), distinct.end(), s);
            ids.push_back(static_cast<int>(pos - distinct.begin()));
        }
        ColorAssignment next = assign_from_ids(cc, ids, current.iteration + 1);
        if (next.class_count() == current.class_count()) return next;
        current = std::move(next);
    }
    return current;
}

}  // namespace ccm
