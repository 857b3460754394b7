#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ccm/lifting.hpp"
#include "support.hpp"

using namespace ccm;

namespace {

// Independent clique oracle: brute-force enumeration of vertex triples.
int count_triangles(const Graph& g) {
    std::set<std::pair<int, int>> edges(g.edges.begin(), g.edges.end());
    int count = 0;
    for (int a = 0; a < g.vertex_count; ++a)
        for (int b = a + 1; b < g.vertex_count; ++b)
            for (int c = b + 1; c < g.vertex_count; ++c)
                if (edges.count({a, b}) && edges.count({a, c}) && edges.count({b, c}))
                    ++count;
    return count;
}

int component_count(const Graph& g) {
    std::vector<int> owner(static_cast<std::size_t>(g.vertex_count), -1);
    const auto adj = g.adjacency();
    int comps = 0;
    for (int v = 0; v < g.vertex_count; ++v) {
        if (owner[static_cast<std::size_t>(v)] != -1) continue;
        ++comps;
        std::vector<int> stack{v};
        owner[static_cast<std::size_t>(v)] = comps;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int w : adj[static_cast<std::size_t>(u)])
                if (owner[static_cast<std::size_t>(w)] == -1) {
                    owner[static_cast<std::size_t>(w)] = comps;
                    stack.push_back(w);
                }
        }
    }
    return comps;
}

}  // namespace

TEST_CASE("identity lift maps edges to rank-1 cells") {
    const auto tri = lift_identity(support::triangle_graph());
    CHECK(tri.cell_count(0) == 3);
    CHECK(tri.cell_count(1) == 3);
    CHECK(tri.cell_count(2) == 0);
    CHECK(tri.dimension() == 1);

    const auto isolated = lift_identity(Graph::make(3, {}));
    CHECK(isolated.cell_count(0) == 3);
    CHECK(isolated.cell_count(1) == 0);

    const auto path = lift_identity(support::path_graph(3));
    CHECK(path.cell_count(1) == 2);
}

TEST_CASE("simplicial lift fills triangles") {
    CHECK(lift_simplicial(support::triangle_graph()).cell_count(2) == 1);
    const auto k4 = support::complete_graph(4);
    CHECK(count_triangles(k4) == 4);
    CHECK(lift_simplicial(k4).cell_count(2) == 4);
    CHECK(lift_simplicial(support::cycle_graph(6)).cell_count(2) == 0);
}

TEST_CASE("cellular lift captures fundamental cycles") {
    const auto hex = lift_cellular(support::cycle_graph(6), 6);
    CHECK(hex.cell_count(2) == 1);
    CHECK(hex.cells(2)[0].vertices.size() == 6);

    const auto two = lift_cellular(support::two_triangles_graph(), 6);
    CHECK(two.cell_count(2) == 2);
    for (const Cell& f : two.cells(2)) CHECK(f.vertices.size() == 3);

    const auto tree = lift_cellular(support::path_graph(5), 6);
    CHECK(tree.cell_count(2) == 0);

    CHECK_THROWS_AS(lift_cellular(support::triangle_graph(), 2), InvalidParameter);
}

TEST_CASE("cellular lift face count matches the cyclomatic number without a bound") {
    Rng rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = support::random_graph(rng, 8, 0.35);
        const auto cc = lift_cellular(g, g.vertex_count + 1);  // cycles never exceed |V|
        const int cyclomatic = static_cast<int>(g.edges.size()) - g.vertex_count +
                               component_count(g);
        CHECK(static_cast<int>(cc.cell_count(2)) == cyclomatic);

        const auto bounded = lift_cellular(g, 4);
        CHECK(bounded.cell_count(2) <= cc.cell_count(2));
    }
}

TEST_CASE("hypergraph lift builds closed neighborhoods") {
    const auto tri = lift_hypergraph(support::triangle_graph());
    CHECK(tri.cell_count(1) == 1);  // all closed neighborhoods coincide
    CHECK(tri.cells(1)[0].vertices == std::vector<int>{0, 1, 2});

    const auto star = lift_hypergraph(Graph::make(4, {{0, 1}, {0, 2}, {0, 3}}));
    CHECK(star.cell_count(1) == 4);

    const auto lonely = lift_hypergraph(Graph::make(1, {}));
    CHECK(lonely.cell_count(0) == 1);
    CHECK(lonely.cell_count(1) == 0);  // singleton hyperedge dropped
}

TEST_CASE("liftings commute with vertex relabeling") {
    Rng rng(67);
    for (int trial = 0; trial < 15; ++trial) {
        const auto g = support::random_graph(rng, 7, 0.4);
        const auto perm = support::random_permutation(rng, 7);
        std::vector<std::pair<int, int>> mapped_edges;
        for (auto [u, v] : g.edges)
            mapped_edges.emplace_back(perm[static_cast<std::size_t>(u)],
                                      perm[static_cast<std::size_t>(v)]);
        const auto permuted = Graph::make(7, mapped_edges);
        for (auto mode : {LiftMode::Identity, LiftMode::Hypergraph, LiftMode::Simplicial,
                          LiftMode::Cellular}) {
            const auto lifted_then_mapped = relabel(lift(g, mode, 6), perm);
            const auto mapped_then_lifted = lift(permuted, mode, 6);
            if (mode == LiftMode::Cellular) {
                // the spanning forest depends on labels, so face sets only
                // agree in count; unbounded, that count is the cyclomatic
                // number on both sides
                for (int rank = 0; rank <= 1; ++rank)
                    CHECK(lifted_then_mapped.cell_count(rank) ==
                          mapped_then_lifted.cell_count(rank));
                CHECK(lift_cellular(g, 8).cell_count(2) ==
                      lift_cellular(permuted, 8).cell_count(2));
            } else {
                CHECK(lifted_then_mapped == mapped_then_lifted);
            }
        }
    }
}

TEST_CASE("simplicial lift is downward closed on triangles") {
    Rng rng(71);
    for (int trial = 0; trial < 15; ++trial) {
        const auto g = support::random_graph(rng, 7, 0.5);
        const auto cc = lift_simplicial(g);
        std::set<std::vector<int>> edge_sets;
        for (const Cell& e : cc.cells(1)) edge_sets.insert(e.vertices);
        for (const Cell& f : cc.cells(2)) {
            const auto& v = f.vertices;
            REQUIRE(v.size() == 3);
            CHECK(edge_sets.count({v[0], v[1]}));
            CHECK(edge_sets.count({v[0], v[2]}));
            CHECK(edge_sets.count({v[1], v[2]}));
        }
    }
}

TEST_CASE("graph json io validates") {
    const auto g = Graph::from_json_string(R"({"vertex_count":3,"edges":[[0,1],[2,1]]})");
    CHECK(g.edges.size() == 2);
    CHECK(g.edges[0] == std::pair<int, int>{0, 1});
    CHECK(g.edges[1] == std::pair<int, int>{1, 2});  // normalized order
    CHECK_THROWS_AS(Graph::from_json_string("{"), ParseError);
    CHECK_THROWS_AS(Graph::from_json_string(R"({"vertex_count":2,"edges":[[0,0]]})"),
                    InvalidParameter);
    CHECK_THROWS_AS(Graph::from_json_string(R"({"vertex_count":2,"edges":[[0,7]]})"),
                    UnknownVertex);
}
