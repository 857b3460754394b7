#include "ccm/lifting.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ccm {

Graph Graph::make(int vertex_count, std::vector<std::pair<int, int>> edges) {
    if (vertex_count < 0) throw InvalidParameter("negative vertex count");
    Graph g;
    g.vertex_count = vertex_count;
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        if (u == v) throw InvalidParameter("self-loop at vertex " + std::to_string(u));
        if (u > v) std::swap(u, v);
        if (u < 0 || v >= vertex_count)
            throw UnknownVertex("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                ") outside vertex range");
        seen.insert({u, v});
    }
    g.edges.assign(seen.begin(), seen.end());
    return g;
}

std::vector<std::vector<int>> Graph::adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(vertex_count));
    for (auto [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& list : adj) std::sort(list.begin(), list.end());
    return adj;
}

Graph Graph::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what());
    }
    try {
        const int n = j.at("vertex_count").get<int>();
        std::vector<std::pair<int, int>> edges;
        for (const auto& je : j.at("edges")) {
            if (!je.is_array() || je.size() != 2)
                throw ParseError("edge entries must be [u, v] pairs");
            edges.emplace_back(je[0].get<int>(), je[1].get<int>());
        }
        return make(n, std::move(edges));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("graph json: ") + e.what());
    }
}

Graph Graph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_string(buf.str());
}

std::string Graph::to_json_string(bool pretty) const {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [u, v] : this->edges) edges.push_back({u, v});
    nlohmann::json j = {{"edges", edges}, {"vertex_count", vertex_count}};
    return j.dump(pretty ? 2 : -1);
}

void Graph::save(const std::string& path, bool pretty) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json_string(pretty) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

LiftMode parse_lift_mode(const std::string& name) {
    if (name == "graph") return LiftMode::Identity;
    if (name == "hypergraph") return LiftMode::Hypergraph;
    if (name == "simplicial") return LiftMode::Simplicial;
    if (name == "cellular") return LiftMode::Cellular;
    throw InvalidParameter("unknown lift mode: " + name);
}

std::string lift_mode_name(LiftMode mode) {
    switch (mode) {
        case LiftMode::Identity: return "graph";
        case LiftMode::Hypergraph: return "hypergraph";
        case LiftMode::Simplicial: return "simplicial";
        case LiftMode::Cellular: return "cellular";
    }
    return "?";
}

namespace {

std::vector<Cell> base_cells(const Graph& g) {
    std::vector<Cell> cells;
    for (int v = 0; v < g.vertex_count; ++v) cells.push_back(Cell{{v}, 0});
    for (auto [u, v] : g.edges) cells.push_back(Cell{{u, v}, 1});
    return cells;
}

}  // namespace

CombinatorialComplex lift_identity(const Graph& g) {
    return CombinatorialComplex::build(g.vertex_count, base_cells(g));
}

CombinatorialComplex lift_simplicial(const Graph& g) {
    std::vector<Cell> cells = base_cells(g);
    const auto adj = g.adjacency();
    std::set<std::pair<int, int>> edge_set(g.edges.begin(), g.edges.end());
    for (auto [u, v] : g.edges)
        for (int w : adj[static_cast<std::size_t>(v)]) {
            if (w <= v || w <= u) continue;
            if (edge_set.count({u, w})) cells.push_back(Cell{{u, v, w}, 2});
        }
    return CombinatorialComplex::build(g.vertex_count, cells);
}

CombinatorialComplex lift_cellular(const Graph& g, int max_cycle_len) {
    if (max_cycle_len < 3)
        throw InvalidParameter("max_cycle_len must be >= 3, got " +
                               std::to_string(max_cycle_len));
    std::vector<Cell> cells = base_cells(g);
    const auto adj = g.adjacency();
    const int n = g.vertex_count;

    std::vector<int> parent(static_cast<std::size_t>(n), -2);  // -2 unvisited, -1 root
    std::vector<int> depth(static_cast<std::size_t>(n), 0);
    std::set<std::pair<int, int>> tree_edges;
    for (int root = 0; root < n; ++root) {
        if (parent[static_cast<std::size_t>(root)] != -2) continue;
        parent[static_cast<std::size_t>(root)] = -1;
        std::deque<int> queue{root};
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : adj[static_cast<std::size_t>(u)]) {
                if (parent[static_cast<std::size_t>(v)] != -2) continue;
                parent[static_cast<std::size_t>(v)] = u;
                depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
                tree_edges.insert({std::min(u, v), std::max(u, v)});
                queue.push_back(v);
            }
        }
    }

    std::set<std::vector<int>> faces;
    for (auto [u, v] : g.edges) {
        if (tree_edges.count({u, v})) continue;
        // fundamental cycle: tree paths from u and v to their lowest common
        // ancestor, plus the non-tree edge itself
        std::vector<int> pu{u}, pv{v};
        int a = u, b = v;
        while (depth[static_cast<std::size_t>(a)] > depth[static_cast<std::size_t>(b)]) {
            a = parent[static_cast<std::size_t>(a)];
            pu.push_back(a);
        }
        while (depth[static_cast<std::size_t>(b)] > depth[static_cast<std::size_t>(a)]) {
            b = parent[static_cast<std::size_t>(b)];
            pv.push_back(b);
        }
        while (a != b) {
            a = parent[static_cast<std::size_t>(a)];
            b = parent[static_cast<std::size_t>(b)];
            pu.push_back(a);
            pv.push_back(b);
        }
        std::set<int> cycle(pu.begin(), pu.end());
        cycle.insert(pv.begin(), pv.end());
        if (static_cast<int>(cycle.size()) <= max_cycle_len)
            faces.insert(std::vector<int>(cycle.begin(), cycle.end()));
    }
    for (const auto& f : faces) cells.push_back(Cell{f, 2});
    return CombinatorialComplex::build(g.vertex_count, cells);
}

CombinatorialComplex lift_hypergraph(const Graph& g) {
    std::vector<Cell> cells;
    for (int v = 0; v < g.vertex_count; ++v) cells.push_back(Cell{{v}, 0});
    const auto adj = g.adjacency();
    std::set<std::vector<int>> hyperedges;
    for (int v = 0; v < g.vertex_count; ++v) {
        std::vector<int> closed = adj[static_cast<std::size_t>(v)];
        closed.push_back(v);
        std::sort(closed.begin(), closed.end());
        if (closed.size() >= 2) hyperedges.insert(std::move(closed));
    }
    for (const auto& h : hyperedges) cells.push_back(Cell{h, 1});
    return CombinatorialComplex::build(g.vertex_count, cells);
}

CombinatorialComplex lift(const Graph& g, LiftMode mode, int max_cycle_len) {
    switch (mode) {
        case LiftMode::Identity: return lift_identity(g);
        case LiftMode::Hypergraph: return lift_hypergraph(g);
        case LiftMode::Simplicial: return lift_simplicial(g);
        case LiftMode::Cellular: return lift_cellular(g, max_cycle_len);
    }
    throw InvalidParameter("unknown lift mode");
}

}  // namespace ccm
