#include "ccm/complex.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ccm {

namespace {

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
    // both sorted
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::string cell_str(const Cell& c) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
        if (i) os << ",";
        os << c.vertices[i];
    }
    os << "} rank " << c.rank;
    return os.str();
}

}  // namespace

CombinatorialComplex CombinatorialComplex::build(int vertex_count,
                                                 const std::vector<Cell>& cells) {
    if (vertex_count < 0) throw InvalidParameter("negative vertex count");
    CombinatorialComplex cc;
    cc.vertex_count_ = vertex_count;

    std::set<std::pair<int, std::vector<int>>> seen;
    for (const Cell& raw : cells) {
        if (raw.rank < 0 || raw.rank > 2)
            throw InvalidParameter("rank " + std::to_string(raw.rank) + " outside {0,1,2}");
        if (raw.vertices.empty()) throw InvalidParameter("empty vertex set");
        Cell c = raw;
        std::sort(c.vertices.begin(), c.vertices.end());
        if (std::adjacent_find(c.vertices.begin(), c.vertices.end()) != c.vertices.end())
            throw InvalidParameter("duplicate vertex in cell " + cell_str(c));
        for (int v : c.vertices)
            if (v < 0 || v >= vertex_count)
                throw UnknownVertex("vertex " + std::to_string(v) + " in cell " + cell_str(c));
        if (c.rank == 0 && c.vertices.size() != 1)
            throw RankViolation("rank-0 cell " + cell_str(c) + " is not a singleton");
        if (!seen.insert({c.rank, c.vertices}).second)
            throw DuplicateCell("duplicate cell " + cell_str(c));
        cc.by_rank_[static_cast<std::size_t>(c.rank)].push_back(std::move(c));
    }

    // Synthesize missing rank-0 singletons for referenced vertices.
    std::set<int> have_singleton;
    for (const Cell& c : cc.by_rank_[0]) have_singleton.insert(c.vertices[0]);
    std::set<int> referenced;
    for (int rank = 1; rank <= 2; ++rank)
        for (const Cell& c : cc.by_rank_[static_cast<std::size_t>(rank)])
            referenced.insert(c.vertices.begin(), c.vertices.end());
    for (int v : referenced)
        if (!have_singleton.count(v)) cc.by_rank_[0].push_back(Cell{{v}, 0});

    for (auto& rank_cells : cc.by_rank_)
        std::sort(rank_cells.begin(), rank_cells.end(),
                  [](const Cell& a, const Cell& b) { return a.vertices < b.vertices; });

    // Rank monotonicity across every stored pair.
    for (int lo = 0; lo <= 2; ++lo)
        for (int hi = 0; hi <= 2; ++hi) {
            if (lo <= hi) continue;
            for (const Cell& s : cc.by_rank_[static_cast<std::size_t>(lo)])
                for (const Cell& t : cc.by_rank_[static_cast<std::size_t>(hi)])
                    if (subset(s.vertices, t.vertices))
                        throw RankViolation(cell_str(s) + " is contained in lower-rank " +
                                            cell_str(t));
        }
    return cc;
}

int CombinatorialComplex::dimension() const {
    for (int rank = 2; rank >= 0; --rank)
        if (!by_rank_[static_cast<std::size_t>(rank)].empty()) return rank;
    return -1;
}

const std::vector<Cell>& CombinatorialComplex::cells(int rank) const {
    if (rank < 0 || rank > 2)
        throw IndexOutOfRange("rank " + std::to_string(rank) + " outside {0,1,2}");
    return by_rank_[static_cast<std::size_t>(rank)];
}

std::size_t CombinatorialComplex::total_cells() const {
    return by_rank_[0].size() + by_rank_[1].size() + by_rank_[2].size();
}

IncidenceMatrix CombinatorialComplex::incidence(int level) const {
    if (level != 1 && level != 2)
        throw InvalidParameter("incidence level must be 1 or 2");
    const auto& lower = by_rank_[static_cast<std::size_t>(level - 1)];
    const auto& upper = by_rank_[static_cast<std::size_t>(level)];
    IncidenceMatrix m;
    m.rows = lower.size();
    m.cols = upper.size();
    for (std::size_t i = 0; i < lower.size(); ++i)
        for (std::size_t j = 0; j < upper.size(); ++j)
            if (subset(lower[i].vertices, upper[j].vertices))
                m.entries.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return m;
}

std::vector<int> CombinatorialComplex::neighborhood(int cell_index, Neighborhood kind) const {
    const int arg_rank = (kind == Neighborhood::EdgesOfNode)   ? 0
                         : (kind == Neighborhood::EdgesOfFace) ? 2
                                                               : 1;
    const auto& arg_cells = by_rank_[static_cast<std::size_t>(arg_rank)];
    if (cell_index < 0 || static_cast<std::size_t>(cell_index) >= arg_cells.size())
        throw IndexOutOfRange("cell index " + std::to_string(cell_index) + " of " +
                              std::to_string(arg_cells.size()) + " rank-" +
                              std::to_string(arg_rank) + " cells");
    const Cell& sigma = arg_cells[static_cast<std::size_t>(cell_index)];

    std::vector<int> result;
    auto scan = [&](int other_rank, bool other_contains_sigma) {
        const auto& others = by_rank_[static_cast<std::size_t>(other_rank)];
        for (std::size_t j = 0; j < others.size(); ++j) {
            const bool hit = other_contains_sigma
                                 ? subset(sigma.vertices, others[j].vertices)
                                 : subset(others[j].vertices, sigma.vertices);
            if (hit) result.push_back(static_cast<int>(j));
        }
    };
    switch (kind) {
        case Neighborhood::NodesOfEdge: scan(0, false); break;
        case Neighborhood::EdgesOfNode: scan(1, true); break;
        case Neighborhood::FacesOfEdge: scan(2, true); break;
        case Neighborhood::EdgesOfFace: scan(1, false); break;
    }
    return result;  // ascending by construction
}

namespace {

nlohmann::json complex_to_json(const CombinatorialComplex& cc) {
    nlohmann::json cells = nlohmann::json::array();
    for (int rank = 0; rank <= 2; ++rank)
        for (const Cell& c : cc.cells(rank))
            cells.push_back({{"rank", c.rank}, {"vertices", c.vertices}});
    return {{"cells", cells}, {"vertex_count", cc.vertex_count()}};
}

}  // namespace

std::string CombinatorialComplex::to_json_string(bool pretty) const {
    return complex_to_json(*this).dump(pretty ? 2 : -1);
}

CombinatorialComplex CombinatorialComplex::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what());
    }
    try {
        const int n = j.at("vertex_count").get<int>();
        std::vector<Cell> cells;
        for (const auto& jc : j.at("cells"))
            cells.push_back(Cell{jc.at("vertices").get<std::vector<int>>(),
                                 jc.at("rank").get<int>()});
        return build(n, cells);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("complex json: ") + e.what());
    }
}

CombinatorialComplex CombinatorialComplex::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_string(buf.str());
}

void CombinatorialComplex::save(const std::string& path, bool pretty) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json_string(pretty) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

CombinatorialComplex relabel(const CombinatorialComplex& cc, const std::vector<int>& perm) {
    if (perm.size() != static_cast<std::size_t>(cc.vertex_count()))
        throw InvalidParameter("permutation size mismatch");
    std::vector<Cell> cells;
    for (int rank = 0; rank <= 2; ++rank)
        for (const Cell& c : cc.cells(rank)) {
            Cell mapped;
            mapped.rank = c.rank;
            for (int v : c.vertices) mapped.vertices.push_back(perm[static_cast<std::size_t>(v)]);
            cells.push_back(std::move(mapped));
        }
    return CombinatorialComplex::build(cc.vertex_count(), cells);
}

}  // namespace ccm
