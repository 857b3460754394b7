#pragma once

// Shared test utilities: deterministic random structures, finite-difference
// gradient checking, and a few well-known fixtures.

#include <cmath>
#include <functional>
#include <vector>

#include "ccm/ccwl.hpp"
#include "ccm/complex.hpp"
#include "ccm/lifting.hpp"
#include "ccm/rng.hpp"
#include "ccm/tensor.hpp"

namespace support {

inline ccm::Graph triangle_graph() { return ccm::Graph::make(3, {{0, 1}, {1, 2}, {0, 2}}); }

inline ccm::Graph path_graph(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return ccm::Graph::make(n, edges);
}

inline ccm::Graph cycle_graph(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return ccm::Graph::make(n, edges);
}

inline ccm::Graph complete_graph(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return ccm::Graph::make(n, edges);
}

// Two disjoint triangles on 6 vertices.
inline ccm::Graph two_triangles_graph() {
    return ccm::Graph::make(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
}

inline ccm::CombinatorialComplex filled_triangle() {
    return ccm::CombinatorialComplex::build(
        3, {{{0, 1}, 1}, {{1, 2}, 1}, {{0, 2}, 1}, {{0, 1, 2}, 2}});
}

inline ccm::Graph random_graph(ccm::Rng& rng, int n, double p) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
    return ccm::Graph::make(n, edges);
}

inline ccm::CombinatorialComplex random_complex(ccm::Rng& rng, int min_n = 3, int max_n = 8) {
    const int n = min_n + static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(max_n - min_n + 1)));
    const double p = rng.uniform(0.25, 0.6);
    const ccm::Graph g = random_graph(rng, n, p);
    switch (rng.next_below(4)) {
        case 0: return ccm::lift_identity(g);
        case 1: return ccm::lift_hypergraph(g);
        case 2: return ccm::lift_simplicial(g);
        default: return ccm::lift_cellular(g, 6);
    }
}

// Random complex whose purely structural stable refinement is discrete
// (every cell in its own class). Scan ordering is then fully canonical, so
// model outputs are exactly invariant under relabeling.
inline ccm::CombinatorialComplex random_discrete_complex(ccm::Rng& rng, int min_n = 4,
                                                         int max_n = 8) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        ccm::CombinatorialComplex cc = random_complex(rng, min_n, max_n);
        if (cc.total_cells() == 0) continue;
        const auto stable =
            ccm::canonical_stable_colors(cc, ccm::init_colors(cc).colors);
        if (stable.all_singleton_classes(cc)) return cc;
    }
    throw std::runtime_error("no discrete complex found");
}

inline std::vector<int> random_permutation(ccm::Rng& rng, int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    return perm;
}

inline ccm::Tensor random_tensor(ccm::Rng& rng, std::vector<std::size_t> shape,
                                 double lo = -1.0, double hi = 1.0) {
    ccm::Tensor t = ccm::Tensor::zeros(std::move(shape));
    for (double& v : *t.data) v = rng.uniform(lo, hi);
    return t;
}

// Central finite differences against the analytic gradient of
// f : leaf values -> scalar. Returns the max gradcheck error
// |a - f| / max(1, |a|, |f|).
struct GradCheck {
    double max_err = 0.0;
    std::size_t checked = 0;
};

inline GradCheck finite_difference_check(
    std::vector<ccm::Tensor*> leaves,
    const std::function<ccm::Tensor(ccm::Tape*, const std::vector<ccm::Tensor>&)>& f,
    double eps = 1e-5) {
    std::vector<ccm::Tensor> values;
    values.reserve(leaves.size());
    for (ccm::Tensor* t : leaves) values.push_back(*t);

    ccm::Tape tape;
    std::vector<ccm::Tensor> bound;
    bound.reserve(values.size());
    for (const ccm::Tensor& t : values) bound.push_back(tape.watch(t));
    const ccm::Tensor loss = f(&tape, bound);
    tape.backward(loss);
    std::vector<ccm::Tensor> analytic;
    analytic.reserve(bound.size());
    for (const ccm::Tensor& t : bound) analytic.push_back(tape.grad(t));

    GradCheck result;
    for (std::size_t li = 0; li < values.size(); ++li) {
        for (std::size_t i = 0; i < values[li].size(); ++i) {
            const double saved = (*values[li].data)[i];
            (*values[li].data)[i] = saved + eps;
            const double up = f(nullptr, values).value();
            (*values[li].data)[i] = saved - eps;
            const double down = f(nullptr, values).value();
            (*values[li].data)[i] = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double an = analytic[li].at(i);
            const double err =
                std::fabs(an - fd) / std::max({1.0, std::fabs(an), std::fabs(fd)});
            result.max_err = std::max(result.max_err, err);
            ++result.checked;
        }
    }
    return result;
}

}  // namespace support
