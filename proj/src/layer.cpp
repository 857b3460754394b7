#include "ccm/layer.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ccm/kernels.hpp"

namespace ccm {

std::size_t RankedFeatures::width() const {
    for (const Tensor& t : h)
        if (t.ndim() == 2 && t.rows() > 0) return t.cols();
    for (const Tensor& t : h)
        if (t.ndim() == 2) return t.cols();
    throw ShapeMismatch("ranked features carry no matrices");
}

Tensor spmm(const IncidenceMatrix& m, const Tensor& x, bool transposed,
            const std::vector<int>* src_scan_pos) {
    const std::size_t out_rows = transposed ? m.cols : m.rows;
    const std::size_t in_rows = transposed ? m.rows : m.cols;
    const std::size_t width = x.cols();
    if (x.rows() != in_rows)
        throw ShapeMismatch("spmm: operand has " + std::to_string(x.rows()) +
                            " rows, expected " + std::to_string(in_rows));
    Tensor out = Tensor::zeros({out_rows, width});

    // Per-destination source lists, accumulated in scan-position order when
    // one is supplied so the summation order does not depend on labels.
    std::vector<std::vector<int>> sources(out_rows);
    for (const auto& [r, c] : m.entries)
        sources[static_cast<std::size_t>(transposed ? c : r)].push_back(transposed ? r : c);
    if (src_scan_pos)
        for (auto& list : sources)
            std::sort(list.begin(), list.end(), [&](int a, int b) {
                return (*src_scan_pos)[static_cast<std::size_t>(a)] <
                       (*src_scan_pos)[static_cast<std::size_t>(b)];
            });
    for (std::size_t dst = 0; dst < out_rows; ++dst) {
        double* yr = out.ptr() + dst * width;
        for (int src : sources[dst]) {
            const double* xr = x.ptr() + static_cast<std::size_t>(src) * width;
            for (std::size_t j = 0; j < width; ++j) yr[j] += xr[j];
        }
    }
    kernels::add_ops(2 * m.entries.size() * width);
    Tape* tape = x.differentiable() ? x.tape : nullptr;
    if (tape) {
        auto entries = std::make_shared<std::vector<std::pair<int, int>>>(m.entries);
        out.tape = tape;
        out.node = tape->record(
            out_rows * width, {x.node},
            [entries, width, transposed](const double* g, const std::vector<double*>& pg) {
                if (!pg[0]) return;
                kernels::add_ops(2 * entries->size() * width);
                for (const auto& [r, c] : *entries) {
                    const std::size_t src = static_cast<std::size_t>(transposed ? c : r);
                    const std::size_t dst = static_cast<std::size_t>(transposed ? r : c);
                    const double* gr = g + src * width;
                    double* xr = pg[0] + dst * width;
                    for (std::size_t j = 0; j < width; ++j) xr[j] += gr[j];
                }
            });
    }
    return out;
}

MlpParams MlpParams::init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
    MlpParams p;
    p.w1 = init_params({in, hidden}, Init::UniformGlorot, rng.next_u64());
    p.b1 = Tensor::zeros({hidden});
    p.w2 = init_params({hidden, out}, Init::UniformGlorot, rng.next_u64());
    p.b2 = Tensor::zeros({out});
    return p;
}

Tensor mlp(const Tensor& x, const MlpParams& p) {
    const Tensor hidden = relu(add_rowwise(matmul(x, p.w1), p.b1));
    return add_rowwise(matmul(hidden, p.w2), p.b2);
}

LayerNormParams LayerNormParams::init(std::size_t width) {
    LayerNormParams p;
    p.gain = Tensor::full({width}, 1.0);
    p.bias = Tensor::zeros({width});
    return p;
}

namespace {

constexpr std::array<std::size_t, 3> kSequenceParts = {2, 3, 2};

Tensor ln_affine(const Tensor& x, const LayerNormParams& p) {
    return add_rowwise(mul_rowwise(layer_norm(x), p.gain), p.bias);
}

}  // namespace

RankLayerParams RankLayerParams::init(int rank, std::size_t d, std::size_t inner,
                                      std::size_t state_dim, Rng& rng) {
    RankLayerParams p;
    const std::size_t in_width = kSequenceParts[static_cast<std::size_t>(rank)] * d;
    p.w_in = init_params({in_width, inner}, Init::UniformGlorot, rng.next_u64());
    p.b_in = Tensor::zeros({inner});
    p.ssm = SsmParams::init(inner, state_dim, rng);
    p.post = MlpParams::init(inner, d, d, rng);
    p.aggregate = MlpParams::init(d, d, d, rng);
    p.update = MlpParams::init(2 * d, d, d, rng);
    p.ffn = MlpParams::init(d, 2 * d, d, rng);
    p.ln1 = LayerNormParams::init(d);
    p.ln2 = LayerNormParams::init(d);
    return p;
}

CcLayerParams CcLayerParams::init(std::size_t d, std::size_t inner, std::size_t state_dim,
                                  Rng& rng) {
    CcLayerParams p;
    for (int rank = 0; rank <= 2; ++rank)
        p.rank[static_cast<std::size_t>(rank)] =
            RankLayerParams::init(rank, d, inner, state_dim, rng);
    return p;
}

namespace {

CellOrder order_from_colors(const CombinatorialComplex& cc, const ColorAssignment& stable) {
    CellOrder order;
    for (int rank = 0; rank <= 2; ++rank) {
        const auto& cells = cc.cells(rank);
        const auto& colors = stable.colors[static_cast<std::size_t>(rank)];
        std::vector<int> idx(cells.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            const int ca = colors[static_cast<std::size_t>(a)];
            const int cb = colors[static_cast<std::size_t>(b)];
            if (ca != cb) return ca < cb;
            return cells[static_cast<std::size_t>(a)].vertices <
                   cells[static_cast<std::size_t>(b)].vertices;
        });
        std::vector<int> inverse(cells.size());
        for (std::size_t p = 0; p < idx.size(); ++p)
            inverse[static_cast<std::size_t>(idx[p])] = static_cast<int>(p);
        order.to_scan[static_cast<std::size_t>(rank)] = std::move(idx);
        order.from_scan[static_cast<std::size_t>(rank)] = std::move(inverse);
    }
    return order;
}

}  // namespace

CellOrder canonical_cell_order(const CombinatorialComplex& cc) {
    return order_from_colors(cc, canonical_stable_colors(cc, init_colors(cc).colors));
}

CellOrder canonical_cell_order(const CombinatorialComplex& cc, const Tensor& node_features) {
    if (node_features.rows() != cc.cell_count(0))
        throw ShapeMismatch("node feature rows do not match vertex count");
    std::array<std::vector<int>, 3> initial;
    for (int rank = 0; rank <= 2; ++rank)
        initial[static_cast<std::size_t>(rank)].assign(cc.cell_count(rank), 0);

    // Node ids index the sorted distinct feature rows: label-independent and
    // collision-free by exact comparison.
    const std::size_t width = node_features.cols();
    std::map<std::vector<double>, int> distinct;
    for (std::size_t v = 0; v < node_features.rows(); ++v) {
        std::vector<double> row(node_features.ptr() + v * width,
                                node_features.ptr() + (v + 1) * width);
        distinct.emplace(std::move(row), 0);
    }
    int next = 0;
    for (auto& [row, id] : distinct) id = next++;
    for (std::size_t v = 0; v < node_features.rows(); ++v) {
        std::vector<double> row(node_features.ptr() + v * width,
                                node_features.ptr() + (v + 1) * width);
        initial[0][v] = distinct.at(row);
    }
    return order_from_colors(cc, canonical_stable_colors(cc, initial));
}

namespace {

const std::vector<int>* scan_pos_of(const CellOrder* order, int rank) {
    return order ? &order->from_scan[static_cast<std::size_t>(rank)] : nullptr;
}

}  // namespace

Tensor build_sequence(const CombinatorialComplex& cc, int rank, const RankedFeatures& feats,
                      const CellOrder* order) {
    const std::size_t d = feats.width();
    const std::size_t t_len = cc.cell_count(rank);
    for (int k = 0; k <= 2; ++k)
        if (feats[k].rows() != cc.cell_count(k))
            throw ShapeMismatch("feature rows for rank " + std::to_string(k) +
                                " do not match cell count");
    auto zero_block = [&] { return Tensor::zeros({t_len, d}); };
    std::vector<Tensor> parts;
    switch (rank) {
        case 0:
            parts.push_back(feats[0]);
            parts.push_back(cc.cell_count(1) > 0
                                ? spmm(cc.incidence(1), feats[1], false, scan_pos_of(order, 1))
                                : zero_block());
            break;
        case 1:
            parts.push_back(feats[1]);
            parts.push_back(spmm(cc.incidence(1), feats[0], true, scan_pos_of(order, 0)));
            parts.push_back(cc.cell_count(2) > 0
                                ? spmm(cc.incidence(2), feats[2], false, scan_pos_of(order, 2))
                                : zero_block());
            break;
        case 2:
            parts.push_back(feats[2]);
            parts.push_back(spmm(cc.incidence(2), feats[1], true, scan_pos_of(order, 1)));
            break;
        default:
            throw IndexOutOfRange("rank " + std::to_string(rank) + " outside {0,1,2}");
    }
    return concat_cols(parts);
}

RankedFeatures intra_rank_update(const CombinatorialComplex& cc, const CellOrder& order,
                                 const RankedFeatures& feats, const CcLayerParams& params,
                                 const ForwardOpts& opts) {
    const std::size_t d = feats.width();
    RankedFeatures out;
    for (int rank = 0; rank <= 2; ++rank) {
        const auto& rp = params.rank[static_cast<std::size_t>(rank)];
        if (cc.cell_count(rank) == 0) {
            out[rank] = Tensor::zeros({0, d});
            continue;
        }
        const Tensor seq = build_sequence(cc, rank, feats, &order);
        const Tensor projected = add_rowwise(matmul(seq, rp.w_in), rp.b_in);
        const Tensor scan_in =
            gather_rows(projected, order.to_scan[static_cast<std::size_t>(rank)]);
        const Tensor scanned = mamba_block(scan_in, rp.ssm, opts.bidirectional);
        const Tensor restored =
            gather_rows(scanned, order.from_scan[static_cast<std::size_t>(rank)]);
        out[rank] = mlp(restored, rp.post);
    }
    return out;
}

RankedFeatures inter_rank_aggregate(const CombinatorialComplex& cc,
                                    const RankedFeatures& intra, const RankedFeatures& prev,
                                    const CcLayerParams& params, const CellOrder* order) {
    for (int rank = 0; rank <= 2; ++rank)
        if (intra[rank].rows() != cc.cell_count(rank) ||
            prev[rank].rows() != cc.cell_count(rank))
            throw ShapeMismatch("intra/prev rows do not match cell counts at rank " +
                                std::to_string(rank));
    const std::size_t d = intra.width();
    const bool edges = cc.cell_count(1) > 0;
    const bool faces = cc.cell_count(2) > 0;
    RankedFeatures out;
    for (int rank = 0; rank <= 2; ++rank) {
        if (cc.cell_count(rank) == 0) {
            out[rank] = Tensor::zeros({0, d});
            continue;
        }
        Tensor agg = intra[rank];
        if (rank == 0 && edges)
            agg = add(agg, spmm(cc.incidence(1), intra[1], false, scan_pos_of(order, 1)));
        if (rank == 1) {
            agg = add(agg, spmm(cc.incidence(1), intra[0], true, scan_pos_of(order, 0)));
            if (faces)
                agg = add(agg, spmm(cc.incidence(2), intra[2], false, scan_pos_of(order, 2)));
        }
        if (rank == 2)
            agg = add(agg, spmm(cc.incidence(2), intra[1], true, scan_pos_of(order, 1)));
        const auto& rp = params.rank[static_cast<std::size_t>(rank)];
        const Tensor message = mlp(agg, rp.aggregate);
        out[rank] = mlp(concat_cols({prev[rank], message}), rp.update);
    }
    return out;
}

RankedFeatures layer_forward(const CombinatorialComplex& cc, const CellOrder& order,
                             const RankedFeatures& feats, const CcLayerParams& params,
                             const ForwardOpts& opts) {
    if (opts.train && opts.dropout_rate > 0.0 && opts.rng == nullptr)
        throw InvalidParameter("training with dropout requires an rng");
    const RankedFeatures intra = intra_rank_update(cc, order, feats, params, opts);
    const RankedFeatures merged = inter_rank_aggregate(cc, intra, feats, params, &order);
    Rng fallback(0);
    Rng& rng = opts.rng ? *opts.rng : fallback;
    RankedFeatures out;
    for (int rank = 0; rank <= 2; ++rank) {
        if (cc.cell_count(rank) == 0) {
            out[rank] = merged[rank];
            continue;
        }
        const auto& rp = params.rank[static_cast<std::size_t>(rank)];
        const Tensor dropped = dropout(intra[rank], opts.dropout_rate, opts.train, rng);
        const Tensor normed = ln_affine(add(merged[rank], dropped), rp.ln1);
        out[rank] = ln_affine(add(normed, mlp(normed, rp.ffn)), rp.ln2);
    }
    return out;
}

Tensor readout_graph(const CombinatorialComplex& cc, const RankedFeatures& feats,
                     const CellOrder* order) {
    if (cc.total_cells() == 0) throw EmptyComplex("graph readout of an empty complex");
    const std::size_t d = feats.width();
    std::vector<Tensor> parts;
    for (int rank = 0; rank <= 2; ++rank) {
        if (cc.cell_count(rank) == 0) {
            parts.push_back(Tensor::zeros({1, d}));
            continue;
        }
        const Tensor rows =
            order ? gather_rows(feats[rank], order->to_scan[static_cast<std::size_t>(rank)])
                  : feats[rank];
        parts.push_back(sum_rows(rows));
    }
    return concat_cols(parts);
}

Tensor readout_nodes(const CombinatorialComplex& cc, const RankedFeatures& feats) {
    if (cc.cell_count(0) == 0) throw EmptyComplex("node readout without rank-0 cells");
    return feats[0];
}

}  // namespace ccm
