#pragma once

#include <array>

#include "ccm/ccwl.hpp"
#include "ccm/complex.hpp"
#include "ccm/rng.hpp"
#include "ccm/ssm.hpp"
#include "ccm/tensor.hpp"

namespace ccm {

// Feature matrices for nodes, edges and faces. Empty ranks carry 0 x d
// tensors with the shared feature width.
struct RankedFeatures {
    std::array<Tensor, 3> h;

    Tensor& operator[](int rank) { return h[static_cast<std::size_t>(rank)]; }
    const Tensor& operator[](int rank) const { return h[static_cast<std::size_t>(rank)]; }
    std::size_t width() const;
};

// Sparse incidence product as a differentiable op: B x (or B^T x) with the
// matrix held constant. When `src_scan_pos` is given, each output row
// accumulates its source rows in ascending scan position instead of storage
// order; with a canonical scan order this makes the floating-point
// summation order label-independent, which the relabeling-invariance
// guarantees rely on.
Tensor spmm(const IncidenceMatrix& m, const Tensor& x, bool transposed,
            const std::vector<int>* src_scan_pos = nullptr);

// Two-layer relu MLP.
struct MlpParams {
    Tensor w1, b1, w2, b2;
    static MlpParams init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);
};
Tensor mlp(const Tensor& x, const MlpParams& p);

struct LayerNormParams {
    Tensor gain, bias;
    static LayerNormParams init(std::size_t width);
};

// Parameters of one rank's processing inside a layer.
struct RankLayerParams {
    Tensor w_in, b_in;   // (m_k * d) -> inner width, before the scan
    SsmParams ssm;       // at inner width
    MlpParams post;      // inner width -> d, after the scan
    MlpParams aggregate; // d -> d, applied to the cross-rank sum
    MlpParams update;    // 2d -> d, on [previous || aggregated]
    MlpParams ffn;       // d -> d with hidden 2d
    LayerNormParams ln1, ln2;

    static RankLayerParams init(int rank, std::size_t d, std::size_t inner,
                                std::size_t state_dim, Rng& rng);
};

struct CcLayerParams {
    std::array<RankLayerParams, 3> rank;
    static CcLayerParams init(std::size_t d, std::size_t inner, std::size_t state_dim,
                              Rng& rng);
};

// Scan order per rank: to_scan[k][p] is the storage index of the cell at
// scan position p; from_scan[k] is the inverse permutation. Derived from
// canonical stable refinement colors so the order is invariant under vertex
// relabeling whenever the stable partition separates the cells; remaining
// ties fall back to the lexicographic vertex-set order.
struct CellOrder {
    std::array<std::vector<int>, 3> to_scan;
    std::array<std::vector<int>, 3> from_scan;
};

CellOrder canonical_cell_order(const CombinatorialComplex& cc);
// Feature-aware variant: initial node colors index the sorted distinct
// feature rows, so cells with different features never tie.
CellOrder canonical_cell_order(const CombinatorialComplex& cc, const Tensor& node_features);

struct ForwardOpts {
    Tape* tape = nullptr;
    bool train = false;
    double dropout_rate = 0.0;
    bool bidirectional = true;
    Rng* rng = nullptr;  // required when train && dropout_rate > 0
};

// Rows are [h0 || B1 h1] for rank 0, [h1 || B1^T h0 || B2 h2] for rank 1,
// [h2 || B2^T h1] for rank 2, in storage (canonical) cell order. A missing
// adjacent rank contributes a zero block.
Tensor build_sequence(const CombinatorialComplex& cc, int rank, const RankedFeatures& feats,
                      const CellOrder* order = nullptr);

// MLP_k(Mamba_k(W_k . sequence_k)) per rank; zero-cell ranks are skipped.
RankedFeatures intra_rank_update(const CombinatorialComplex& cc, const CellOrder& order,
                                 const RankedFeatures& feats, const CcLayerParams& params,
                                 const ForwardOpts& opts);

// Sums each cell's intra representation with its adjacent-rank neighbors',
// then applies the per-rank MLP and the update map on [prev || aggregated].
RankedFeatures inter_rank_aggregate(const CombinatorialComplex& cc,
                                    const RankedFeatures& intra, const RankedFeatures& prev,
                                    const CcLayerParams& params,
                                    const CellOrder* order = nullptr);

// Full per-rank pipeline: intra update, cross-rank aggregation, then
// residual / dropout / layer norm and the feed-forward block.
RankedFeatures layer_forward(const CombinatorialComplex& cc, const CellOrder& order,
                             const RankedFeatures& feats, const CcLayerParams& params,
                             const ForwardOpts& opts);

// Sum pooling: [sum h0 || sum h1 || sum h2], zero blocks for empty ranks.
// With an order, rows are summed in scan position order (label-independent
// association).
Tensor readout_graph(const CombinatorialComplex& cc, const RankedFeatures& feats,
                     const CellOrder* order = nullptr);
// Node-level readout: the rank-0 feature rows.
Tensor readout_nodes(const CombinatorialComplex& cc, const RankedFeatures& feats);

}  // namespace ccm
