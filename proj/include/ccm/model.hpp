#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ccm/layer.hpp"

namespace ccm {

struct ModelConfig {
    int hidden = 128;
    int layers = 2;
    int state_dim = 16;
    int expand = 2;
    double dropout = 0.01;
    double lr = 0.1;
    bool bidirectional = true;
    std::string lifting = "cellular";
    int max_cycle_len = 6;
    std::string task = "graph";     // "graph" | "node"
    std::string readout = "graph";  // "graph" | "node"
    int epochs = 200;
    int batch_size = 128;
    std::uint64_t seed = 0;
    int input_dim = 1;
    int num_classes = 2;

    std::size_t inner_width() const {
        return static_cast<std::size_t>(hidden) * static_cast<std::size_t>(expand);
    }
    void validate() const;
};

// Every learnable tensor of the model. visit() enumerates them in a fixed
// order, which the optimizer, the checkpoint writer and the gradient checks
// all share.
struct ModelParams {
    Tensor w_embed, b_embed;
    std::vector<CcLayerParams> layers;
    Tensor w_cls, b_cls;

    static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

    void visit(const std::function<void(const std::string&, Tensor&)>& fn);
    void visit(const std::function<void(const std::string&, const Tensor&)>& fn) const;

    // Marks every tensor as a differentiable leaf of `tape`; the returned
    // copy shares the underlying buffers.
    ModelParams attach(Tape& tape) const;
    // Deep copy (fresh buffers).
    ModelParams clone() const;
    std::size_t scalar_count() const;
};

// Initial edge and face features: each rank-1 cell averages the features of
// its vertices, each rank-2 cell averages the features of its bounding
// edges. h0 is used as given (already projected by the caller). An order
// pins the floating-point summation order to scan positions.
RankedFeatures init_features(const CombinatorialComplex& cc, const Tensor& h0,
                             const CellOrder* order = nullptr);

class Model {
public:
    Model(ModelConfig cfg, ModelParams params)
        : cfg_(std::move(cfg)), params_(std::move(params)) {}
    static Model make(const ModelConfig& cfg) {
        return Model(cfg, ModelParams::init(cfg, cfg.seed));
    }

    const ModelConfig& config() const { return cfg_; }
    ModelParams& params() { return params_; }
    const ModelParams& params() const { return params_; }

    // Logits: per node (|V0| x C) for node-level readout, 1 x C for
    // graph-level. `params` lets callers pass a tape-attached copy.
    Tensor forward(const CombinatorialComplex& cc, const Tensor& node_features,
                   const CellOrder& order, const ModelParams& params,
                   const ForwardOpts& opts) const;
    Tensor forward(const CombinatorialComplex& cc, const Tensor& node_features,
                   const CellOrder& order, const ForwardOpts& opts) const {
        return forward(cc, node_features, order, params_, opts);
    }
    // Pooled pre-classifier embedding (graph readout), independent of the
    // classifier head.
    Tensor graph_embedding(const CombinatorialComplex& cc, const Tensor& node_features,
                           const CellOrder& order, const ModelParams& params,
                           const ForwardOpts& opts) const;

private:
    RankedFeatures run_layers(const CombinatorialComplex& cc, const Tensor& node_features,
                              const CellOrder& order, const ModelParams& params,
                              const ForwardOpts& opts) const;
    ModelConfig cfg_;
    ModelParams params_;
};

}  // namespace ccm
