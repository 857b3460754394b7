#include "ccm/model.hpp"

namespace ccm {

void ModelConfig::validate() const {
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (state_dim < 1) throw ConfigError("state_dim must be >= 1");
    if (expand < 1) throw ConfigError("expand must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (task != "graph" && task != "node") throw ConfigError("task must be graph or node");
    if (readout != "graph" && readout != "node")
        throw ConfigError("readout must be graph or node");
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (max_cycle_len < 3) throw ConfigError("max_cycle_len must be >= 3");
    if (lifting != "graph" && lifting != "hypergraph" && lifting != "simplicial" &&
        lifting != "cellular")
        throw ConfigError("unknown lifting mode: " + lifting);
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ModelParams p;
    const auto d = static_cast<std::size_t>(cfg.hidden);
    p.w_embed = init_params({static_cast<std::size_t>(cfg.input_dim), d},
                            Init::UniformGlorot, rng.next_u64());
    p.b_embed = Tensor::zeros({d});
    for (int l = 0; l < cfg.layers; ++l)
        p.layers.push_back(CcLayerParams::init(d, cfg.inner_width(),
                                               static_cast<std::size_t>(cfg.state_dim), rng));
    const std::size_t read_width = cfg.readout == "graph" ? 3 * d : d;
    p.w_cls = init_params({read_width, static_cast<std::size_t>(cfg.num_classes)},
                          Init::UniformGlorot, rng.next_u64());
    p.b_cls = Tensor::zeros({static_cast<std::size_t>(cfg.num_classes)});
    return p;
}

namespace {

template <typename Params, typename Fn>
void visit_impl(Params& p, const Fn& fn) {
    fn("embed.w", p.w_embed);
    fn("embed.b", p.b_embed);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const std::string base = "layer" + std::to_string(l) + ".";
        for (int rank = 0; rank <= 2; ++rank) {
            auto& rp = p.layers[l].rank[static_cast<std::size_t>(rank)];
            const std::string rb = base + "rank" + std::to_string(rank) + ".";
            fn(rb + "in.w", rp.w_in);
            fn(rb + "in.b", rp.b_in);
            fn(rb + "ssm.w_state", rp.ssm.w_state);
            fn(rb + "ssm.b_state", rp.ssm.b_state);
            fn(rb + "ssm.w_input", rp.ssm.w_input);
            fn(rb + "ssm.w_readout", rp.ssm.w_readout);
            fn(rb + "ssm.w_step", rp.ssm.w_step);
            fn(rb + "ssm.b_step", rp.ssm.b_step);
            fn(rb + "ssm.w_gate", rp.ssm.w_gate);
            fn(rb + "ssm.w_out", rp.ssm.w_out);
            auto visit_mlp = [&](const std::string& name, auto& m) {
                fn(rb + name + ".w1", m.w1);
                fn(rb + name + ".b1", m.b1);
                fn(rb + name + ".w2", m.w2);
                fn(rb + name + ".b2", m.b2);
            };
            visit_mlp("post", rp.post);
            visit_mlp("aggregate", rp.aggregate);
            visit_mlp("update", rp.update);
            visit_mlp("ffn", rp.ffn);
            fn(rb + "ln1.gain", rp.ln1.gain);
            fn(rb + "ln1.bias", rp.ln1.bias);
            fn(rb + "ln2.gain", rp.ln2.gain);
            fn(rb + "ln2.bias", rp.ln2.bias);
        }
    }
    fn("cls.w", p.w_cls);
    fn("cls.b", p.b_cls);
}

}  // namespace

void ModelParams::visit(const std::function<void(const std::string&, Tensor&)>& fn) {
    visit_impl(*this, fn);
}

void ModelParams::visit(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    visit_impl(*this, fn);
}

ModelParams ModelParams::attach(Tape& tape) const {
    ModelParams bound = *this;
    bound.visit([&tape](const std::string&, Tensor& t) { t = tape.watch(t); });
    return bound;
}

ModelParams ModelParams::clone() const {
    ModelParams copy = *this;
    copy.visit([](const std::string&, Tensor& t) {
        t.data = std::make_shared<std::vector<double>>(*t.data);
        t.tape = nullptr;
        t.node = -1;
    });
    return copy;
}

std::size_t ModelParams::scalar_count() const {
    std::size_t n = 0;
    visit([&n](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

RankedFeatures init_features(const CombinatorialComplex& cc, const Tensor& h0,
                             const CellOrder* order) {
    if (h0.rows() != cc.cell_count(0))
        throw ShapeMismatch("init_features: h0 rows " + std::to_string(h0.rows()) +
                            " do not match vertex cells " + std::to_string(cc.cell_count(0)));
    const std::size_t d = h0.cols();
    RankedFeatures feats;
    feats[0] = h0;

    auto mean_of_lower = [order](const IncidenceMatrix& m, const Tensor& lower, int low_rank) {
        const std::vector<int>* pos =
            order ? &order->from_scan[static_cast<std::size_t>(low_rank)] : nullptr;
        Tensor summed = spmm(m, lower, true, pos);
        std::vector<double> inv(m.cols, 0.0);
        for (const auto& [r, c] : m.entries) inv[static_cast<std::size_t>(c)] += 1.0;
        for (double& v : inv) v = v > 0.0 ? 1.0 / v : 0.0;
        return row_scale(summed, inv);
    };

    feats[1] = cc.cell_count(1) > 0 ? mean_of_lower(cc.incidence(1), feats[0], 0)
                                    : Tensor::zeros({0, d});
    feats[2] = cc.cell_count(2) > 0 ? mean_of_lower(cc.incidence(2), feats[1], 1)
                                    : Tensor::zeros({0, d});
    return feats;
}

RankedFeatures Model::run_layers(const CombinatorialComplex& cc, const Tensor& node_features,
                                 const CellOrder& order, const ModelParams& params,
                                 const ForwardOpts& opts) const {
    const Tensor h0 = add_rowwise(matmul(node_features, params.w_embed), params.b_embed);
    RankedFeatures feats = init_features(cc, h0, &order);
    ForwardOpts layer_opts = opts;
    layer_opts.dropout_rate = cfg_.dropout;
    layer_opts.bidirectional = cfg_.bidirectional;
    for (const CcLayerParams& layer : params.layers)
        feats = layer_forward(cc, order, feats, layer, layer_opts);
    return feats;
}

Tensor Model::graph_embedding(const CombinatorialComplex& cc, const Tensor& node_features,
                              const CellOrder& order, const ModelParams& params,
                              const ForwardOpts& opts) const {
    return readout_graph(cc, run_layers(cc, node_features, order, params, opts), &order);
}

Tensor Model::forward(const CombinatorialComplex& cc, const Tensor& node_features,
                      const CellOrder& order, const ModelParams& params,
                      const ForwardOpts& opts) const {
    const RankedFeatures feats = run_layers(cc, node_features, order, params, opts);
    const Tensor read = cfg_.readout == "graph" ? readout_graph(cc, feats, &order)
                                                : readout_nodes(cc, feats);
    return add_rowwise(matmul(read, params.w_cls), params.b_cls);
}

}  // namespace ccm
