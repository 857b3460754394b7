#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccm/model.hpp"

namespace ccm {

// Mean negative log-softmax of the true class, stabilized by row-max
// subtraction.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Adam with bias correction. Deterministic; state is keyed by parameter
// name.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // `bound` must be the tape-attached copy whose gradients live on `tape`.
    void step(ModelParams& params, const ModelParams& bound, const Tape& tape);
    int steps_taken() const { return step_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int step_ = 0;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

struct Sample {
    CombinatorialComplex cc;
    Tensor features;  // |V0| x input_dim
    CellOrder order;  // cached canonical scan order
};

struct SplitMasks {
    std::vector<int> train, val, test;
};

// Graph-level: one label per sample, masks index samples. Node-level: one
// sample with per-node labels, masks index nodes.
struct LabeledDataset {
    std::string task;  // "graph" | "node"
    std::vector<Sample> samples;
    std::vector<int> labels;  // graph task: per sample; node task: per node of samples[0]
    SplitMasks splits;
    int input_dim = 1;
    int num_classes = 2;

    void validate() const;
};

// Directory layout: graphs/*.json (graph or complex files, lexicographic
// file order defines complex ids), optional features.csv
// (complex_id,node_id,f1..fk), labels.csv (graph task: complex_id,label;
// node task: complex_id,node_id,label), optional splits.json with
// train/val/test index arrays (a seeded stratified 60/20/20 split is
// generated when absent).
LabeledDataset load_dataset(const std::string& dir, const ModelConfig& cfg);

SplitMasks stratified_split(const std::vector<int>& labels, std::uint64_t seed,
                            double train_frac = 0.6, double val_frac = 0.2);

struct TrainResult {
    std::vector<double> train_loss;
    std::vector<double> train_acc;
    std::vector<double> val_acc;
    int best_epoch = 0;
    double best_val_acc = 0.0;
    double test_acc = 0.0;
};

// Runs the configured number of epochs, tracking the best validation
// checkpoint (ties keep the earlier epoch; with an empty validation mask,
// training accuracy is used instead). `model.params()` holds the best
// checkpoint on return.
TrainResult train(Model& model, const LabeledDataset& dataset);

// Argmax accuracy over a mask; ties resolve to the lowest class id.
double evaluate(const Model& model, const LabeledDataset& dataset,
                const std::vector<int>& mask);

}  // namespace ccm
