#pragma once

#include <utility>

#include "ccm/rng.hpp"
#include "ccm/tensor.hpp"

namespace ccm {

// Learnable maps producing the input-dependent coefficients of one
// selective state-space block over feature width d and state width N.
struct SsmParams {
    Tensor w_state, b_state;  // d -> N; transition = -exp(h w + b)
    Tensor w_input;           // d -> N; injection
    Tensor w_readout;         // d -> N; readout
    Tensor w_step, b_step;    // d -> 1; step = softplus(h w + b)
    Tensor w_gate;            // d -> d
    Tensor w_out;             // d -> d

    static SsmParams init(std::size_t d, std::size_t n, Rng& rng);
    std::size_t feature_dim() const { return w_state.rows(); }
    std::size_t state_dim() const { return w_state.cols(); }
};

// Per-step coefficients derived from a T x d feature sequence.
struct SelectiveParams {
    Tensor transition;  // T x N, strictly negative
    Tensor injection;   // T x N
    Tensor readout;     // T x N
    Tensor step;        // T x 1, strictly positive
};

SelectiveParams selective_params(const Tensor& h_seq, const SsmParams& p);

// Exact zero-order-hold discretization of one diagonal state channel:
//   decay = exp(dt a),  drive = (dt a)^-1 (exp(dt a) - 1) dt b
// with a series fallback for |dt a| < 1e-8 so drive -> dt b as a -> 0.
std::pair<double, double> discretize(double a, double b, double dt);

struct Discretized {
    Tensor decay;  // T x N, in (0,1) whenever transition < 0 and step > 0
    Tensor drive;  // T x N
};

Discretized discretize(const SelectiveParams& p);

// Core linear recurrence, one diagonal state per (channel, state) pair:
//   h_t = decay_t h_{t-1} + drive_t x_tc,  y_tc = sum_n readout_tn h_tn
Tensor scan_recurrence(const Tensor& decay, const Tensor& drive, const Tensor& readout,
                       const Tensor& x);

// Full selective scan: discretization followed by the recurrence.
Tensor selective_scan(const Tensor& x_seq, const SelectiveParams& p);

// Gated block: out = (sigmoid(h w_gate) .* scan(h)) w_out. Bidirectional
// mode averages the forward scan with a reversed scan of the reversed
// sequence before gating.
Tensor mamba_block(const Tensor& h_seq, const SsmParams& p, bool bidirectional = true);

}  // namespace ccm
