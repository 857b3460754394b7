#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ccm/error.hpp"
#include "ccm/rng.hpp"

namespace ccm {

class Tape;

// Dense row-major tensor of 64-bit floats. Copies share the underlying
// buffer; all operations produce fresh buffers, so shared data is never
// mutated through the op layer. A tensor optionally carries a handle into
// a gradient tape; ops propagate the handle so reverse-mode accumulation
// can replay them.
struct Tensor {
    std::vector<std::size_t> shape;
    std::shared_ptr<std::vector<double>> data;
    Tape* tape = nullptr;
    int node = -1;

    Tensor() : data(std::make_shared<std::vector<double>>()) {}

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);
    static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> values);

    std::size_t size() const;
    std::size_t ndim() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool is_scalar() const { return shape.empty(); }
    bool differentiable() const { return tape != nullptr && node >= 0; }

    double* ptr() { return data->data(); }
    const double* ptr() const { return data->data(); }
    double at(std::size_t i) const { return (*data)[i]; }
    double at(std::size_t r, std::size_t c) const { return (*data)[r * cols() + c]; }
    double value() const;  // scalar tensors only
};

// Records primitive operations for reverse-mode differentiation. Nodes are
// appended in execution order, which is already a topological order, so the
// backward sweep is a single reverse pass. A tape is confined to one
// execution context and is consumed by backward().
class Tape {
public:
    // g_out: gradient of the node's output. g_parents: accumulation buffers
    // for each parent, null when the parent does not require gradients.
    using BackFn = std::function<void(const double* g_out, const std::vector<double*>& g_parents)>;

    int record(std::size_t size, std::vector<int> parents, BackFn back);

    // Marks `t` as a differentiable leaf on this tape and returns the
    // tape-linked view (shares the buffer).
    Tensor watch(const Tensor& t);

    // Reverse accumulation from a scalar loss. May be invoked once.
    void backward(const Tensor& loss);

    bool has_grad(const Tensor& t) const;
    Tensor grad(const Tensor& t) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        std::size_t size;
        std::vector<int> parents;
        BackFn back;
    };
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    bool consumed_ = false;
};

// --- primitives -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// mat (r x c) op vec ({c} or {1 x c}) broadcast across rows
Tensor add_rowwise(const Tensor& mat, const Tensor& vec);
Tensor mul_rowwise(const Tensor& mat, const Tensor& vec);
Tensor scale(const Tensor& t, double s);
// constant per-row scaling (not differentiable w.r.t. the factors)
Tensor row_scale(const Tensor& t, const std::vector<double>& factors);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& t, const std::vector<int>& indices);
Tensor reverse_rows(const Tensor& t);
Tensor sum_all(const Tensor& t);
Tensor mean_all(const Tensor& t);
Tensor sum_rows(const Tensor& t);  // column sums -> 1 x c

Tensor exp(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor softplus(const Tensor& t);
Tensor relu(const Tensor& t);
Tensor neg(const Tensor& t);

Tensor layer_norm(const Tensor& t, double eps = 1e-5);
Tensor dropout(const Tensor& t, double rate, bool train, Rng& rng);

// --- initialization -------------------------------------------------------

enum class Init { Zeros, UniformGlorot };

// Deterministic given (shape, scheme, seed). Glorot bounds are
// +-sqrt(6 / (fan_in + fan_out)).
Tensor init_params(const std::vector<std::size_t>& shape, Init scheme, std::uint64_t seed);

// --- checkpoint io ---------------------------------------------------------

// One file: a single-line JSON manifest [{name, shape, offset}, ...]
// followed by the flat little-endian 64-bit payload. Offsets are in bytes
// from the start of the payload section.
void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, Tensor>>& tensors);
std::map<std::string, Tensor> load_tensors(const std::string& path);

}  // namespace ccm
