#include "ccm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ccm/kernels.hpp"

namespace ccm {

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape)
        throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape) +
                            " vs " + shape_str(b.shape));
}

Tape* tape_of(const Tensor& a) { return a.differentiable() ? a.tape : nullptr; }

Tape* tape_of(const Tensor& a, const Tensor& b) {
    Tape* ta = tape_of(a);
    Tape* tb = tape_of(b);
    if (ta && tb && ta != tb)
        throw ShapeMismatch("operands recorded on different tapes");
    return ta ? ta : tb;
}

Tensor uninit(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::make_shared<std::vector<double>>(shape_size(t.shape));
    return t;
}

}  // namespace

// --- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return uninit(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t = uninit(std::move(shape));
    std::fill(t.data->begin(), t.data->end(), value);
    return t;
}

Tensor Tensor::scalar(double value) {
    Tensor t;
    t.shape = {};
    t.data = std::make_shared<std::vector<double>>(1, value);
    return t;
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> values) {
    if (shape_size(shape) != values.size())
        throw ShapeMismatch("from_values: " + shape_str(shape) + " needs " +
                            std::to_string(shape_size(shape)) + " values, got " +
                            std::to_string(values.size()));
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::make_shared<std::vector<double>>(std::move(values));
    return t;
}

std::size_t Tensor::size() const { return shape_size(shape); }

std::size_t Tensor::rows() const {
    if (ndim() != 2) throw ShapeMismatch("rows(): tensor is not 2-d " + shape_str(shape));
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (ndim() != 2) throw ShapeMismatch("cols(): tensor is not 2-d " + shape_str(shape));
    return shape[1];
}

double Tensor::value() const {
    if (!is_scalar()) throw ShapeMismatch("value(): tensor is not scalar " + shape_str(shape));
    return (*data)[0];
}

// --- Tape -------------------------------------------------------------------

int Tape::record(std::size_t size, std::vector<int> parents, BackFn back) {
    if (consumed_)
        throw Error("TapeConsumed", "tape already consumed by backward()",
                    Error::Category::Internal);
    nodes_.push_back(Node{size, std::move(parents), std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::watch(const Tensor& t) {
    Tensor out = t;
    out.tape = this;
    out.node = record(t.size(), {}, nullptr);
    return out;
}

void Tape::backward(const Tensor& loss) {
    if (consumed_)
        throw Error("TapeConsumed", "tape already consumed by backward()",
                    Error::Category::Internal);
    if (!loss.is_scalar()) throw NonScalarLoss("loss has shape, expected scalar");
    if (loss.tape != this || loss.node < 0)
        throw NonScalarLoss("loss is not attached to this tape");
    consumed_ = true;

    grads_.resize(nodes_.size());
    std::vector<char> needed(nodes_.size(), 0);
    needed[static_cast<std::size_t>(loss.node)] = 1;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (!needed[i]) continue;
        for (int p : nodes_[i].parents)
            if (p >= 0) needed[static_cast<std::size_t>(p)] = 1;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (needed[i]) grads_[i].assign(nodes_[i].size, 0.0);

    grads_[static_cast<std::size_t>(loss.node)][0] = 1.0;

    std::vector<double*> parent_grads;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (!needed[i] || !nodes_[i].back) continue;
        parent_grads.clear();
        for (int p : nodes_[i].parents)
            parent_grads.push_back(p >= 0 && !grads_[static_cast<std::size_t>(p)].empty()
                                       ? grads_[static_cast<std::size_t>(p)].data()
                                       : nullptr);
        nodes_[i].back(grads_[i].data(), parent_grads);
    }
}

bool Tape::has_grad(const Tensor& t) const {
    return t.tape == this && t.node >= 0 &&
           static_cast<std::size_t>(t.node) < grads_.size() &&
           !grads_[static_cast<std::size_t>(t.node)].empty();
}

Tensor Tape::grad(const Tensor& t) const {
    if (t.tape != this || t.node < 0)
        throw Error("GradUnavailable", "tensor not recorded on this tape",
                    Error::Category::Internal);
    Tensor g = Tensor::zeros(t.shape);
    if (has_grad(t)) {
        const auto& buf = grads_[static_cast<std::size_t>(t.node)];
        std::copy(buf.begin(), buf.end(), g.data->begin());
    }
    return g;
}

// --- op helpers --------------------------------------------------------------

namespace {

Tensor make_result(std::vector<std::size_t> shape, Tape* tape,
                   std::vector<int> parents, Tape::BackFn back) {
    Tensor out = uninit(std::move(shape));
    if (tape) {
        out.tape = tape;
        out.node = tape->record(out.size(), std::move(parents), std::move(back));
    }
    return out;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    kernels::add_ops(2 * n);
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

// --- arithmetic ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
        throw ShapeMismatch("matmul: " + shape_str(a.shape) + " x " + shape_str(b.shape));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tape* tape = tape_of(a, b);
    auto ad = a.data, bd = b.data;
    Tensor out = make_result(
        {m, n}, tape, {a.node, b.node},
        [m, k, n, ad, bd](const double* g, const std::vector<double*>& pg) {
            if (pg[0]) kernels::gemm_nt(m, n, k, g, bd->data(), pg[0], true);
            if (pg[1]) kernels::gemm_tn(k, m, n, ad->data(), g, pg[1], true);
        });
    kernels::gemm_nn(m, k, n, a.ptr(), b.ptr(), out.ptr(), false);
    return out;
}

namespace {

Tensor binary_op(kernels::Binary op, const Tensor& a, const Tensor& b, const char* name) {
    require_same_shape(a, b, name);
    Tape* tape = tape_of(a, b);
    const std::size_t n = a.size();
    auto ad = a.data, bd = b.data;
    Tensor out = make_result(
        a.shape, tape, {a.node, b.node},
        [op, n, ad, bd](const double* g, const std::vector<double*>& pg) {
            switch (op) {
                case kernels::Binary::Add:
                    if (pg[0]) axpy(n, 1.0, g, pg[0]);
                    if (pg[1]) axpy(n, 1.0, g, pg[1]);
                    break;
                case kernels::Binary::Sub:
                    if (pg[0]) axpy(n, 1.0, g, pg[0]);
                    if (pg[1]) axpy(n, -1.0, g, pg[1]);
                    break;
                case kernels::Binary::Mul:
                    kernels::add_ops(4 * n);
                    for (std::size_t i = 0; i < n; ++i) {
                        if (pg[0]) pg[0][i] += g[i] * (*bd)[i];
                        if (pg[1]) pg[1][i] += g[i] * (*ad)[i];
                    }
                    break;
            }
        });
    kernels::map_binary(op, n, a.ptr(), b.ptr(), out.ptr());
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(kernels::Binary::Add, a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(kernels::Binary::Sub, a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(kernels::Binary::Mul, a, b, "mul"); }

namespace {

void require_row_vec(const Tensor& mat, const Tensor& vec, const char* op) {
    const std::size_t c = mat.cols();
    const bool ok = (vec.ndim() == 1 && vec.shape[0] == c) ||
                    (vec.ndim() == 2 && vec.rows() == 1 && vec.cols() == c);
    if (!ok)
        throw ShapeMismatch(std::string(op) + ": " + shape_str(mat.shape) + " with " +
                            shape_str(vec.shape));
}

}  // namespace

Tensor add_rowwise(const Tensor& mat, const Tensor& vec) {
    require_row_vec(mat, vec, "add_rowwise");
    const std::size_t r = mat.rows(), c = mat.cols();
    Tape* tape = tape_of(mat, vec);
    Tensor out = make_result(
        mat.shape, tape, {mat.node, vec.node},
        [r, c](const double* g, const std::vector<double*>& pg) {
            if (pg[0]) axpy(r * c, 1.0, g, pg[0]);
            if (pg[1]) {
                kernels::add_ops(r * c);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) pg[1][j] += g[i * c + j];
            }
        });
    kernels::add_ops(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            (*out.data)[i * c + j] = mat.at(i * c + j) + (*vec.data)[j];
    return out;
}

Tensor mul_rowwise(const Tensor& mat, const Tensor& vec) {
    require_row_vec(mat, vec, "mul_rowwise");
    const std::size_t r = mat.rows(), c = mat.cols();
    Tape* tape = tape_of(mat, vec);
    auto md = mat.data, vd = vec.data;
    Tensor out = make_result(
        mat.shape, tape, {mat.node, vec.node},
        [r, c, md, vd](const double* g, const std::vector<double*>& pg) {
            kernels::add_ops(4 * r * c);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    if (pg[0]) pg[0][i * c + j] += g[i * c + j] * (*vd)[j];
                    if (pg[1]) pg[1][j] += g[i * c + j] * (*md)[i * c + j];
                }
        });
    kernels::add_ops(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            (*out.data)[i * c + j] = mat.at(i * c + j) * (*vec.data)[j];
    return out;
}

Tensor scale(const Tensor& t, double s) {
    const std::size_t n = t.size();
    Tensor out = make_result(
        t.shape, tape_of(t), {t.node},
        [n, s](const double* g, const std::vector<double*>& pg) {
            if (pg[0]) axpy(n, s, g, pg[0]);
        });
    kernels::add_ops(n);
    for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = s * t.at(i);
    return out;
}

Tensor row_scale(const Tensor& t, const std::vector<double>& factors) {
    const std::size_t r = t.rows(), c = t.cols();
    if (factors.size() != r)
        throw ShapeMismatch("row_scale: " + std::to_string(factors.size()) + " factors for " +
                            std::to_string(r) + " rows");
    auto f = std::make_shared<std::vector<double>>(factors);
    Tensor out = make_result(
        t.shape, tape_of(t), {t.node},
        [r, c, f](const double* g, const std::vector<double*>& pg) {
            if (!pg[0]) return;
            kernels::add_ops(2 * r * c);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) pg[0][i * c + j] += (*f)[i] * g[i * c + j];
        });
    kernels::add_ops(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*out.data)[i * c + j] = factors[i] * t.at(i * c + j);
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no operands");
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    Tape* tape = nullptr;
    std::vector<int> parent_nodes;
    std::vector<std::size_t> widths;
    for (const Tensor& p : parts) {
        if (p.rows() != r) throw ShapeMismatch("concat_cols: row counts differ");
        widths.push_back(p.cols());
        total += p.cols();
        parent_nodes.push_back(p.node);
        Tape* pt = tape_of(p);
        if (pt) {
            if (tape && tape != pt) throw ShapeMismatch("concat_cols: mixed tapes");
            tape = pt;
        }
    }
    Tensor out = make_result(
        {r, total}, tape, parent_nodes,
        [r, total, widths](const double* g, const std::vector<double*>& pg) {
            kernels::add_ops(r * total);
            std::size_t off = 0;
            for (std::size_t p = 0; p < widths.size(); ++p) {
                if (pg[p])
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < widths[p]; ++j)
                            pg[p][i * widths[p] + j] += g[i * total + off + j];
                off += widths[p];
            }
        });
    std::size_t off = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const std::size_t w = widths[p];
        for (std::size_t i = 0; i < r; ++i)
            std::memcpy(out.ptr() + i * total + off, parts[p].ptr() + i * w, w * sizeof(double));
        off += w;
    }
    kernels::add_ops(r * total);
    return out;
}

Tensor gather_rows(const Tensor& t, const std::vector<int>& indices) {
    const std::size_t r = t.rows(), c = t.cols();
    for (int i : indices)
        if (i < 0 || static_cast<std::size_t>(i) >= r)
            throw IndexOutOfRange("gather_rows: index " + std::to_string(i) + " of " +
                                  std::to_string(r) + " rows");
    auto idx = std::make_shared<std::vector<int>>(indices);
    const std::size_t m = indices.size();
    Tensor out = make_result(
        {m, c}, tape_of(t), {t.node},
        [m, c, idx](const double* g, const std::vector<double*>& pg) {
            if (!pg[0]) return;
            kernels::add_ops(m * c);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    pg[0][static_cast<std::size_t>((*idx)[i]) * c + j] += g[i * c + j];
        });
    for (std::size_t i = 0; i < m; ++i)
        std::memcpy(out.ptr() + i * c, t.ptr() + static_cast<std::size_t>(indices[i]) * c,
                    c * sizeof(double));
    kernels::add_ops(m * c);
    return out;
}

Tensor reverse_rows(const Tensor& t) {
    std::vector<int> idx(t.rows());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = static_cast<int>(t.rows() - 1 - i);
    return gather_rows(t, idx);
}

Tensor sum_all(const Tensor& t) {
    const std::size_t n = t.size();
    Tensor out = make_result(
        {}, tape_of(t), {t.node},
        [n](const double* g, const std::vector<double*>& pg) {
            if (pg[0]) {
                kernels::add_ops(n);
                for (std::size_t i = 0; i < n; ++i) pg[0][i] += g[0];
            }
        });
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += t.at(i);
    kernels::add_ops(n);
    (*out.data)[0] = acc;
    return out;
}

Tensor mean_all(const Tensor& t) {
    if (t.size() == 0) throw ShapeMismatch("mean_all: empty tensor");
    return scale(sum_all(t), 1.0 / static_cast<double>(t.size()));
}

Tensor sum_rows(const Tensor& t) {
    const std::size_t r = t.rows(), c = t.cols();
    Tensor out = make_result(
        {1, c}, tape_of(t), {t.node},
        [r, c](const double* g, const std::vector<double*>& pg) {
            if (!pg[0]) return;
            kernels::add_ops(r * c);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) pg[0][i * c + j] += g[j];
        });
    std::fill(out.data->begin(), out.data->end(), 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*out.data)[j] += t.at(i * c + j);
    kernels::add_ops(r * c);
    return out;
}

// --- unary ----------------------------------------------------------------

namespace {

Tensor unary_op(kernels::Unary op, const Tensor& t) {
    const std::size_t n = t.size();
    Tensor out = uninit(t.shape);
    kernels::map_unary(op, n, t.ptr(), out.ptr());
    Tape* tape = tape_of(t);
    if (tape) {
        auto xd = t.data;
        auto yd = out.data;
        out.tape = tape;
        out.node = tape->record(
            n, {t.node}, [op, n, xd, yd](const double* g, const std::vector<double*>& pg) {
                if (!pg[0]) return;
                kernels::add_ops(3 * n);
                switch (op) {
                    case kernels::Unary::Exp:
                        for (std::size_t i = 0; i < n; ++i) pg[0][i] += g[i] * (*yd)[i];
                        break;
                    case kernels::Unary::Sigmoid:
                        for (std::size_t i = 0; i < n; ++i)
                            pg[0][i] += g[i] * (*yd)[i] * (1.0 - (*yd)[i]);
                        break;
                    case kernels::Unary::Softplus:
                        for (std::size_t i = 0; i < n; ++i)
                            pg[0][i] += g[i] * kernels::apply_unary_scalar(
                                                   kernels::Unary::Sigmoid, (*xd)[i]);
                        break;
                    case kernels::Unary::Relu:
                        for (std::size_t i = 0; i < n; ++i)
                            pg[0][i] += (*xd)[i] > 0.0 ? g[i] : 0.0;
                        break;
                    case kernels::Unary::Neg:
                        for (std::size_t i = 0; i < n; ++i) pg[0][i] -= g[i];
                        break;
                }
            });
    }
    return out;
}

}  // namespace

Tensor exp(const Tensor& t) { return unary_op(kernels::Unary::Exp, t); }
Tensor sigmoid(const Tensor& t) { return unary_op(kernels::Unary::Sigmoid, t); }
Tensor softplus(const Tensor& t) { return unary_op(kernels::Unary::Softplus, t); }
Tensor relu(const Tensor& t) { return unary_op(kernels::Unary::Relu, t); }
Tensor neg(const Tensor& t) { return unary_op(kernels::Unary::Neg, t); }

// --- layer norm -------------------------------------------------------------

Tensor layer_norm(const Tensor& t, double eps) {
    const std::size_t r = t.rows(), c = t.cols();
    Tensor out = uninit(t.shape);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    kernels::layer_norm_rows(r, c, t.ptr(), out.ptr(), inv_std->data(), eps);
    Tape* tape = tape_of(t);
    if (tape) {
        auto yd = out.data;
        out.tape = tape;
        out.node = tape->record(
            r * c, {t.node},
            [r, c, yd, inv_std](const double* g, const std::vector<double*>& pg) {
                if (!pg[0]) return;
                kernels::add_ops(8 * r * c);
                for (std::size_t i = 0; i < r; ++i) {
                    const double* gr = g + i * c;
                    const double* yr = yd->data() + i * c;
                    double gmean = 0.0, gymean = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        gmean += gr[j];
                        gymean += gr[j] * yr[j];
                    }
                    gmean /= static_cast<double>(c);
                    gymean /= static_cast<double>(c);
                    const double is = (*inv_std)[i];
                    for (std::size_t j = 0; j < c; ++j)
                        pg[0][i * c + j] += is * (gr[j] - gmean - yr[j] * gymean);
                }
            });
    }
    return out;
}

// --- dropout ----------------------------------------------------------------

Tensor dropout(const Tensor& t, double rate, bool train, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw InvalidParameter("dropout rate must be in [0,1), got " + std::to_string(rate));
    if (!train || rate == 0.0) return t;
    const std::size_t n = t.size();
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(n);
    for (std::size_t i = 0; i < n; ++i)
        (*mask)[i] = rng.next_double() < rate ? 0.0 : 1.0 / keep;
    Tensor out = make_result(
        t.shape, tape_of(t), {t.node},
        [n, mask](const double* g, const std::vector<double*>& pg) {
            if (!pg[0]) return;
            kernels::add_ops(2 * n);
            for (std::size_t i = 0; i < n; ++i) pg[0][i] += g[i] * (*mask)[i];
        });
    kernels::add_ops(n);
    for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = t.at(i) * (*mask)[i];
    return out;
}

// --- init -------------------------------------------------------------------

Tensor init_params(const std::vector<std::size_t>& shape, Init scheme, std::uint64_t seed) {
    Tensor t = Tensor::zeros(shape);
    if (scheme == Init::Zeros) return t;
    const std::size_t fan_in = shape.empty() ? 1 : shape[0];
    const std::size_t fan_out = shape.size() >= 2 ? shape[1] : fan_in;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng(seed);
    for (double& v : *t.data) v = rng.uniform(-bound, bound);
    return t;
}

// --- checkpoint io ------------------------------------------------------------

void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, Tensor>>& tensors) {
    nlohmann::json manifest = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : tensors) {
        manifest.push_back({{"name", name},
                            {"shape", t.shape},
                            {"offset", offset}});
        offset += t.size() * sizeof(double);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << manifest.dump() << "\n";
    for (const auto& [name, t] : tensors) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double v = t.at(i);
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            unsigned char bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
            out.write(reinterpret_cast<const char*>(bytes), 8);
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

std::map<std::string, Tensor> load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing checkpoint manifest: " + path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("checkpoint manifest: ") + e.what());
    }
    const std::streampos payload_start = in.tellg();
    std::map<std::string, Tensor> out;
    for (const auto& entry : manifest) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
        const std::size_t offset = entry.at("offset").get<std::size_t>();
        Tensor t = Tensor::zeros(shape);
        in.seekg(payload_start + static_cast<std::streamoff>(offset));
        for (std::size_t i = 0; i < t.size(); ++i) {
            unsigned char bytes[8];
            in.read(reinterpret_cast<char*>(bytes), 8);
            if (!in) throw ParseError("truncated checkpoint payload: " + path);
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
            double v;
            std::memcpy(&v, &bits, sizeof(v));
            (*t.data)[i] = v;
        }
        out.emplace(name, std::move(t));
    }
    return out;
}

}  // namespace ccm
