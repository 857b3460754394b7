#pragma once

#include <cstddef>
#include <cstdint>

// Dense numeric kernels. Every kernel has a serial reference implementation
// and an OpenMP variant that partitions work so each output element is
// written by exactly one thread with a fixed inner summation order; the two
// therefore produce bit-identical results and the tests compare them
// directly. The dispatching entry points pick the OpenMP path when it is
// enabled and the problem is large enough to pay for the fork/join.
namespace ccm::kernels {

// Thread control. max_threads <= 0 restores the OpenMP default.
void configure_threads(int max_threads);
int max_threads();

// Force-disable the parallel paths (benchmarks and A/B tests).
void set_parallel(bool enabled);
bool parallel_enabled();

// Primitive-operation accounting (multiplies/adds/transcendental calls).
// Incremented once per kernel call with an analytic count, so the totals
// are exact and independent of thread count.
void add_ops(std::uint64_t n);
std::uint64_t op_count();
void reset_op_count();

enum class Unary { Exp, Sigmoid, Softplus, Relu, Neg };
enum class Binary { Add, Sub, Mul };

double apply_unary_scalar(Unary op, double x);

// c (+)= a(m x k) * b(k x n), row-major
void gemm_nn(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c, bool accumulate);
// c (+)= a(m x k) * b(n x k)^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c, bool accumulate);
// c (+)= a(k x m)^T * b(k x n)
void gemm_tn(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c, bool accumulate);

void gemm_nn_serial(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c, bool accumulate);
void gemm_nt_serial(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c, bool accumulate);
void gemm_tn_serial(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c, bool accumulate);

void map_unary(Unary op, std::size_t n, const double* x, double* y);
void map_unary_serial(Unary op, std::size_t n, const double* x, double* y);

void map_binary(Binary op, std::size_t n, const double* a, const double* b, double* y);
void map_binary_serial(Binary op, std::size_t n, const double* a, const double* b, double* y);

// Row-wise normalization: y[r] = (x[r] - mean) / sqrt(var + eps).
// inv_std (length rows) receives 1/sqrt(var + eps) for the backward pass;
// may be null.
void layer_norm_rows(std::size_t rows, std::size_t cols,
                     const double* x, double* y, double* inv_std, double eps);
void layer_norm_rows_serial(std::size_t rows, std::size_t cols,
                            const double* x, double* y, double* inv_std, double eps);

// Diagonal selective scan. Shapes: decay/drive/readout are T x N, x is
// T x d, y is T x d, state is T x d x N (captured per step for backward;
// may be null when no backward pass will run). Per channel c and state n:
//   h[t] = decay[t,n] * h[t-1] + drive[t,n] * x[t,c],  h[-1] = 0
//   y[t,c] = sum_n readout[t,n] * h[t]
// The recurrence is sequential in t; channels are independent, which is
// the parallel axis.
void scan_forward(std::size_t T, std::size_t d, std::size_t N,
                  const double* decay, const double* drive, const double* readout,
                  const double* x, double* state, double* y);
void scan_forward_serial(std::size_t T, std::size_t d, std::size_t N,
                         const double* decay, const double* drive, const double* readout,
                         const double* x, double* state, double* y);

// Adjoint of scan_forward. Accumulates into g_decay/g_drive/g_readout
// (T x N) and g_x (T x d). `state` must be the buffer captured by the
// forward pass.
void scan_backward(std::size_t T, std::size_t d, std::size_t N,
                   const double* decay, const double* drive, const double* readout,
                   const double* x, const double* state, const double* g_y,
                   double* g_decay, double* g_drive, double* g_readout, double* g_x);
void scan_backward_serial(std::size_t T, std::size_t d, std::size_t N,
                          const double* decay, const double* drive, const double* readout,
                          const double* x, const double* state, const double* g_y,
                          double* g_decay, double* g_drive, double* g_readout, double* g_x);

}  // namespace ccm::kernels
