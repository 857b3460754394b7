#include "ccm/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ccm::kernels {

namespace {

std::atomic<std::uint64_t> g_op_count{0};
bool g_parallel = true;
int g_max_threads = 0;

// Work below this many scalar ops is not worth a fork/join on small cores.
constexpr std::size_t kParallelGrain = 16384;

bool go_parallel(std::size_t work) {
#ifdef _OPENMP
    return g_parallel && work >= kParallelGrain && omp_get_max_threads() > 1;
#else
    (void)work;
    return false;
#endif
}

}  // namespace

void configure_threads(int max_threads) {
    g_max_threads = max_threads;
#ifdef _OPENMP
    if (max_threads > 0) omp_set_num_threads(max_threads);
#endif
}

int max_threads() { return g_max_threads; }

void set_parallel(bool enabled) { g_parallel = enabled; }
bool parallel_enabled() { return g_parallel; }

void add_ops(std::uint64_t n) { g_op_count.fetch_add(n, std::memory_order_relaxed); }
std::uint64_t op_count() { return g_op_count.load(std::memory_order_relaxed); }
void reset_op_count() { g_op_count.store(0, std::memory_order_relaxed); }

double apply_unary_scalar(Unary op, double x) {
    switch (op) {
        case Unary::Exp:
            return std::exp(x);
        case Unary::Sigmoid:
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                            : std::exp(x) / (1.0 + std::exp(x));
        case Unary::Softplus:
            // ln(1 + e^x), overflow-safe
            return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
        case Unary::Relu:
            return x > 0.0 ? x : 0.0;
        case Unary::Neg:
            return -x;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// gemm
// ---------------------------------------------------------------------------

namespace {

inline void gemm_nn_row(std::size_t i, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c, bool accumulate) {
    double* crow = c + i * n;
    if (!accumulate) std::memset(crow, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

inline void gemm_nt_row(std::size_t i, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c, bool accumulate) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] = accumulate ? crow[j] + acc : acc;
    }
}

}  // namespace

void gemm_nn_serial(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c, bool accumulate) {
    add_ops(2 * m * k * n);
    for (std::size_t i = 0; i < m; ++i) gemm_nn_row(i, k, n, a, b, c, accumulate);
}

void gemm_nn(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c, bool accumulate) {
    if (!go_parallel(m * k * n)) {
        gemm_nn_serial(m, k, n, a, b, c, accumulate);
        return;
    }
    add_ops(2 * m * k * n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        gemm_nn_row(static_cast<std::size_t>(i), k, n, a, b, c, accumulate);
}

void gemm_nt_serial(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c, bool accumulate) {
    add_ops(2 * m * k * n);
    for (std::size_t i = 0; i < m; ++i) gemm_nt_row(i, k, n, a, b, c, accumulate);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c, bool accumulate) {
    if (!go_parallel(m * k * n)) {
        gemm_nt_serial(m, k, n, a, b, c, accumulate);
        return;
    }
    add_ops(2 * m * k * n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        gemm_nt_row(static_cast<std::size_t>(i), k, n, a, b, c, accumulate);
}

namespace {

inline void gemm_tn_out_row(std::size_t i, std::size_t m, std::size_t k, std::size_t n,
                            const double* a, const double* b, double* c, bool accumulate) {
    // c[i,:] += sum_p a[p,i] * b[p,:]
    double* crow = c + i * n;
    if (!accumulate) std::memset(crow, 0, n * sizeof(double));
    for (std::size_t p = 0; p < k; ++p) {
        const double av = a[p * m + i];
        if (av == 0.0) continue;
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

}  // namespace

void gemm_tn_serial(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c, bool accumulate) {
    add_ops(2 * m * k * n);
    for (std::size_t i = 0; i < m; ++i) gemm_tn_out_row(i, m, k, n, a, b, c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c, bool accumulate) {
    if (!go_parallel(m * k * n)) {
        gemm_tn_serial(m, k, n, a, b, c, accumulate);
        return;
    }
    add_ops(2 * m * k * n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        gemm_tn_out_row(static_cast<std::size_t>(i), m, k, n, a, b, c, accumulate);
}

// ---------------------------------------------------------------------------
// elementwise maps
// ---------------------------------------------------------------------------

void map_unary_serial(Unary op, std::size_t n, const double* x, double* y) {
    add_ops(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = apply_unary_scalar(op, x[i]);
}

void map_unary(Unary op, std::size_t n, const double* x, double* y) {
    if (!go_parallel(n * 4)) {
        map_unary_serial(op, n, x, y);
        return;
    }
    add_ops(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        y[i] = apply_unary_scalar(op, x[i]);
}

namespace {

inline double apply_binary(Binary op, double a, double b) {
    switch (op) {
        case Binary::Add: return a + b;
        case Binary::Sub: return a - b;
        case Binary::Mul: return a * b;
    }
    return 0.0;
}

}  // namespace

void map_binary_serial(Binary op, std::size_t n, const double* a, const double* b, double* y) {
    add_ops(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = apply_binary(op, a[i], b[i]);
}

void map_binary(Binary op, std::size_t n, const double* a, const double* b, double* y) {
    if (!go_parallel(n * 2)) {
        map_binary_serial(op, n, a, b, y);
        return;
    }
    add_ops(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        y[i] = apply_binary(op, a[i], b[i]);
}

// ---------------------------------------------------------------------------
// layer norm
// ---------------------------------------------------------------------------

namespace {

inline void layer_norm_row(std::size_t r, std::size_t cols,
                           const double* x, double* y, double* inv_std, double eps) {
    const double* xr = x + r * cols;
    double* yr = y + r * cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += xr[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        const double dv = xr[j] - mean;
        var += dv * dv;
    }
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    if (inv_std) inv_std[r] = is;
    for (std::size_t j = 0; j < cols; ++j) yr[j] = (xr[j] - mean) * is;
}

}  // namespace

void layer_norm_rows_serial(std::size_t rows, std::size_t cols,
                            const double* x, double* y, double* inv_std, double eps) {
    add_ops(rows * cols * 5);
    for (std::size_t r = 0; r < rows; ++r) layer_norm_row(r, cols, x, y, inv_std, eps);
}

void layer_norm_rows(std::size_t rows, std::size_t cols,
                     const double* x, double* y, double* inv_std, double eps) {
    if (!go_parallel(rows * cols * 5)) {
        layer_norm_rows_serial(rows, cols, x, y, inv_std, eps);
        return;
    }
    add_ops(rows * cols * 5);
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < static_cast<long long>(rows); ++r)
        layer_norm_row(static_cast<std::size_t>(r), cols, x, y, inv_std, eps);
}

// ---------------------------------------------------------------------------
// selective scan
// ---------------------------------------------------------------------------

namespace {

inline void scan_forward_channel(std::size_t c, std::size_t T, std::size_t d, std::size_t N,
                                 const double* decay, const double* drive,
                                 const double* readout, const double* x,
                                 double* state, double* y) {
    std::vector<double> h(N, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double xt = x[t * d + c];
        const double* dec = decay + t * N;
        const double* drv = drive + t * N;
        const double* rd = readout + t * N;
        double acc = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            h[n] = dec[n] * h[n] + drv[n] * xt;
            acc += rd[n] * h[n];
        }
        if (state) std::memcpy(state + (t * d + c) * N, h.data(), N * sizeof(double));
        y[t * d + c] = acc;
    }
}

}  // namespace

void scan_forward_serial(std::size_t T, std::size_t d, std::size_t N,
                         const double* decay, const double* drive, const double* readout,
                         const double* x, double* state, double* y) {
    add_ops(5 * T * d * N);
    for (std::size_t c = 0; c < d; ++c)
        scan_forward_channel(c, T, d, N, decay, drive, readout, x, state, y);
}

void scan_forward(std::size_t T, std::size_t d, std::size_t N,
                  const double* decay, const double* drive, const double* readout,
                  const double* x, double* state, double* y) {
    if (!go_parallel(5 * T * d * N)) {
        scan_forward_serial(T, d, N, decay, drive, readout, x, state, y);
        return;
    }
    add_ops(5 * T * d * N);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < static_cast<long long>(d); ++c)
        scan_forward_channel(static_cast<std::size_t>(c), T, d, N, decay, drive, readout,
                             x, state, y);
}

namespace {

// Pass 1, parallel over states: adjoint recurrence
//   lam[t] = readout[t,n] * g_y[t,c] + decay[t+1,n] * lam[t+1]
// accumulates g_decay/g_drive/g_readout, each owned by (t, n).
inline void scan_backward_state(std::size_t n, std::size_t T, std::size_t d, std::size_t N,
                                const double* decay, const double* readout, const double* x,
                                const double* state, const double* g_y,
                                double* g_decay, double* g_drive, double* g_readout) {
    std::vector<double> lam(d, 0.0);
    for (std::size_t t = T; t-- > 0;) {
        const double dec_next = (t + 1 < T) ? decay[(t + 1) * N + n] : 0.0;
        double gd = 0.0, gb = 0.0, gc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double l = readout[t * N + n] * g_y[t * d + c] +
                             (t + 1 < T ? dec_next * lam[c] : 0.0);
            lam[c] = l;
            const double h_prev = (t > 0) ? state[((t - 1) * d + c) * N + n] : 0.0;
            gd += l * h_prev;
            gb += l * x[t * d + c];
            gc += g_y[t * d + c] * state[(t * d + c) * N + n];
        }
        g_decay[t * N + n] += gd;
        g_drive[t * N + n] += gb;
        g_readout[t * N + n] += gc;
    }
}

// Pass 2, parallel over channels: g_x[t,c] = sum_n lam[t][c,n] * drive[t,n].
inline void scan_backward_channel(std::size_t c, std::size_t T, std::size_t d, std::size_t N,
                                  const double* decay, const double* drive,
                                  const double* readout, const double* g_y, double* g_x) {
    std::vector<double> lam(N, 0.0);
    for (std::size_t t = T; t-- > 0;) {
        const double gy = g_y[t * d + c];
        double gx = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double l = readout[t * N + n] * gy +
                             (t + 1 < T ? decay[(t + 1) * N + n] * lam[n] : 0.0);
            lam[n] = l;
            gx += l * drive[t * N + n];
        }
        g_x[t * d + c] += gx;
    }
}

}  // namespace

void scan_backward_serial(std::size_t T, std::size_t d, std::size_t N,
                          const double* decay, const double* drive, const double* readout,
                          const double* x, const double* state, const double* g_y,
                          double* g_decay, double* g_drive, double* g_readout, double* g_x) {
    add_ops(10 * T * d * N);
    for (std::size_t n = 0; n < N; ++n)
        scan_backward_state(n, T, d, N, decay, readout, x, state, g_y,
                            g_decay, g_drive, g_readout);
    for (std::size_t c = 0; c < d; ++c)
        scan_backward_channel(c, T, d, N, decay, drive, readout, g_y, g_x);
}

void scan_backward(std::size_t T, std::size_t d, std::size_t N,
                   const double* decay, const double* drive, const double* readout,
                   const double* x, const double* state, const double* g_y,
                   double* g_decay, double* g_drive, double* g_readout, double* g_x) {
    if (!go_parallel(10 * T * d * N)) {
        scan_backward_serial(T, d, N, decay, drive, readout, x, state, g_y,
                             g_decay, g_drive, g_readout, g_x);
        return;
    }
    add_ops(10 * T * d * N);
#pragma omp parallel for schedule(static)
    for (long long n = 0; n < static_cast<long long>(N); ++n)
        scan_backward_state(static_cast<std::size_t>(n), T, d, N, decay, readout,
                            x, state, g_y, g_decay, g_drive, g_readout);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < static_cast<long long>(d); ++c)
        scan_backward_channel(static_cast<std::size_t>(c), T, d, N, decay, drive, readout,
                              g_y, g_x);
}

}  // namespace ccm::kernels
