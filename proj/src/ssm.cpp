#include "ccm/ssm.hpp"

#include <cmath>

#include "ccm/kernels.hpp"

namespace ccm {

SsmParams SsmParams::init(std::size_t d, std::size_t n, Rng& rng) {
    SsmParams p;
    auto glorot = [&rng](std::size_t r, std::size_t c) {
        return init_params({r, c}, Init::UniformGlorot, rng.next_u64());
    };
    p.w_state = glorot(d, n);
    p.b_state = Tensor::zeros({n});
    p.w_input = glorot(d, n);
    p.w_readout = glorot(d, n);
    p.w_step = glorot(d, 1);
    p.b_step = Tensor::zeros({1});
    p.w_gate = glorot(d, d);
    p.w_out = glorot(d, d);
    return p;
}

SelectiveParams selective_params(const Tensor& h_seq, const SsmParams& p) {
    if (h_seq.rows() < 1) throw ShapeMismatch("selective_params: empty sequence");
    SelectiveParams out;
    out.transition = neg(exp(add_rowwise(matmul(h_seq, p.w_state), p.b_state)));
    out.injection = matmul(h_seq, p.w_input);
    out.readout = matmul(h_seq, p.w_readout);
    out.step = softplus(add_rowwise(matmul(h_seq, p.w_step), p.b_step));
    return out;
}

namespace {

constexpr double kSeriesThreshold = 1e-8;

// f(u) = (e^u - 1) / u, continuous at 0 with f(0) = 1.
double phi(double u) {
    if (std::fabs(u) < kSeriesThreshold)
        return 1.0 + u / 2.0 + u * u / 6.0;
    return std::expm1(u) / u;
}

// f'(u); the closed form cancels catastrophically near 0.
double phi_prime(double u) {
    if (std::fabs(u) < 1e-4)
        return 0.5 + u / 3.0 + u * u / 8.0 + u * u * u / 30.0;
    return (std::exp(u) * (u - 1.0) + 1.0) / (u * u);
}

}  // namespace

std::pair<double, double> discretize(double a, double b, double dt) {
    const double u = dt * a;
    return {std::exp(u), dt * b * phi(u)};
}

Discretized discretize(const SelectiveParams& p) {
    const Tensor& a = p.transition;
    const Tensor& b = p.injection;
    const Tensor& dt = p.step;
    const std::size_t t_len = a.rows(), n = a.cols();
    if (b.shape != a.shape || dt.rows() != t_len || dt.cols() != 1)
        throw ShapeMismatch("discretize: coefficient shapes disagree");

    Tape* tape = nullptr;
    for (const Tensor* t : {&a, &b, &dt})
        if (t->differentiable()) tape = t->tape;

    Discretized out;
    out.decay = Tensor::zeros({t_len, n});
    out.drive = Tensor::zeros({t_len, n});
    kernels::add_ops(6 * t_len * n);
    for (std::size_t t = 0; t < t_len; ++t) {
        const double step = dt.at(t, 0);
        for (std::size_t j = 0; j < n; ++j) {
            const auto [dec, drv] = discretize(a.at(t, j), b.at(t, j), step);
            (*out.decay.data)[t * n + j] = dec;
            (*out.drive.data)[t * n + j] = drv;
        }
    }

    if (tape) {
        auto ad = a.data, bd = b.data, dtd = dt.data, decd = out.decay.data;
        out.decay.tape = tape;
        out.decay.node = tape->record(
            t_len * n, {a.node, dt.node},
            [t_len, n, ad, dtd, decd](const double* g, const std::vector<double*>& pg) {
                kernels::add_ops(6 * t_len * n);
                for (std::size_t t = 0; t < t_len; ++t) {
                    const double step = (*dtd)[t];
                    double gdt = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dec = (*decd)[t * n + j];
                        if (pg[0]) pg[0][t * n + j] += g[t * n + j] * step * dec;
                        gdt += g[t * n + j] * (*ad)[t * n + j] * dec;
                    }
                    if (pg[1]) pg[1][t] += gdt;
                }
            });
        out.drive.tape = tape;
        out.drive.node = tape->record(
            t_len * n, {a.node, b.node, dt.node},
            [t_len, n, ad, bd, dtd](const double* g, const std::vector<double*>& pg) {
                kernels::add_ops(12 * t_len * n);
                for (std::size_t t = 0; t < t_len; ++t) {
                    const double step = (*dtd)[t];
                    double gdt = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double av = (*ad)[t * n + j];
                        const double bv = (*bd)[t * n + j];
                        const double u = step * av;
                        const double f = phi(u);
                        const double fp = phi_prime(u);
                        const double gv = g[t * n + j];
                        if (pg[0]) pg[0][t * n + j] += gv * step * step * bv * fp;
                        if (pg[1]) pg[1][t * n + j] += gv * step * f;
                        gdt += gv * bv * (f + step * av * fp);
                    }
                    if (pg[2]) pg[2][t] += gdt;
                }
            });
    }
    return out;
}

Tensor scan_recurrence(const Tensor& decay, const Tensor& drive, const Tensor& readout,
                       const Tensor& x) {
    const std::size_t t_len = x.rows(), d = x.cols(), n = decay.cols();
    if (decay.rows() != t_len || drive.shape != decay.shape || readout.shape != decay.shape)
        throw ShapeMismatch("scan_recurrence: coefficient shapes disagree");

    Tape* tape = nullptr;
    for (const Tensor* t : {&decay, &drive, &readout, &x})
        if (t->differentiable()) tape = t->tape;

    Tensor y = Tensor::zeros({t_len, d});
    auto state = tape ? std::make_shared<std::vector<double>>(t_len * d * n)
                      : std::shared_ptr<std::vector<double>>();
    kernels::scan_forward(t_len, d, n, decay.ptr(), drive.ptr(), readout.ptr(), x.ptr(),
                          state ? state->data() : nullptr, y.ptr());

    if (tape) {
        auto decd = decay.data, drvd = drive.data, rdd = readout.data, xd = x.data;
        y.tape = tape;
        y.node = tape->record(
            t_len * d, {decay.node, drive.node, readout.node, x.node},
            [t_len, d, n, decd, drvd, rdd, xd, state](const double* g,
                                                      const std::vector<double*>& pg) {
                std::vector<double> g_dec(t_len * n, 0.0), g_drv(t_len * n, 0.0),
                    g_rd(t_len * n, 0.0), g_x(t_len * d, 0.0);
                kernels::scan_backward(t_len, d, n, decd->data(), drvd->data(), rdd->data(),
                                       xd->data(), state->data(), g, g_dec.data(),
                                       g_drv.data(), g_rd.data(), g_x.data());
                auto accumulate = [](double* dst, const std::vector<double>& src) {
                    if (!dst) return;
                    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
                };
                accumulate(pg[0], g_dec);
                accumulate(pg[1], g_drv);
                accumulate(pg[2], g_rd);
                accumulate(pg[3], g_x);
            });
    }
    return y;
}

Tensor selective_scan(const Tensor& x_seq, const SelectiveParams& p) {
    const Discretized d = discretize(p);
    return scan_recurrence(d.decay, d.drive, p.readout, x_seq);
}

Tensor mamba_block(const Tensor& h_seq, const SsmParams& p, bool bidirectional) {
    if (h_seq.rows() < 1) throw ShapeMismatch("mamba_block: empty sequence");
    const SelectiveParams sp = selective_params(h_seq, p);
    Tensor scanned = selective_scan(h_seq, sp);
    if (bidirectional) {
        // Per-step coefficients are row-wise functions of the features, so
        // reversing the derived coefficients equals deriving them from the
        // reversed sequence.
        SelectiveParams rev;
        rev.transition = reverse_rows(sp.transition);
        rev.injection = reverse_rows(sp.injection);
        rev.readout = reverse_rows(sp.readout);
        rev.step = reverse_rows(sp.step);
        const Tensor backward = reverse_rows(selective_scan(reverse_rows(h_seq), rev));
        scanned = scale(add(scanned, backward), 0.5);
    }
    const Tensor gate = sigmoid(matmul(h_seq, p.w_gate));
    return matmul(mul(gate, scanned), p.w_out);
}

}  // namespace ccm
