#include "cfn/mlp.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cfn {

namespace {

// y = W x + b, W row-major [out][in]
inline void affine(const double* w, const double* b, const double* x,
                   int in, int out, double* y) {
    for (int o = 0; o < out; ++o) {
        const double* row = w + std::size_t(o) * std::size_t(in);
        double acc = b[o];
        for (int i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

// dx += W^T dy ; dW += dy x^T ; db += dy
inline void affine_backward(const double* w, const double* x, const double* dy,
                            int in, int out, double* dw, double* db, double* dx) {
    for (int o = 0; o < out; ++o) {
        const double g = dy[o];
        db[o] += g;
        const double* row = w + std::size_t(o) * std::size_t(in);
        double* drow = dw + std::size_t(o) * std::size_t(in);
        for (int i = 0; i < in; ++i) {
            drow[i] += g * x[i];
            if (dx) dx[i] += g * row[i];
        }
    }
}

inline void relu(double* v, int n) {
    for (int i = 0; i < n; ++i)
        if (v[i] < 0.0) v[i] = 0.0;
}

// dz = dy where the forward output was positive, else 0
inline void relu_backward(const double* post, const double* dy, int n, double* dz) {
    for (int i = 0; i < n; ++i) dz[i] = post[i] > 0.0 ? dy[i] : 0.0;
}

/* Batched Y = X W^T + b.  Runs in axpy form over a transposed weight copy so
 * the inner loop is an independent element-wise FMA over the output row —
 * vectorizable under strict FP, unlike a dot-product reduction.  The term
 * order per output element matches the scalar affine() above, so results are
 * bit-identical.  Rows whose input is exactly zero contribute nothing and
 * are skipped; with one-hot features and rectified activations that is most
 * of them. */
void affine_batch(const double* w, const double* b, const double* x, int batch, int in, int out,
                  double* y, std::vector<double>& wt) {
    wt.resize(std::size_t(in) * std::size_t(out));
    for (int o = 0; o < out; ++o)
        for (int i = 0; i < in; ++i)
            wt[std::size_t(i) * std::size_t(out) + std::size_t(o)] =
                w[std::size_t(o) * std::size_t(in) + std::size_t(i)];
    for (int s = 0; s < batch; ++s) {
        const double* xr = x + std::size_t(s) * std::size_t(in);
        double* yr = y + std::size_t(s) * std::size_t(out);
        std::memcpy(yr, b, sizeof(double) * std::size_t(out));
        for (int i = 0; i < in; ++i) {
            const double xv = xr[i];
            if (xv == 0.0) continue;
            const double* wr = wt.data() + std::size_t(i) * std::size_t(out);
            for (int o = 0; o < out; ++o) yr[o] += xv * wr[o];
        }
    }
}

/* Batched counterpart of affine_backward: dW += dY^T X, db += 1^T dY, and,
 * when dx is given, dX = dY W accumulated on top of whatever the caller
 * seeded dx with (skip connections pre-load it).  Accumulation order per
 * parameter element is batch-row ascending, matching a per-row backward()
 * loop. */
void affine_backward_batch(const double* w, const double* x, const double* dy, int batch, int in,
                           int out, double* dw, double* db, double* dx) {
    for (int s = 0; s < batch; ++s) {
        const double* dyr = dy + std::size_t(s) * std::size_t(out);
        const double* xr = x + std::size_t(s) * std::size_t(in);
        double* dxr = dx ? dx + std::size_t(s) * std::size_t(in) : nullptr;
        for (int o = 0; o < out; ++o) {
            const double g = dyr[o];
            if (g == 0.0) continue;
            db[o] += g;
            const double* wr = w + std::size_t(o) * std::size_t(in);
            double* dwr = dw + std::size_t(o) * std::size_t(in);
            if (dxr) {
                for (int i = 0; i < in; ++i) {
                    dwr[i] += g * xr[i];
                    dxr[i] += g * wr[i];
                }
            } else {
                for (int i = 0; i < in; ++i) dwr[i] += g * xr[i];
            }
        }
    }
}

}  // namespace

ResMlp::ResMlp(int f_in, int f_out) : f_in_(f_in), f_out_(f_out) {
    if (f_in <= 0 || f_out <= 0) throw std::invalid_argument("mlp: dimensions must be positive");
    compute_offsets();
}

void ResMlp::compute_offsets() {
    std::size_t off = 0;
    w_in_ = off; off += std::size_t(kWidth) * std::size_t(f_in_);
    b_in_ = off; off += kWidth;
    for (int l = 0; l < kHiddenLayers; ++l) {
        w_h_[l] = off; off += std::size_t(kWidth) * std::size_t(kWidth);
        b_h_[l] = off; off += kWidth;
    }
    w_out_ = off; off += std::size_t(f_out_) * std::size_t(kWidth);
    b_out_ = off; off += std::size_t(f_out_);
    theta_.assign(off, 0.0);
}

void ResMlp::init(Rng& rng) {
    auto fill = [&](std::size_t w_off, std::size_t count, int fan_in) {
        const double bound = std::sqrt(6.0 / double(fan_in));
        for (std::size_t i = 0; i < count; ++i)
            theta_[w_off + i] = (2.0 * rng.uniform() - 1.0) * bound;
    };
    fill(w_in_, std::size_t(kWidth) * std::size_t(f_in_), f_in_);
    for (int l = 0; l < kHiddenLayers; ++l)
        fill(w_h_[l], std::size_t(kWidth) * std::size_t(kWidth), kWidth);
    fill(w_out_, std::size_t(f_out_) * std::size_t(kWidth), kWidth);
    // biases stay zero
}

void ResMlp::forward(const double* x, double* out, Tape* tape) const {
    const double* th = theta_.data();
    double x0[kWidth], h1[kWidth], r2[kWidth], h2[kWidth], h3[kWidth], r4[kWidth], h4[kWidth];

    affine(th + w_in_, th + b_in_, x, f_in_, kWidth, x0);

    affine(th + w_h_[0], th + b_h_[0], x0, kWidth, kWidth, h1);
    relu(h1, kWidth);
    affine(th + w_h_[1], th + b_h_[1], h1, kWidth, kWidth, r2);
    relu(r2, kWidth);
    for (int i = 0; i < kWidth; ++i) h2[i] = r2[i] + x0[i];

    affine(th + w_h_[2], th + b_h_[2], h2, kWidth, kWidth, h3);
    relu(h3, kWidth);
    affine(th + w_h_[3], th + b_h_[3], h3, kWidth, kWidth, r4);
    relu(r4, kWidth);
    for (int i = 0; i < kWidth; ++i) h4[i] = r4[i] + h2[i];

    affine(th + w_out_, th + b_out_, h4, kWidth, f_out_, out);

    if (tape) {
        tape->x.assign(x, x + f_in_);
        tape->x0.assign(x0, x0 + kWidth);
        tape->h1.assign(h1, h1 + kWidth);
        tape->r2.assign(r2, r2 + kWidth);
        tape->h2.assign(h2, h2 + kWidth);
        tape->h3.assign(h3, h3 + kWidth);
        tape->r4.assign(r4, r4 + kWidth);
        tape->h4.assign(h4, h4 + kWidth);
    }
}

void ResMlp::backward(const Tape& tape, const double* d_out, std::vector<double>& grad) const {
    if (grad.size() != theta_.size())
        throw std::invalid_argument("mlp: gradient buffer size mismatch");
    const double* th = theta_.data();
    double* g = grad.data();

    double dh4[kWidth] = {0};
    affine_backward(th + w_out_, tape.h4.data(), d_out, kWidth, f_out_,
                    g + w_out_, g + b_out_, dh4);

    // h4 = r4 + h2
    double da4[kWidth];
    relu_backward(tape.r4.data(), dh4, kWidth, da4);
    double dh3[kWidth] = {0};
    affine_backward(th + w_h_[3], tape.h3.data(), da4, kWidth, kWidth,
                    g + w_h_[3], g + b_h_[3], dh3);
    double da3[kWidth];
    relu_backward(tape.h3.data(), dh3, kWidth, da3);
    double dh2[kWidth];
    std::memcpy(dh2, dh4, sizeof dh2);  // skip connection
    affine_backward(th + w_h_[2], tape.h2.data(), da3, kWidth, kWidth,
                    g + w_h_[2], g + b_h_[2], dh2);

    // h2 = r2 + x0
    double da2[kWidth];
    relu_backward(tape.r2.data(), dh2, kWidth, da2);
    double dh1[kWidth] = {0};
    affine_backward(th + w_h_[1], tape.h1.data(), da2, kWidth, kWidth,
                    g + w_h_[1], g + b_h_[1], dh1);
    double da1[kWidth];
    relu_backward(tape.h1.data(), dh1, kWidth, da1);
    double dx0[kWidth];
    std::memcpy(dx0, dh2, sizeof dx0);  // skip connection
    affine_backward(th + w_h_[0], tape.x0.data(), da1, kWidth, kWidth,
                    g + w_h_[0], g + b_h_[0], dx0);

    affine_backward(th + w_in_, tape.x.data(), dx0, f_in_, kWidth,
                    g + w_in_, g + b_in_, nullptr);
}

void ResMlp::forward_batch(const double* x, int batch, double* out, BatchTape* tape) const {
    if (batch < 0) throw std::invalid_argument("mlp: negative batch");
    BatchTape local;
    BatchTape& t = tape ? *tape : local;
    t.batch = batch;
    const std::size_t bw = std::size_t(batch) * std::size_t(kWidth);
    t.x0.resize(bw);
    t.h1.resize(bw);
    t.r2.resize(bw);
    t.h2.resize(bw);
    t.h3.resize(bw);
    t.r4.resize(bw);
    t.h4.resize(bw);
    if (tape) t.x.assign(x, x + std::size_t(batch) * std::size_t(f_in_));

    const double* th = theta_.data();
    std::vector<double> wt;  // transposed-weight scratch shared by the layers

    affine_batch(th + w_in_, th + b_in_, x, batch, f_in_, kWidth, t.x0.data(), wt);

    affine_batch(th + w_h_[0], th + b_h_[0], t.x0.data(), batch, kWidth, kWidth, t.h1.data(), wt);
    relu(t.h1.data(), int(bw));
    affine_batch(th + w_h_[1], th + b_h_[1], t.h1.data(), batch, kWidth, kWidth, t.r2.data(), wt);
    relu(t.r2.data(), int(bw));
    for (std::size_t i = 0; i < bw; ++i) t.h2[i] = t.r2[i] + t.x0[i];

    affine_batch(th + w_h_[2], th + b_h_[2], t.h2.data(), batch, kWidth, kWidth, t.h3.data(), wt);
    relu(t.h3.data(), int(bw));
    affine_batch(th + w_h_[3], th + b_h_[3], t.h3.data(), batch, kWidth, kWidth, t.r4.data(), wt);
    relu(t.r4.data(), int(bw));
    for (std::size_t i = 0; i < bw; ++i) t.h4[i] = t.r4[i] + t.h2[i];

    affine_batch(th + w_out_, th + b_out_, t.h4.data(), batch, kWidth, f_out_, out, wt);
}

void ResMlp::backward_batch(const BatchTape& tape, const double* d_out,
                            std::vector<double>& grad) const {
    if (grad.size() != theta_.size())
        throw std::invalid_argument("mlp: gradient buffer size mismatch");
    if (tape.x.size() != std::size_t(tape.batch) * std::size_t(f_in_))
        throw std::invalid_argument("mlp: batch tape was built without inputs");
    const int batch = tape.batch;
    const std::size_t bw = std::size_t(batch) * std::size_t(kWidth);
    const double* th = theta_.data();
    double* g = grad.data();

    std::vector<double> dh4(bw, 0.0), da(bw), dh3(bw, 0.0), dh2(bw), dh1(bw, 0.0), dx0(bw);
    affine_backward_batch(th + w_out_, tape.h4.data(), d_out, batch, kWidth, f_out_, g + w_out_,
                          g + b_out_, dh4.data());

    // h4 = r4 + h2
    relu_backward(tape.r4.data(), dh4.data(), int(bw), da.data());
    affine_backward_batch(th + w_h_[3], tape.h3.data(), da.data(), batch, kWidth, kWidth,
                          g + w_h_[3], g + b_h_[3], dh3.data());
    relu_backward(tape.h3.data(), dh3.data(), int(bw), da.data());
    std::memcpy(dh2.data(), dh4.data(), bw * sizeof(double));  // skip connection
    affine_backward_batch(th + w_h_[2], tape.h2.data(), da.data(), batch, kWidth, kWidth,
                          g + w_h_[2], g + b_h_[2], dh2.data());

    // h2 = r2 + x0
    relu_backward(tape.r2.data(), dh2.data(), int(bw), da.data());
    affine_backward_batch(th + w_h_[1], tape.h1.data(), da.data(), batch, kWidth, kWidth,
                          g + w_h_[1], g + b_h_[1], dh1.data());
    relu_backward(tape.h1.data(), dh1.data(), int(bw), da.data());
    std::memcpy(dx0.data(), dh2.data(), bw * sizeof(double));  // skip connection
    affine_backward_batch(th + w_h_[0], tape.x0.data(), da.data(), batch, kWidth, kWidth,
                          g + w_h_[0], g + b_h_[0], dx0.data());

    affine_backward_batch(th + w_in_, tape.x.data(), dx0.data(), batch, f_in_, kWidth, g + w_in_,
                          g + b_in_, nullptr);
}

std::vector<ResMlp::Block> ResMlp::layout() const {
    std::vector<Block> blocks;
    blocks.push_back({w_in_, kWidth, f_in_});
    blocks.push_back({b_in_, kWidth, 0});
    for (int l = 0; l < kHiddenLayers; ++l) {
        blocks.push_back({w_h_[l], kWidth, kWidth});
        blocks.push_back({b_h_[l], kWidth, 0});
    }
    blocks.push_back({w_out_, f_out_, kWidth});
    blocks.push_back({b_out_, f_out_, 0});
    return blocks;
}

void Adam::step(std::vector<double>& theta, const std::vector<double>& grad) {
    if (theta.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("adam: size mismatch");
    for (double g : grad)
        if (!std::isfinite(g))
            throw std::runtime_error("adam: non-finite gradient; training diverged");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        double g = grad[i];
        if (!cfg_.decoupled_decay) g += cfg_.weight_decay * theta[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        if (cfg_.decoupled_decay) theta[i] -= cfg_.lr * cfg_.weight_decay * theta[i];
    }
}

}  // namespace cfn
