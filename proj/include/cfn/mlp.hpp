#pragma once

#include <cstddef>
#include <vector>

#include "cfn/rng.hpp"

namespace cfn {

/* Residual multilayer perceptron: input linear f_in->width, four hidden
 * rectified layers of `width` neurons with an identity skip added to the
 * output of every second hidden layer, output linear width->f_out.
 *
 *   x0 = Win x + bin
 *   h1 = relu(W1 x0 + b1)        h2 = relu(W2 h1 + b2) + x0
 *   h3 = relu(W3 h2 + b3)        h4 = relu(W4 h3 + b4) + h2
 *   out = Wout h4 + bout
 *
 * Parameters live in one flat vector (weights row-major [out][in], bias
 * after each weight block) so the optimizer and serializer treat the
 * network as a single parameter list. */
class ResMlp {
public:
    static constexpr int kWidth = 64;
    static constexpr int kHiddenLayers = 4;

    ResMlp() = default;
    ResMlp(int f_in, int f_out);

    int f_in() const { return f_in_; }
    int f_out() const { return f_out_; }
    std::size_t param_count() const { return theta_.size(); }
    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }

    /* Uniform fan-in init, bound sqrt(6 / fan_in), biases zero. */
    void init(Rng& rng);

    struct Tape {
        std::vector<double> x, x0, h1, r2, h2, h3, r4, h4;
    };

    /* out must hold f_out doubles.  tape may be null for inference. */
    void forward(const double* x, double* out, Tape* tape) const;

    /* Accumulates d(loss)/d(theta) into grad (size param_count) given the
     * upstream d(loss)/d(out); the tape must come from forward on the same
     * parameters. */
    void backward(const Tape& tape, const double* d_out, std::vector<double>& grad) const;

    /* Batched evaluation: x is batch rows of f_in, out batch rows of f_out.
     * Row b of the result equals forward() on row b exactly — the batched
     * kernels keep the per-element accumulation order of the scalar path —
     * so the two are interchangeable wherever results are compared. */
    struct BatchTape {
        int batch = 0;
        std::vector<double> x, x0, h1, r2, h2, h3, r4, h4;  // row-major [batch][dim]
    };
    void forward_batch(const double* x, int batch, double* out, BatchTape* tape) const;

    /* Accumulates the summed gradient over the batch into grad; equal to
     * calling backward() row by row in batch order. */
    void backward_batch(const BatchTape& tape, const double* d_out,
                        std::vector<double>& grad) const;

    // flat offsets of each block, in order: Win,bin,W1,b1,..,W4,b4,Wout,bout
    struct Block { std::size_t offset; int rows, cols; };  // cols==0 marks a bias
    std::vector<Block> layout() const;

private:
    int f_in_ = 0, f_out_ = 0;
    std::vector<double> theta_;

    // offsets into theta_
    std::size_t w_in_, b_in_, w_h_[kHiddenLayers], b_h_[kHiddenLayers], w_out_, b_out_;
    void compute_offsets();
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;  // L2, coupled (added to the gradient)
    bool decoupled_decay = false;
};

class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& theta, const std::vector<double>& grad);

    const AdamConfig& config() const { return cfg_; }
    std::int64_t t() const { return t_; }
    const std::vector<double>& m() const { return m_; }
    const std::vector<double>& v() const { return v_; }
    void restore(std::int64_t t, std::vector<double> m, std::vector<double> v) {
        t_ = t; m_ = std::move(m); v_ = std::move(v);
    }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace cfn
