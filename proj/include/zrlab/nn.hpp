#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "zrlab/rng.hpp"
#include "zrlab/tensor.hpp"

namespace zrlab {
namespace nn {

// Named parameter handle, used for optimizer state and checkpoints.
template <typename S>
struct Param {
    std::string name;
    Tensor<S>* tensor;
};

template <typename S>
using ParamList = std::vector<Param<S>>;

// Uniform +-1/sqrt(fan_in), seeded.
template <typename S>
void init_uniform(Tensor<S>& t, int fan_in, Rng& rng);

// ---------------------------------------------------------------- layers
// Each layer caches what its backward needs; backward consumes the cache of
// the immediately preceding forward and accumulates parameter gradients.

template <typename S>
struct Linear {
    Tensor<S> weight;  // [out, in]
    Tensor<S> bias;    // [out]
    Tensor<S> x_cache;

    Linear() = default;
    Linear(int in_dim, int out_dim, Rng& rng);

    Tensor<S> forward(const Tensor<S>& x);          // [B, in] -> [B, out]
    Tensor<S> backward(const Tensor<S>& grad_out);  // returns grad wrt x
    void params(ParamList<S>& out, const std::string& prefix);
    int in_dim() const { return weight.dim(1); }
    int out_dim() const { return weight.dim(0); }
};

template <typename S>
struct Conv1d {
    Tensor<S> kernel;  // [c_out, c_in, k]
    Tensor<S> bias;    // [c_out]
    int stride = 1;
    int pad = 0;
    Tensor<S> x_cache;

    Conv1d() = default;
    Conv1d(int c_in, int c_out, int ksize, int stride, int pad, Rng& rng);

    static int out_len(int t_in, int ksize, int stride, int pad);
    Tensor<S> forward(const Tensor<S>& x);          // [B, c_in, T] -> [B, c_out, T']
    Tensor<S> backward(const Tensor<S>& grad_out);  // grad wrt x
    void params(ParamList<S>& out, const std::string& prefix);
};

template <typename S>
struct LstmState {
    Tensor<S> h;  // [B, H]
    Tensor<S> c;  // [B, H]
};

template <typename S>
struct LstmStepCache {
    Tensor<S> x, h_prev, c_prev;
    Tensor<S> gates;  // [B, 4H] post-activation: i, f, g, o
    Tensor<S> c, tanh_c;
};

// Single cell with standard i,f,g,o gates: c = f.c_prev + i.g, h = o.tanh(c).
template <typename S>
struct LstmCell {
    Tensor<S> w_ih;  // [4H, in]
    Tensor<S> w_hh;  // [4H, H]
    Tensor<S> bias;  // [4H]

    LstmCell() = default;
    LstmCell(int in_dim, int hidden, Rng& rng);

    int hidden() const { return w_hh.dim(1); }
    int input_dim() const { return w_ih.dim(1); }

    LstmState<S> forward(const Tensor<S>& x, const LstmState<S>& prev, LstmStepCache<S>& cache);
    // Returns grads wrt (x, h_prev, c_prev) given grads wrt (h, c).
    void backward(const LstmStepCache<S>& cache, const Tensor<S>& grad_h, const Tensor<S>& grad_c,
                  Tensor<S>& grad_x, Tensor<S>& grad_h_prev, Tensor<S>& grad_c_prev);
    void params(ParamList<S>& out, const std::string& prefix);
};

// Unrolled sequence wrapper: [B, in, T] -> [B, H, T] from zero initial state.
template <typename S>
struct Lstm {
    LstmCell<S> cell;
    std::vector<LstmStepCache<S>> caches;

    Lstm() = default;
    Lstm(int in_dim, int hidden, Rng& rng) : cell(in_dim, hidden, rng) {}

    Tensor<S> forward(const Tensor<S>& x);
    Tensor<S> backward(const Tensor<S>& grad_out);
    void params(ParamList<S>& out, const std::string& prefix) { cell.params(out, prefix); }
};

template <typename S>
struct Embedding {
    Tensor<S> table;  // [V, d]
    std::vector<int> idx_cache;

    Embedding() = default;
    Embedding(int vocab, int dim, Rng& rng);

    Tensor<S> forward(const std::vector<int>& indices);  // [N, d]
    void backward(const Tensor<S>& grad_out);            // scatter-add into table.grad
    void params(ParamList<S>& out, const std::string& prefix);
    int vocab() const { return table.dim(0); }
    int dim() const { return table.dim(1); }
};

// Channel-wise layer normalization over the last dimension of [N, d].
template <typename S>
struct LayerNorm {
    Tensor<S> gamma;  // [d]
    Tensor<S> beta;   // [d]
    S eps = S(1e-5);
    Tensor<S> x_cache;
    std::vector<S> mean_cache, inv_std_cache;

    LayerNorm() = default;
    explicit LayerNorm(int dim);

    Tensor<S> forward(const Tensor<S>& x);
    Tensor<S> backward(const Tensor<S>& grad_out);
    void params(ParamList<S>& out, const std::string& prefix);
};

// ---------------------------------------------------------------- ops

template <typename S>
Tensor<S> relu(const Tensor<S>& x);
template <typename S>
Tensor<S> relu_backward(const Tensor<S>& x, const Tensor<S>& grad_out);

// Numerically stable mean cross-entropy over [B, N] logits. grad is wrt the
// logits and already includes the 1/B factor.
template <typename S>
std::pair<double, Tensor<S>> softmax_xent(const Tensor<S>& logits, const std::vector<int>& targets);

template <typename S>
std::vector<double> softmax_row(const Tensor<S>& logits, int row);

// ---------------------------------------------------------------- optimizer

template <typename S>
struct AdamState {
    std::vector<std::vector<S>> m, v;
    std::int64_t step = 0;

    void init(const ParamList<S>& params);
};

template <typename S>
void adam_step(const ParamList<S>& params, AdamState<S>& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

template <typename S>
void sgd_step(const ParamList<S>& params, double lr);

// Global-norm clipping; returns the pre-clip norm.
template <typename S>
double clip_grad_norm(const ParamList<S>& params, double max_norm);

template <typename S>
void zero_grads(const ParamList<S>& params);

// ---------------------------------------------------------------- checks

// Central-difference check of every coordinate of the given tensors (random
// subsample above max_coords per tensor). loss_fn(true) must run
// forward+backward and populate .grad; loss_fn(false) evaluates the loss
// only. Double precision.
struct GradCheckReport {
    double max_rel_err = 0.0;
    long checked = 0;
};

GradCheckReport grad_check(const std::function<double(bool)>& loss_fn, std::vector<Tensor<double>*> tensors,
                           double eps, Rng& rng, int max_coords = 200);

}  // namespace nn
}  // namespace zrlab
