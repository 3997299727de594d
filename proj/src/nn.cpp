#include "zrlab/nn.hpp"

#include <algorithm>
#include <cmath>

#include "zrlab/kernels.hpp"
#include "zrlab/util.hpp"

namespace zrlab {
namespace nn {

namespace {

template <typename S>
S sigmoid(S x) {
    if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
    const S e = std::exp(x);
    return e / (S(1) + e);
}

void require(bool cond, const char* msg) {
    if (!cond) throw NumericError(msg);
}

}  // namespace

template <typename S>
void init_uniform(Tensor<S>& t, int fan_in, Rng& rng) {
    const double bound = fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 1.0;
    for (auto& v : t.data) v = static_cast<S>(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------- Linear

template <typename S>
Linear<S>::Linear(int in_dim, int out_dim, Rng& rng) : weight({out_dim, in_dim}), bias({out_dim}) {
    init_uniform(weight, in_dim, rng);
    init_uniform(bias, in_dim, rng);
}

template <typename S>
Tensor<S> Linear<S>::forward(const Tensor<S>& x) {
    require(x.shape.size() == 2 && x.dim(1) == weight.dim(1), "linear: shape mismatch");
    x_cache = x;
    Tensor<S> y({x.dim(0), weight.dim(0)});
    kernels::matmul_nt(x.data.data(), weight.data.data(), bias.data.data(), y.data.data(), x.dim(0),
                       weight.dim(1), weight.dim(0));
    return y;
}

template <typename S>
Tensor<S> Linear<S>::backward(const Tensor<S>& grad_out) {
    require(grad_out.shape.size() == 2 && grad_out.dim(1) == weight.dim(0), "linear backward: shape mismatch");
    require(grad_out.dim(0) == x_cache.dim(0), "linear backward: stale cache");
    weight.ensure_grad();
    bias.ensure_grad();

    const int batch = grad_out.dim(0);
    const int out_d = weight.dim(0);
    const int in_d = weight.dim(1);

    kernels::matmul_tn_acc(grad_out.data.data(), x_cache.data.data(), weight.grad.data(), batch, out_d, in_d);
    for (int b = 0; b < batch; ++b)
        for (int o = 0; o < out_d; ++o) bias.grad[o] += grad_out.data[static_cast<std::size_t>(b) * out_d + o];

    Tensor<S> gx({batch, in_d});
    kernels::matmul_nn(grad_out.data.data(), weight.data.data(), gx.data.data(), batch, out_d, in_d);
    return gx;
}

template <typename S>
void Linear<S>::params(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
}

// ---------------------------------------------------------------- Conv1d

template <typename S>
Conv1d<S>::Conv1d(int c_in, int c_out, int ksize, int stride_, int pad_, Rng& rng)
    : kernel({c_out, c_in, ksize}), bias({c_out}), stride(stride_), pad(pad_) {
    init_uniform(kernel, c_in * ksize, rng);
    init_uniform(bias, c_in * ksize, rng);
}

template <typename S>
int Conv1d<S>::out_len(int t_in, int ksize, int stride, int pad) {
    const int span = t_in + 2 * pad - ksize;
    if (span < 0) throw NumericError("conv1d: input shorter than kernel");
    return span / stride + 1;
}

template <typename S>
Tensor<S> Conv1d<S>::forward(const Tensor<S>& x) {
    require(x.shape.size() == 3 && x.dim(1) == kernel.dim(1), "conv1d: shape mismatch");
    x_cache = x;
    const int t_out = out_len(x.dim(2), kernel.dim(2), stride, pad);
    Tensor<S> y({x.dim(0), kernel.dim(0), t_out});
    kernels::conv1d_forward(x.data.data(), kernel.data.data(), bias.data.data(), y.data.data(), x.dim(0),
                            x.dim(1), x.dim(2), kernel.dim(0), kernel.dim(2), stride, pad, t_out);
    return y;
}

template <typename S>
Tensor<S> Conv1d<S>::backward(const Tensor<S>& grad_out) {
    require(grad_out.shape.size() == 3 && grad_out.dim(1) == kernel.dim(0), "conv1d backward: shape mismatch");
    kernel.ensure_grad();
    bias.ensure_grad();

    const int batch = x_cache.dim(0);
    const int t_in = x_cache.dim(2);
    const int t_out = grad_out.dim(2);

    kernels::conv1d_backward_kernel(grad_out.data.data(), x_cache.data.data(), kernel.grad.data(),
                                    bias.grad.data(), batch, kernel.dim(1), t_in, kernel.dim(0), kernel.dim(2),
                                    stride, pad, t_out);
    Tensor<S> gx({batch, kernel.dim(1), t_in});
    kernels::conv1d_backward_data(grad_out.data.data(), kernel.data.data(), gx.data.data(), batch,
                                  kernel.dim(1), t_in, kernel.dim(0), kernel.dim(2), stride, pad, t_out);
    return gx;
}

template <typename S>
void Conv1d<S>::params(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".kernel", &kernel});
    out.push_back({prefix + ".bias", &bias});
}

// ---------------------------------------------------------------- LSTM

template <typename S>
LstmCell<S>::LstmCell(int in_dim, int hidden, Rng& rng)
    : w_ih({4 * hidden, in_dim}), w_hh({4 * hidden, hidden}), bias({4 * hidden}) {
    init_uniform(w_ih, in_dim, rng);
    init_uniform(w_hh, hidden, rng);
    init_uniform(bias, hidden, rng);
}

template <typename S>
LstmState<S> LstmCell<S>::forward(const Tensor<S>& x, const LstmState<S>& prev, LstmStepCache<S>& cache) {
    const int B = x.dim(0);
    const int H = hidden();
    require(x.dim(1) == input_dim(), "lstm: input dim mismatch");
    require(prev.h.dim(0) == B && prev.h.dim(1) == H, "lstm: state shape mismatch");

    Tensor<S> pre({B, 4 * H});
    kernels::matmul_nt(x.data.data(), w_ih.data.data(), bias.data.data(), pre.data.data(), B, input_dim(),
                       4 * H);
    Tensor<S> rec({B, 4 * H});
    kernels::matmul_nt(prev.h.data.data(), w_hh.data.data(), nullptr, rec.data.data(), B, H, 4 * H);
    for (std::size_t i = 0; i < pre.data.size(); ++i) pre.data[i] += rec.data[i];

    cache.x = x;
    cache.h_prev = prev.h;
    cache.c_prev = prev.c;
    cache.gates = Tensor<S>({B, 4 * H});
    cache.c = Tensor<S>({B, H});
    cache.tanh_c = Tensor<S>({B, H});

    LstmState<S> out{Tensor<S>({B, H}), Tensor<S>({B, H})};
    for (int b = 0; b < B; ++b) {
        for (int j = 0; j < H; ++j) {
            const std::size_t base = static_cast<std::size_t>(b) * 4 * H;
            const S i_g = sigmoid(pre.data[base + j]);
            const S f_g = sigmoid(pre.data[base + H + j]);
            const S g_g = std::tanh(pre.data[base + 2 * H + j]);
            const S o_g = sigmoid(pre.data[base + 3 * H + j]);
            cache.gates.data[base + j] = i_g;
            cache.gates.data[base + H + j] = f_g;
            cache.gates.data[base + 2 * H + j] = g_g;
            cache.gates.data[base + 3 * H + j] = o_g;

            const S c_new = f_g * prev.c.data[static_cast<std::size_t>(b) * H + j] + i_g * g_g;
            const S t = std::tanh(c_new);
            cache.c.data[static_cast<std::size_t>(b) * H + j] = c_new;
            cache.tanh_c.data[static_cast<std::size_t>(b) * H + j] = t;
            out.c.data[static_cast<std::size_t>(b) * H + j] = c_new;
            out.h.data[static_cast<std::size_t>(b) * H + j] = o_g * t;
        }
    }
    return out;
}

template <typename S>
void LstmCell<S>::backward(const LstmStepCache<S>& cache, const Tensor<S>& grad_h, const Tensor<S>& grad_c,
                           Tensor<S>& grad_x, Tensor<S>& grad_h_prev, Tensor<S>& grad_c_prev) {
    const int B = cache.x.dim(0);
    const int H = hidden();
    w_ih.ensure_grad();
    w_hh.ensure_grad();
    bias.ensure_grad();

    Tensor<S> grad_pre({B, 4 * H});
    grad_c_prev = Tensor<S>({B, H});

    for (int b = 0; b < B; ++b) {
        const std::size_t gb = static_cast<std::size_t>(b) * 4 * H;
        const std::size_t hb = static_cast<std::size_t>(b) * H;
        for (int j = 0; j < H; ++j) {
            const S i_g = cache.gates.data[gb + j];
            const S f_g = cache.gates.data[gb + H + j];
            const S g_g = cache.gates.data[gb + 2 * H + j];
            const S o_g = cache.gates.data[gb + 3 * H + j];
            const S t = cache.tanh_c.data[hb + j];

            const S gh = grad_h.data[hb + j];
            // dL/dc flows both from the next step and through h = o.tanh(c).
            const S gc = grad_c.data[hb + j] + gh * o_g * (S(1) - t * t);

            grad_pre.data[gb + j] = gc * g_g * i_g * (S(1) - i_g);
            grad_pre.data[gb + H + j] = gc * cache.c_prev.data[hb + j] * f_g * (S(1) - f_g);
            grad_pre.data[gb + 2 * H + j] = gc * i_g * (S(1) - g_g * g_g);
            grad_pre.data[gb + 3 * H + j] = gh * t * o_g * (S(1) - o_g);
            grad_c_prev.data[hb + j] = gc * f_g;
        }
    }

    kernels::matmul_tn_acc(grad_pre.data.data(), cache.x.data.data(), w_ih.grad.data(), B, 4 * H, input_dim());
    kernels::matmul_tn_acc(grad_pre.data.data(), cache.h_prev.data.data(), w_hh.grad.data(), B, 4 * H, H);
    for (int b = 0; b < B; ++b)
        for (int j = 0; j < 4 * H; ++j) bias.grad[j] += grad_pre.data[static_cast<std::size_t>(b) * 4 * H + j];

    grad_x = Tensor<S>({B, input_dim()});
    kernels::matmul_nn(grad_pre.data.data(), w_ih.data.data(), grad_x.data.data(), B, 4 * H, input_dim());
    grad_h_prev = Tensor<S>({B, H});
    kernels::matmul_nn(grad_pre.data.data(), w_hh.data.data(), grad_h_prev.data.data(), B, 4 * H, H);
}

template <typename S>
void LstmCell<S>::params(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".w_ih", &w_ih});
    out.push_back({prefix + ".w_hh", &w_hh});
    out.push_back({prefix + ".bias", &bias});
}

template <typename S>
Tensor<S> Lstm<S>::forward(const Tensor<S>& x) {
    require(x.shape.size() == 3 && x.dim(1) == cell.input_dim(), "lstm: expect [B, in, T]");
    const int B = x.dim(0), T = x.dim(2), H = cell.hidden();
    caches.assign(static_cast<std::size_t>(T), LstmStepCache<S>{});

    LstmState<S> state{Tensor<S>({B, H}), Tensor<S>({B, H})};
    Tensor<S> out({B, H, T});
    Tensor<S> xt({B, cell.input_dim()});
    for (int t = 0; t < T; ++t) {
        for (int b = 0; b < B; ++b)
            for (int i = 0; i < cell.input_dim(); ++i)
                xt.data[static_cast<std::size_t>(b) * cell.input_dim() + i] =
                    x.data[(static_cast<std::size_t>(b) * x.dim(1) + i) * T + t];
        state = cell.forward(xt, state, caches[static_cast<std::size_t>(t)]);
        for (int b = 0; b < B; ++b)
            for (int j = 0; j < H; ++j)
                out.data[(static_cast<std::size_t>(b) * H + j) * T + t] =
                    state.h.data[static_cast<std::size_t>(b) * H + j];
    }
    return out;
}

template <typename S>
Tensor<S> Lstm<S>::backward(const Tensor<S>& grad_out) {
    const int B = grad_out.dim(0), H = cell.hidden(), T = grad_out.dim(2);
    require(static_cast<std::size_t>(T) == caches.size(), "lstm backward: stale cache");

    Tensor<S> gx({B, cell.input_dim(), T});
    Tensor<S> grad_h({B, H}), grad_c({B, H});
    for (int t = T - 1; t >= 0; --t) {
        for (int b = 0; b < B; ++b)
            for (int j = 0; j < H; ++j)
                grad_h.data[static_cast<std::size_t>(b) * H + j] +=
                    grad_out.data[(static_cast<std::size_t>(b) * H + j) * T + t];

        Tensor<S> gxt, gh_prev, gc_prev;
        cell.backward(caches[static_cast<std::size_t>(t)], grad_h, grad_c, gxt, gh_prev, gc_prev);
        for (int b = 0; b < B; ++b)
            for (int i = 0; i < cell.input_dim(); ++i)
                gx.data[(static_cast<std::size_t>(b) * cell.input_dim() + i) * T + t] =
                    gxt.data[static_cast<std::size_t>(b) * cell.input_dim() + i];
        grad_h = std::move(gh_prev);
        grad_c = std::move(gc_prev);
    }
    return gx;
}

// ---------------------------------------------------------------- Embedding

template <typename S>
Embedding<S>::Embedding(int vocab_size, int dim_, Rng& rng) : table({vocab_size, dim_}) {
    init_uniform(table, dim_, rng);
}

template <typename S>
Tensor<S> Embedding<S>::forward(const std::vector<int>& indices) {
    const int V = table.dim(0), d = table.dim(1);
    Tensor<S> out({static_cast<int>(indices.size()), d});
    for (std::size_t n = 0; n < indices.size(); ++n) {
        const int idx = indices[n];
        if (idx < 0 || idx >= V) throw NumericError("embedding: index out of range");
        std::copy_n(table.data.begin() + static_cast<std::size_t>(idx) * d, d, out.data.begin() + n * d);
    }
    idx_cache = indices;
    return out;
}

template <typename S>
void Embedding<S>::backward(const Tensor<S>& grad_out) {
    require(grad_out.dim(0) == static_cast<int>(idx_cache.size()), "embedding backward: stale cache");
    table.ensure_grad();
    const int d = table.dim(1);
    for (std::size_t n = 0; n < idx_cache.size(); ++n) {
        S* dst = table.grad.data() + static_cast<std::size_t>(idx_cache[n]) * d;
        const S* src = grad_out.data.data() + n * d;
        for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
}

template <typename S>
void Embedding<S>::params(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".table", &table});
}

// ---------------------------------------------------------------- LayerNorm

template <typename S>
LayerNorm<S>::LayerNorm(int dim) : gamma({dim}), beta({dim}) {
    std::fill(gamma.data.begin(), gamma.data.end(), S(1));
}

template <typename S>
Tensor<S> LayerNorm<S>::forward(const Tensor<S>& x) {
    require(x.shape.size() == 2 && x.dim(1) == gamma.dim(0), "layernorm: shape mismatch");
    const int N = x.dim(0), d = x.dim(1);
    x_cache = x;
    mean_cache.assign(static_cast<std::size_t>(N), S(0));
    inv_std_cache.assign(static_cast<std::size_t>(N), S(0));

    Tensor<S> y({N, d});
    for (int n = 0; n < N; ++n) {
        const S* row = x.data.data() + static_cast<std::size_t>(n) * d;
        S mean = S(0);
        for (int j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<S>(d);
        S var = S(0);
        for (int j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<S>(d);
        const S inv_std = S(1) / std::sqrt(var + eps);
        mean_cache[static_cast<std::size_t>(n)] = mean;
        inv_std_cache[static_cast<std::size_t>(n)] = inv_std;
        for (int j = 0; j < d; ++j)
            y.data[static_cast<std::size_t>(n) * d + j] = (row[j] - mean) * inv_std * gamma.data[j] + beta.data[j];
    }
    return y;
}

template <typename S>
Tensor<S> LayerNorm<S>::backward(const Tensor<S>& grad_out) {
    const int N = x_cache.dim(0), d = x_cache.dim(1);
    gamma.ensure_grad();
    beta.ensure_grad();
    Tensor<S> gx({N, d});

    for (int n = 0; n < N; ++n) {
        const S* row = x_cache.data.data() + static_cast<std::size_t>(n) * d;
        const S* g = grad_out.data.data() + static_cast<std::size_t>(n) * d;
        const S mean = mean_cache[static_cast<std::size_t>(n)];
        const S inv_std = inv_std_cache[static_cast<std::size_t>(n)];

        S sum_gy = S(0), sum_gy_xhat = S(0);
        for (int j = 0; j < d; ++j) {
            const S xhat = (row[j] - mean) * inv_std;
            const S gy = g[j] * gamma.data[j];
            sum_gy += gy;
            sum_gy_xhat += gy * xhat;
            gamma.grad[j] += g[j] * xhat;
            beta.grad[j] += g[j];
        }
        for (int j = 0; j < d; ++j) {
            const S xhat = (row[j] - mean) * inv_std;
            const S gy = g[j] * gamma.data[j];
            gx.data[static_cast<std::size_t>(n) * d + j] =
                inv_std * (gy - sum_gy / static_cast<S>(d) - xhat * sum_gy_xhat / static_cast<S>(d));
        }
    }
    return gx;
}

template <typename S>
void LayerNorm<S>::params(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma});
    out.push_back({prefix + ".beta", &beta});
}

// ---------------------------------------------------------------- ops

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
    Tensor<S> y = x;
    for (auto& v : y.data) v = v > S(0) ? v : S(0);
    return y;
}

template <typename S>
Tensor<S> relu_backward(const Tensor<S>& x, const Tensor<S>& grad_out) {
    Tensor<S> gx = grad_out;
    for (std::size_t i = 0; i < gx.data.size(); ++i)
        if (x.data[i] <= S(0)) gx.data[i] = S(0);
    return gx;
}

template <typename S>
std::pair<double, Tensor<S>> softmax_xent(const Tensor<S>& logits, const std::vector<int>& targets) {
    require(logits.shape.size() == 2, "softmax_xent: expect [B, N]");
    const int B = logits.dim(0), N = logits.dim(1);
    require(static_cast<int>(targets.size()) == B, "softmax_xent: target count mismatch");

    Tensor<S> grad({B, N});
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
        const S* row = logits.data.data() + static_cast<std::size_t>(b) * N;
        require(targets[b] >= 0 && targets[b] < N, "softmax_xent: target out of range");
        S mx = row[0];
        for (int j = 1; j < N; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < N; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
        const double log_z = std::log(sum) + static_cast<double>(mx);
        loss += log_z - static_cast<double>(row[targets[b]]);
        for (int j = 0; j < N; ++j) {
            const double p = std::exp(static_cast<double>(row[j]) - log_z);
            grad.data[static_cast<std::size_t>(b) * N + j] =
                static_cast<S>((p - (j == targets[b] ? 1.0 : 0.0)) / static_cast<double>(B));
        }
    }
    return {loss / static_cast<double>(B), std::move(grad)};
}

template <typename S>
std::vector<double> softmax_row(const Tensor<S>& logits, int row) {
    const int N = logits.dim(1);
    const S* r = logits.data.data() + static_cast<std::size_t>(row) * N;
    S mx = r[0];
    for (int j = 1; j < N; ++j) mx = std::max(mx, r[j]);
    double sum = 0.0;
    std::vector<double> p(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        p[j] = std::exp(static_cast<double>(r[j] - mx));
        sum += p[j];
    }
    for (auto& v : p) v /= sum;
    return p;
}

// ---------------------------------------------------------------- optimizer

template <typename S>
void AdamState<S>::init(const ParamList<S>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.tensor->numel(), S(0));
        v.emplace_back(p.tensor->numel(), S(0));
    }
    step = 0;
}

template <typename S>
void adam_step(const ParamList<S>& params, AdamState<S>& state, double lr, double beta1, double beta2,
               double eps) {
    require(state.m.size() == params.size(), "adam: state not initialized for this parameter list");
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor<S>& t = *params[p].tensor;
        if (t.grad.empty()) continue;
        auto& m = state.m[p];
        auto& v = state.v[p];
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            const double g = static_cast<double>(t.grad[i]);
            if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in " + params[p].name);
            const double mn = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
            const double vn = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
            m[i] = static_cast<S>(mn);
            v[i] = static_cast<S>(vn);
            const double update = lr * (mn / bc1) / (std::sqrt(vn / bc2) + eps);
            t.data[i] = static_cast<S>(static_cast<double>(t.data[i]) - update);
        }
    }
}

template <typename S>
void sgd_step(const ParamList<S>& params, double lr) {
    for (const auto& p : params) {
        Tensor<S>& t = *p.tensor;
        if (t.grad.empty()) continue;
        for (std::size_t i = 0; i < t.data.size(); ++i)
            t.data[i] = static_cast<S>(static_cast<double>(t.data[i]) - lr * static_cast<double>(t.grad[i]));
    }
}

template <typename S>
double clip_grad_norm(const ParamList<S>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        for (const auto& g : p.tensor->grad) sq += static_cast<double>(g) * static_cast<double>(g);
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (const auto& p : params)
            for (auto& g : p.tensor->grad) g = static_cast<S>(static_cast<double>(g) * scale);
    }
    return norm;
}

template <typename S>
void zero_grads(const ParamList<S>& params) {
    for (const auto& p : params) {
        p.tensor->ensure_grad();
        p.tensor->zero_grad();
    }
}

// ---------------------------------------------------------------- checks

GradCheckReport grad_check(const std::function<double(bool)>& loss_fn, std::vector<Tensor<double>*> tensors,
                           double eps, Rng& rng, int max_coords) {
    loss_fn(true);  // populate analytic grads

    GradCheckReport report;
    for (Tensor<double>* t : tensors) {
        if (t->grad.size() != t->data.size()) throw NumericError("grad_check: tensor has no gradient");
        std::vector<std::size_t> coords;
        if (static_cast<int>(t->numel()) <= max_coords) {
            coords.resize(t->numel());
            for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        } else {
            coords.reserve(static_cast<std::size_t>(max_coords));
            for (int i = 0; i < max_coords; ++i) coords.push_back(rng.below(t->numel()));
        }

        for (std::size_t i : coords) {
            const double saved = t->data[i];
            t->data[i] = saved + eps;
            const double lp = loss_fn(false);
            t->data[i] = saved - eps;
            const double lm = loss_fn(false);
            t->data[i] = saved;

            const double fd = (lp - lm) / (2.0 * eps);
            const double an = t->grad[i];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.checked;
        }
    }
    return report;
}

// ---------------------------------------------------------------- instantiations

#define ZRLAB_NN_INSTANTIATE(S)                                                                      \
    template void init_uniform<S>(Tensor<S>&, int, Rng&);                                            \
    template struct Linear<S>;                                                                       \
    template struct Conv1d<S>;                                                                       \
    template struct LstmCell<S>;                                                                     \
    template struct Lstm<S>;                                                                         \
    template struct Embedding<S>;                                                                    \
    template struct LayerNorm<S>;                                                                    \
    template Tensor<S> relu<S>(const Tensor<S>&);                                                    \
    template Tensor<S> relu_backward<S>(const Tensor<S>&, const Tensor<S>&);                         \
    template std::pair<double, Tensor<S>> softmax_xent<S>(const Tensor<S>&, const std::vector<int>&); \
    template std::vector<double> softmax_row<S>(const Tensor<S>&, int);                              \
    template struct AdamState<S>;                                                                    \
    template void adam_step<S>(const ParamList<S>&, AdamState<S>&, double, double, double, double);  \
    template void sgd_step<S>(const ParamList<S>&, double);                                          \
    template double clip_grad_norm<S>(const ParamList<S>&, double);                                  \
    template void zero_grads<S>(const ParamList<S>&);

ZRLAB_NN_INSTANTIATE(float)
ZRLAB_NN_INSTANTIATE(double)

}  // namespace nn
}  // namespace zrlab
