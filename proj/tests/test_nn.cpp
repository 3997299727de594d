#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "zrlab/nn.hpp"
#include "zrlab/rng.hpp"

using namespace zrlab;
using namespace zrlab::nn;

namespace {

// Flatten [B, C, T] row-major into softmax rows of width C*T.
template <typename S>
Tensor<S> flatten_rows(const Tensor<S>& x) {
    Tensor<S> out({x.dim(0), static_cast<int>(x.numel()) / x.dim(0)});
    out.data = x.data;
    return out;
}

template <typename S>
Tensor<S> unflatten_like(const Tensor<S>& grad, const Tensor<S>& like) {
    Tensor<S> out(like.shape);
    out.data = grad.data;
    return out;
}

std::vector<int> cycle_targets(int rows, int classes) {
    std::vector<int> t(static_cast<size_t>(rows));
    for (int i = 0; i < rows; ++i) t[static_cast<size_t>(i)] = i % classes;
    return t;
}

}  // namespace

TEST_CASE("init_uniform stays within +-1/sqrt(fan_in)") {
    Rng rng(1);
    Tensor<double> t({64, 32});
    init_uniform(t, 32, rng);
    const double bound = 1.0 / std::sqrt(32.0);
    double lo = 1e300, hi = -1e300;
    for (double v : t.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= -bound);
    CHECK(hi <= bound);
    CHECK(hi - lo > bound);  // actually spread out
}

TEST_CASE("softmax_xent gradient passes the central-difference check") {
    Rng rng(2);
    Tensor<double> logits({6, 9});
    init_uniform(logits, 3, rng);
    const auto targets = cycle_targets(6, 9);

    auto loss_fn = [&](bool with_grads) {
        auto [loss, grad] = softmax_xent(logits, targets);
        if (with_grads) {
            logits.ensure_grad();
            logits.zero_grad();
            for (size_t i = 0; i < grad.data.size(); ++i) logits.grad[i] = grad.data[i];
        }
        return loss;
    };
    Rng pick(3);
    const auto rep = grad_check(loss_fn, {&logits}, 1e-6, pick);
    CHECK(rep.checked > 0);
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("softmax_row sums to one and matches exp ratios") {
    Tensor<double> logits({2, 3});
    logits.data = {0.0, 1.0, 2.0, -1.0, -1.0, -1.0};
    const auto p = softmax_row(logits, 0);
    CHECK(p.size() == 3);
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[1] / p[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    const auto q = softmax_row(logits, 1);
    for (double v : q) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("linear layer gradients (weight, bias, input) < 1e-6") {
    Rng rng(4);
    Linear<double> lin(5, 7, rng);
    Tensor<double> x({4, 5});
    init_uniform(x, 2, rng);
    const auto targets = cycle_targets(4, 7);

    auto loss_fn = [&](bool with_grads) {
        auto y = lin.forward(x);
        auto [loss, grad] = softmax_xent(y, targets);
        if (with_grads) {
            lin.weight.ensure_grad();
            lin.bias.ensure_grad();
            lin.weight.zero_grad();
            lin.bias.zero_grad();
            auto gx = lin.backward(grad);
            x.ensure_grad();
            x.zero_grad();
            for (size_t i = 0; i < gx.data.size(); ++i) x.grad[i] = gx.data[i];
        }
        return loss;
    };
    Rng pick(5);
    const auto rep = grad_check(loss_fn, {&lin.weight, &lin.bias, &x}, 1e-6, pick);
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("linear with identity weight reproduces its input") {
    Rng rng(6);
    Linear<double> lin(3, 3, rng);
    lin.weight.data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    lin.bias.data = {0, 0, 0};
    Tensor<double> x({2, 3});
    x.data = {0.5, -1.5, 2.0, 3.0, 0.0, -0.25};
    const auto y = lin.forward(x);
    CHECK(y.data == x.data);
}

TEST_CASE("linear forward handles an empty batch") {
    Rng rng(7);
    Linear<double> lin(4, 2, rng);
    Tensor<double> x({0, 4});
    const auto y = lin.forward(x);
    CHECK(y.dim(0) == 0);
    CHECK(y.dim(1) == 2);
}

TEST_CASE("conv1d gradients (kernel, bias, input) < 1e-6") {
    Rng rng(8);
    Conv1d<double> conv(3, 4, 4, 2, 1, rng);
    Tensor<double> x({2, 3, 10});
    init_uniform(x, 2, rng);
    const int t_out = Conv1d<double>::out_len(10, 4, 2, 1);
    const auto targets = cycle_targets(2, 4 * t_out);

    auto loss_fn = [&](bool with_grads) {
        auto y = conv.forward(x);
        auto [loss, grad] = softmax_xent(flatten_rows(y), targets);
        if (with_grads) {
            conv.kernel.ensure_grad();
            conv.bias.ensure_grad();
            conv.kernel.zero_grad();
            conv.bias.zero_grad();
            auto gx = conv.backward(unflatten_like(grad, y));
            x.ensure_grad();
            x.zero_grad();
            for (size_t i = 0; i < gx.data.size(); ++i) x.grad[i] = gx.data[i];
        }
        return loss;
    };
    Rng pick(9);
    const auto rep = grad_check(loss_fn, {&conv.kernel, &conv.bias, &x}, 1e-6, pick);
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("conv1d output length formula") {
    CHECK(Conv1d<double>::out_len(10, 4, 2, 1) == 5);
    CHECK(Conv1d<double>::out_len(11, 4, 2, 1) == 5);
    CHECK(Conv1d<double>::out_len(7, 3, 1, 1) == 7);
}

TEST_CASE("embedding gradient (table) < 1e-6 and scatter-adds duplicates") {
    Rng rng(10);
    Embedding<double> emb(6, 5, rng);
    const std::vector<int> idx{0, 3, 3, 5};  // duplicate row on purpose
    const auto targets = cycle_targets(4, 5);

    auto loss_fn = [&](bool with_grads) {
        auto y = emb.forward(idx);
        auto [loss, grad] = softmax_xent(y, targets);
        if (with_grads) {
            emb.table.ensure_grad();
            emb.table.zero_grad();
            emb.backward(grad);
        }
        return loss;
    };
    Rng pick(11);
    const auto rep = grad_check(loss_fn, {&emb.table}, 1e-6, pick);
    CHECK(rep.max_rel_err < 1e-6);

    // Rows never selected receive zero gradient.
    loss_fn(true);
    for (int j = 0; j < 5; ++j) {
        CHECK(emb.table.grad[static_cast<size_t>(1) * 5 + j] == 0.0);
        CHECK(emb.table.grad[static_cast<size_t>(2) * 5 + j] == 0.0);
    }
}

TEST_CASE("layer norm gradients (gamma, beta, input) < 1e-6") {
    Rng rng(12);
    LayerNorm<double> ln(6);
    Tensor<double> x({5, 6});
    init_uniform(x, 1, rng);
    const auto targets = cycle_targets(5, 6);

    auto loss_fn = [&](bool with_grads) {
        auto y = ln.forward(x);
        auto [loss, grad] = softmax_xent(y, targets);
        if (with_grads) {
            ln.gamma.ensure_grad();
            ln.beta.ensure_grad();
            ln.gamma.zero_grad();
            ln.beta.zero_grad();
            auto gx = ln.backward(grad);
            x.ensure_grad();
            x.zero_grad();
            for (size_t i = 0; i < gx.data.size(); ++i) x.grad[i] = gx.data[i];
        }
        return loss;
    };
    Rng pick(13);
    const auto rep = grad_check(loss_fn, {&ln.gamma, &ln.beta, &x}, 1e-6, pick);
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("relu and its backward mask agree") {
    Tensor<double> x({1, 4});
    x.data = {-1.0, 0.0, 0.5, 2.0};
    const auto y = relu(x);
    CHECK(y.data == std::vector<double>{0.0, 0.0, 0.5, 2.0});
    Tensor<double> g({1, 4});
    g.data = {1.0, 1.0, 1.0, 1.0};
    const auto gx = relu_backward(x, g);
    CHECK(gx.data == std::vector<double>{0.0, 0.0, 1.0, 1.0});
}

TEST_CASE("5-step LSTM BPTT gradients < 1e-5") {
    Rng rng(14);
    Lstm<double> lstm(3, 4, rng);
    Tensor<double> x({2, 3, 5});
    init_uniform(x, 1, rng);
    const auto targets = cycle_targets(2, 4 * 5);

    auto loss_fn = [&](bool with_grads) {
        auto y = lstm.forward(x);  // [2, 4, 5]
        auto [loss, grad] = softmax_xent(flatten_rows(y), targets);
        if (with_grads) {
            ParamList<double> ps;
            lstm.params(ps, "lstm");
            for (auto& p : ps) {
                p.tensor->ensure_grad();
                p.tensor->zero_grad();
            }
            auto gx = lstm.backward(unflatten_like(grad, y));
            x.ensure_grad();
            x.zero_grad();
            for (size_t i = 0; i < gx.data.size(); ++i) x.grad[i] = gx.data[i];
        }
        return loss;
    };
    Rng pick(15);
    const auto rep =
        grad_check(loss_fn, {&lstm.cell.w_ih, &lstm.cell.w_hh, &lstm.cell.bias, &x}, 1e-6, pick);
    CHECK(rep.max_rel_err < 1e-5);
    CHECK(rep.checked > 0);
}

TEST_CASE("sgd_step applies w -= lr * g") {
    Tensor<double> w({1, 2});
    w.data = {1.0, -2.0};
    w.ensure_grad();
    w.grad = {0.5, 0.25};
    ParamList<double> ps{{"w", &w}};
    sgd_step(ps, 0.1);
    CHECK(w.data[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(w.data[1] == doctest::Approx(-2.025).epsilon(1e-15));
}

TEST_CASE("adam first step moves each coordinate by ~lr against the gradient sign") {
    Tensor<double> w({1, 3});
    w.data = {1.0, 1.0, 1.0};
    w.ensure_grad();
    w.grad = {0.2, -3.0, 1e-3};
    ParamList<double> ps{{"w", &w}};
    AdamState<double> st;
    st.init(ps);
    adam_step(ps, st, 0.01);
    // With bias correction the first update is lr * g/(|g| + eps') ~= lr*sign(g).
    CHECK(w.data[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-3));
    CHECK(w.data[1] == doctest::Approx(1.0 + 0.01).epsilon(1e-3));
    CHECK(w.data[2] == doctest::Approx(1.0 - 0.01).epsilon(1e-2));
    CHECK(st.step == 1);
}

TEST_CASE("clip_grad_norm returns the pre-clip norm and rescales only above the cap") {
    Tensor<double> w({1, 2});
    w.data = {0.0, 0.0};
    w.ensure_grad();
    w.grad = {3.0, 4.0};  // norm 5
    ParamList<double> ps{{"w", &w}};
    CHECK(clip_grad_norm(ps, 10.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(w.grad[0] == 3.0);  // untouched below the cap

    CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(w.grad[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(w.grad[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("zero_grads clears every tensor in the list") {
    Tensor<double> a({1, 2}), b({2, 1});
    a.ensure_grad();
    b.ensure_grad();
    a.grad = {1.0, 2.0};
    b.grad = {3.0, 4.0};
    zero_grads(ParamList<double>{{"a", &a}, {"b", &b}});
    CHECK(a.grad == std::vector<double>{0.0, 0.0});
    CHECK(b.grad == std::vector<double>{0.0, 0.0});
}
