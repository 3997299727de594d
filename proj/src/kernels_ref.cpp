#include "zrlab/kernels.hpp"

namespace zrlab {
namespace ref {

namespace {

template <typename S>
void matmul_nt_impl(const S* x, const S* w, const S* bias, S* y, int rows, int inner, int cols) {
    for (int b = 0; b < rows; ++b) {
        for (int o = 0; o < cols; ++o) {
            S acc = bias ? bias[o] : S(0);
            for (int i = 0; i < inner; ++i)
                acc += x[static_cast<std::size_t>(b) * inner + i] * w[static_cast<std::size_t>(o) * inner + i];
            y[static_cast<std::size_t>(b) * cols + o] = acc;
        }
    }
}

template <typename S>
void matmul_nn_impl(const S* g, const S* w, S* y, int rows, int inner, int cols) {
    for (int b = 0; b < rows; ++b) {
        for (int i = 0; i < cols; ++i) {
            S acc = S(0);
            for (int o = 0; o < inner; ++o)
                acc += g[static_cast<std::size_t>(b) * inner + o] * w[static_cast<std::size_t>(o) * cols + i];
            y[static_cast<std::size_t>(b) * cols + i] = acc;
        }
    }
}

template <typename S>
void matmul_tn_acc_impl(const S* g, const S* x, S* dw, int rows, int out_dim, int in_dim) {
    for (int o = 0; o < out_dim; ++o) {
        for (int i = 0; i < in_dim; ++i) {
            S acc = S(0);
            for (int b = 0; b < rows; ++b)
                acc += g[static_cast<std::size_t>(b) * out_dim + o] * x[static_cast<std::size_t>(b) * in_dim + i];
            dw[static_cast<std::size_t>(o) * in_dim + i] += acc;
        }
    }
}

}  // namespace

void matmul_nt(const float* x, const float* w, const float* bias, float* y, int rows, int inner, int cols) {
    matmul_nt_impl(x, w, bias, y, rows, inner, cols);
}
void matmul_nt(const double* x, const double* w, const double* bias, double* y, int rows, int inner, int cols) {
    matmul_nt_impl(x, w, bias, y, rows, inner, cols);
}
void matmul_nn(const float* g, const float* w, float* y, int rows, int inner, int cols) {
    matmul_nn_impl(g, w, y, rows, inner, cols);
}
void matmul_nn(const double* g, const double* w, double* y, int rows, int inner, int cols) {
    matmul_nn_impl(g, w, y, rows, inner, cols);
}
void matmul_tn_acc(const float* g, const float* x, float* dw, int rows, int out_dim, int in_dim) {
    matmul_tn_acc_impl(g, x, dw, rows, out_dim, in_dim);
}
void matmul_tn_acc(const double* g, const double* x, double* dw, int rows, int out_dim, int in_dim) {
    matmul_tn_acc_impl(g, x, dw, rows, out_dim, in_dim);
}

template <typename S>
void conv1d_forward(const S* x, const S* k, const S* bias, S* y, int batch, int c_in, int t_in, int c_out,
                    int ksize, int stride, int pad, int t_out) {
    for (int b = 0; b < batch; ++b)
        for (int co = 0; co < c_out; ++co)
            for (int t = 0; t < t_out; ++t) {
                S acc = bias ? bias[co] : S(0);
                for (int ci = 0; ci < c_in; ++ci)
                    for (int j = 0; j < ksize; ++j) {
                        const int src = t * stride + j - pad;
                        if (src >= 0 && src < t_in)
                            acc += k[(static_cast<std::size_t>(co) * c_in + ci) * ksize + j] *
                                   x[(static_cast<std::size_t>(b) * c_in + ci) * t_in + src];
                    }
                y[(static_cast<std::size_t>(b) * c_out + co) * t_out + t] = acc;
            }
}

template void conv1d_forward<float>(const float*, const float*, const float*, float*, int, int, int, int, int,
                                    int, int, int);
template void conv1d_forward<double>(const double*, const double*, const double*, double*, int, int, int, int,
                                     int, int, int, int);

}  // namespace ref
}  // namespace zrlab
