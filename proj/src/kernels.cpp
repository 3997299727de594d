#include "zrlab/kernels.hpp"

#include <atomic>

namespace zrlab {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }
int num_threads() { return g_threads.load(); }

namespace kernels {

namespace {

template <typename S>
void matmul_nt_impl(const S* x, const S* w, const S* bias, S* y, int rows, int inner, int cols) {
#pragma omp parallel for schedule(static) num_threads(num_threads()) collapse(2)
    for (int b = 0; b < rows; ++b) {
        for (int o = 0; o < cols; ++o) {
            S acc = bias ? bias[o] : S(0);
            const S* xr = x + static_cast<std::size_t>(b) * inner;
            const S* wr = w + static_cast<std::size_t>(o) * inner;
            for (int i = 0; i < inner; ++i) acc += xr[i] * wr[i];
            y[static_cast<std::size_t>(b) * cols + o] = acc;
        }
    }
}

template <typename S>
void matmul_nn_impl(const S* g, const S* w, S* y, int rows, int inner, int cols) {
    // y[b,i] = sum_o g[b,o] * w[o,i]; inner = out_dim, cols = in_dim
#pragma omp parallel for schedule(static) num_threads(num_threads()) collapse(2)
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
#pragma omp parallel for schedule(static) num_threads(num_threads()) collapse(2)
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
#pragma omp parallel for schedule(static) num_threads(num_threads()) collapse(2)
    for (int b = 0; b < batch; ++b) {
        for (int co = 0; co < c_out; ++co) {
            S* yrow = y + (static_cast<std::size_t>(b) * c_out + co) * t_out;
            for (int t = 0; t < t_out; ++t) {
                S acc = bias ? bias[co] : S(0);
                for (int ci = 0; ci < c_in; ++ci) {
                    const S* xrow = x + (static_cast<std::size_t>(b) * c_in + ci) * t_in;
                    const S* krow = k + (static_cast<std::size_t>(co) * c_in + ci) * ksize;
                    for (int j = 0; j < ksize; ++j) {
                        const int src = t * stride + j - pad;
                        if (src >= 0 && src < t_in) acc += krow[j] * xrow[src];
                    }
                }
                yrow[t] = acc;
            }
        }
    }
}

template <typename S>
void conv1d_backward_data(const S* g, const S* k, S* dx, int batch, int c_in, int t_in, int c_out, int ksize,
                          int stride, int pad, int t_out) {
#pragma omp parallel for schedule(static) num_threads(num_threads()) collapse(2)
    for (int b = 0; b < batch; ++b) {
        for (int ci = 0; ci < c_in; ++ci) {
            S* dxrow = dx + (static_cast<std::size_t>(b) * c_in + ci) * t_in;
            for (int src = 0; src < t_in; ++src) {
                S acc = S(0);
                for (int co = 0; co < c_out; ++co) {
                    const S* grow = g + (static_cast<std::size_t>(b) * c_out + co) * t_out;
                    const S* krow = k + (static_cast<std::size_t>(co) * c_in + ci) * ksize;
                    for (int j = 0; j < ksize; ++j) {
                        const int num = src + pad - j;
                        if (num < 0 || num % stride != 0) continue;
                        const int t = num / stride;
                        if (t < t_out) acc += krow[j] * grow[t];
                    }
                }
                dxrow[src] += acc;
            }
        }
    }
}

template <typename S>
void conv1d_backward_kernel(const S* g, const S* x, S* dk, S* dbias, int batch, int c_in, int t_in, int c_out,
                            int ksize, int stride, int pad, int t_out) {
#pragma omp parallel for schedule(static) num_threads(num_threads()) collapse(2)
    for (int co = 0; co < c_out; ++co) {
        for (int ci = 0; ci < c_in; ++ci) {
            S* dkrow = dk + (static_cast<std::size_t>(co) * c_in + ci) * ksize;
            for (int j = 0; j < ksize; ++j) {
                S acc = S(0);
                for (int b = 0; b < batch; ++b) {
                    const S* grow = g + (static_cast<std::size_t>(b) * c_out + co) * t_out;
                    const S* xrow = x + (static_cast<std::size_t>(b) * c_in + ci) * t_in;
                    for (int t = 0; t < t_out; ++t) {
                        const int src = t * stride + j - pad;
                        if (src >= 0 && src < t_in) acc += grow[t] * xrow[src];
                    }
                }
                dkrow[j] += acc;
            }
        }
    }
    if (dbias) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
        for (int co = 0; co < c_out; ++co) {
            S acc = S(0);
            for (int b = 0; b < batch; ++b) {
                const S* grow = g + (static_cast<std::size_t>(b) * c_out + co) * t_out;
                for (int t = 0; t < t_out; ++t) acc += grow[t];
            }
            dbias[co] += acc;
        }
    }
}

template void conv1d_forward<float>(const float*, const float*, const float*, float*, int, int, int, int, int,
                                    int, int, int);
template void conv1d_forward<double>(const double*, const double*, const double*, double*, int, int, int, int,
                                     int, int, int, int);
template void conv1d_backward_data<float>(const float*, const float*, float*, int, int, int, int, int, int, int,
                                          int);
template void conv1d_backward_data<double>(const double*, const double*, double*, int, int, int, int, int, int,
                                           int, int);
template void conv1d_backward_kernel<float>(const float*, const float*, float*, float*, int, int, int, int, int,
                                            int, int, int);
template void conv1d_backward_kernel<double>(const double*, const double*, double*, double*, int, int, int, int,
                                             int, int, int, int);

}  // namespace kernels

}  // namespace zrlab
