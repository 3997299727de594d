#pragma once

#include <cstddef>

namespace zrlab {

// Thread count used by the OpenMP kernels below. 1 (the default) runs them
// serially; any setting produces bit-identical results because every output
// element is owned by exactly one thread and accumulated in a fixed order.
void set_num_threads(int n);
int num_threads();

// Dense kernels shared by the layers. Row-major throughout.
namespace kernels {

// y[b,o] = sum_i x[b,i] * w[o,i] + bias[o]        (bias may be null)
void matmul_nt(const float* x, const float* w, const float* bias, float* y, int rows, int inner, int cols);
void matmul_nt(const double* x, const double* w, const double* bias, double* y, int rows, int inner, int cols);

// y[b,i] = sum_o g[b,o] * w[o,i]
void matmul_nn(const float* g, const float* w, float* y, int rows, int inner, int cols);
void matmul_nn(const double* g, const double* w, double* y, int rows, int inner, int cols);

// dw[o,i] += sum_b g[b,o] * x[b,i]
void matmul_tn_acc(const float* g, const float* x, float* dw, int rows, int out_dim, int in_dim);
void matmul_tn_acc(const double* g, const double* x, double* dw, int rows, int out_dim, int in_dim);

// Cross-correlation: y[b,co,t] = sum_ci sum_j k[co,ci,j] * x[b,ci,t*stride+j-pad]
template <typename S>
void conv1d_forward(const S* x, const S* k, const S* bias, S* y, int batch, int c_in, int t_in, int c_out,
                    int ksize, int stride, int pad, int t_out);

template <typename S>
void conv1d_backward_data(const S* g, const S* k, S* dx, int batch, int c_in, int t_in, int c_out, int ksize,
                          int stride, int pad, int t_out);

template <typename S>
void conv1d_backward_kernel(const S* g, const S* x, S* dk, S* dbias, int batch, int c_in, int t_in, int c_out,
                            int ksize, int stride, int pad, int t_out);

}  // namespace kernels

// Naive single-threaded twins of the kernels above. They define the expected
// output: tests assert the parallel kernels match them bit for bit, and the
// benchmark tool times one against the other.
namespace ref {

void matmul_nt(const float* x, const float* w, const float* bias, float* y, int rows, int inner, int cols);
void matmul_nt(const double* x, const double* w, const double* bias, double* y, int rows, int inner, int cols);
void matmul_nn(const float* g, const float* w, float* y, int rows, int inner, int cols);
void matmul_nn(const double* g, const double* w, double* y, int rows, int inner, int cols);
void matmul_tn_acc(const float* g, const float* x, float* dw, int rows, int out_dim, int in_dim);
void matmul_tn_acc(const double* g, const double* x, double* dw, int rows, int out_dim, int in_dim);

template <typename S>
void conv1d_forward(const S* x, const S* k, const S* bias, S* y, int batch, int c_in, int t_in, int c_out,
                    int ksize, int stride, int pad, int t_out);

}  // namespace ref

}  // namespace zrlab
