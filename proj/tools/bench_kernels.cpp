// Times the OpenMP kernels against their serial reference twins and checks
// the outputs stay bit-identical while it runs.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <vector>

#include "zrlab/kernels.hpp"
#include "zrlab/rng.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double time_of(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r) fn();
    return std::chrono::duration<double>(clock_type::now() - t0).count() / reps;
}

void fill(std::vector<float>& v, zrlab::Rng& rng) {
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
    int threads = 4;
    if (argc > 1) threads = std::atoi(argv[1]);
    zrlab::Rng rng(7);

    std::printf("%-28s %10s %10s %8s %6s\n", "kernel", "serial_ms", "omp_ms", "speedup", "equal");

    struct Case {
        const char* name;
        int rows, inner, cols;
    };
    const Case cases[] = {{"matmul_nt 256x256x256", 256, 256, 256},
                          {"matmul_nt 512x384x512", 512, 384, 512},
                          {"matmul_nn 512x384x512", 512, 384, 512},
                          {"matmul_tn_acc 512x384x512", 512, 384, 512}};

    for (const Case& c : cases) {
        std::vector<float> a(static_cast<size_t>(c.rows) * c.inner), w(static_cast<size_t>(c.cols) * c.inner),
            bias(c.cols), y_ref(static_cast<size_t>(c.rows) * c.cols), y_omp(y_ref.size()),
            dw_ref(w.size()), dw_omp(w.size());
        fill(a, rng);
        fill(w, rng);
        fill(bias, rng);

        std::function<void()> serial, parallel;
        const float* cmp_ref = y_ref.data();
        const float* cmp_omp = y_omp.data();
        size_t cmp_n = y_ref.size();
        if (std::strncmp(c.name, "matmul_nt", 9) == 0) {
            serial = [&] { zrlab::ref::matmul_nt(a.data(), w.data(), bias.data(), y_ref.data(), c.rows, c.inner, c.cols); };
            parallel = [&] { zrlab::kernels::matmul_nt(a.data(), w.data(), bias.data(), y_omp.data(), c.rows, c.inner, c.cols); };
        } else if (std::strncmp(c.name, "matmul_nn", 9) == 0) {
            // g: [rows, cols], w: [cols, inner], y: [rows, inner]
            std::vector<float> g(static_cast<size_t>(c.rows) * c.cols);
            fill(g, rng);
            y_ref.assign(static_cast<size_t>(c.rows) * c.inner, 0.f);
            y_omp.assign(y_ref.size(), 0.f);
            cmp_n = y_ref.size();
            serial = [&, g] { zrlab::ref::matmul_nn(g.data(), w.data(), y_ref.data(), c.rows, c.inner, c.cols); };
            parallel = [&, g] { zrlab::kernels::matmul_nn(g.data(), w.data(), y_omp.data(), c.rows, c.inner, c.cols); };
        } else {
            std::vector<float> g(static_cast<size_t>(c.rows) * c.cols);
            fill(g, rng);
            cmp_ref = dw_ref.data();
            cmp_omp = dw_omp.data();
            cmp_n = dw_ref.size();
            serial = [&, g] {
                std::fill(dw_ref.begin(), dw_ref.end(), 0.f);
                zrlab::ref::matmul_tn_acc(g.data(), a.data(), dw_ref.data(), c.rows, c.cols, c.inner);
            };
            parallel = [&, g] {
                std::fill(dw_omp.begin(), dw_omp.end(), 0.f);
                zrlab::kernels::matmul_tn_acc(g.data(), a.data(), dw_omp.data(), c.rows, c.cols, c.inner);
            };
        }

        zrlab::set_num_threads(1);
        const double t_serial = time_of(serial, 3);
        zrlab::set_num_threads(threads);
        const double t_omp = time_of(parallel, 3);
        serial();
        parallel();
        const bool equal = std::memcmp(cmp_ref, cmp_omp, cmp_n * sizeof(float)) == 0;
        std::printf("%-28s %10.3f %10.3f %8.2fx %6s\n", c.name, t_serial * 1e3, t_omp * 1e3,
                    t_serial / t_omp, equal ? "yes" : "NO");
        if (!equal) return 1;
    }

    // conv1d forward at encoder-like geometry.
    {
        const int batch = 8, c_in = 32, t_in = 512, c_out = 32, k = 4, stride = 2, pad = 1;
        const int t_out = (t_in + 2 * pad - k) / stride + 1;
        std::vector<float> x(static_cast<size_t>(batch) * c_in * t_in),
            kern(static_cast<size_t>(c_out) * c_in * k), bias(c_out),
            y_ref(static_cast<size_t>(batch) * c_out * t_out), y_omp(y_ref.size());
        fill(x, rng);
        fill(kern, rng);
        fill(bias, rng);
        zrlab::set_num_threads(1);
        const double t_serial = time_of(
            [&] {
                zrlab::ref::conv1d_forward(x.data(), kern.data(), bias.data(), y_ref.data(), batch, c_in, t_in,
                                           c_out, k, stride, pad, t_out);
            },
            5);
        zrlab::set_num_threads(threads);
        const double t_omp = time_of(
            [&] {
                zrlab::kernels::conv1d_forward(x.data(), kern.data(), bias.data(), y_omp.data(), batch, c_in,
                                               t_in, c_out, k, stride, pad, t_out);
            },
            5);
        const bool equal = std::memcmp(y_ref.data(), y_omp.data(), y_ref.size() * sizeof(float)) == 0;
        std::printf("%-28s %10.3f %10.3f %8.2fx %6s\n", "conv1d k4s2 8x32x512", t_serial * 1e3, t_omp * 1e3,
                    t_serial / t_omp, equal ? "yes" : "NO");
        if (!equal) return 1;
    }

    std::printf("threads: %d\n", threads);
    return 0;
}
