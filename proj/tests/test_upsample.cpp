#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "zrlab/fft.hpp"
#include "zrlab/rng.hpp"
#include "zrlab/upsample.hpp"
#include "zrlab/util.hpp"

using namespace zrlab;

namespace {

std::vector<double> random_vec(int n, Rng& rng) {
    std::vector<double> x(static_cast<size_t>(n));
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
}

std::vector<double> zero_insert(const std::vector<double>& x, int s) {
    std::vector<double> y(x.size() * static_cast<size_t>(s), 0.0);
    for (size_t i = 0; i < x.size(); ++i) y[i * s] = x[i];
    return y;
}

// Random even-length signal with an empty Nyquist bin, built in the
// frequency domain so it is exactly band-limited.
std::vector<double> nyquist_free(int n, Rng& rng) {
    std::vector<cplx> spec(static_cast<size_t>(n), 0.0);
    spec[0] = rng.uniform(-1.0, 1.0);
    for (int k = 1; k < n / 2; ++k) {
        const cplx v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        spec[static_cast<size_t>(k)] = v;
        spec[static_cast<size_t>(n - k)] = std::conj(v);
    }
    return fft_inverse_real(spec);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sum_sq(const std::vector<double>& a) { return dot(a, a); }

}  // namespace

TEST_CASE("nearest repeats each sample s times") {
    const std::vector<double> x{1.0, -2.0, 3.0};
    CHECK(upsample_nearest_1d(x, 2) == std::vector<double>{1.0, 1.0, -2.0, -2.0, 3.0, 3.0});
    CHECK(upsample_nearest_1d(x, 1) == x);
}

TEST_CASE("linear is align-corners: endpoints coincide, ramp is uniform") {
    const std::vector<double> x{0.0, 2.0};
    const auto y = upsample_linear_1d(x, 4);
    REQUIRE(y.size() == 8);
    for (int n = 0; n < 8; ++n) CHECK(y[static_cast<size_t>(n)] == doctest::Approx(2.0 * n / 7.0));

    const std::vector<double> flat{3.0};
    CHECK(upsample_linear_1d(flat, 5) == std::vector<double>(5, 3.0));

    // A longer ramp stays a ramp under align-corners interpolation.
    const std::vector<double> ramp{0.0, 1.0, 2.0, 3.0};
    const auto r = upsample_linear_1d(ramp, 3);
    REQUIRE(r.size() == 12);
    for (int n = 0; n < 12; ++n) CHECK(r[static_cast<size_t>(n)] == doctest::Approx(3.0 * n / 11.0));
}

TEST_CASE("fourier_tile equals zero-insertion on 1000 random inputs") {
    Rng rng(1);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(40));
        const int s = 2 + static_cast<int>(rng.below(5));
        const auto x = random_vec(n, rng);
        const auto got = upsample_fourier_tile_1d(x, s);
        const auto want = zero_insert(x, s);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("fourier_pad passes through the original samples on 1000 random inputs") {
    Rng rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(40));
        const int s = 2 + static_cast<int>(rng.below(5));
        const auto x = random_vec(n, rng);
        const auto y = upsample_fourier_pad_1d(x, s);
        REQUIRE(y.size() == x.size() * static_cast<size_t>(s));
        for (size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(y[i * s] - x[i]));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("fourier_pad interpolates cos(2*pi*n/4) to cos(2*pi*n/8)") {
    const int n = 8, s = 2;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = std::cos(2.0 * M_PI * i / 4.0);
    const auto y = upsample_fourier_pad_1d(x, s);
    REQUIRE(y.size() == static_cast<size_t>(n * s));
    for (int i = 0; i < n * s; ++i)
        CHECK(std::abs(y[static_cast<size_t>(i)] - std::cos(2.0 * M_PI * i / 8.0)) < 1e-9);
}

TEST_CASE("fourier_pad energy: sum y^2 == s * sum x^2 on band-limited inputs") {
    Rng rng(3);
    // Odd lengths have no Nyquist bin, so any signal qualifies.
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + 2 * static_cast<int>(rng.below(20));
        const int s = 2 + static_cast<int>(rng.below(4));
        const auto x = random_vec(n, rng);
        const auto y = upsample_fourier_pad_1d(x, s);
        CHECK(sum_sq(y) == doctest::Approx(s * sum_sq(x)).epsilon(1e-9));
    }
    // Even lengths qualify once the Nyquist bin is empty. (A populated
    // Nyquist bin loses half its energy to the symmetric split that keeps
    // the interpolant real -- that case is exercised by the pass-through
    // test above instead.)
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4 + 2 * static_cast<int>(rng.below(20));
        const int s = 2 + static_cast<int>(rng.below(4));
        const auto x = nyquist_free(n, rng);
        const auto y = upsample_fourier_pad_1d(x, s);
        CHECK(sum_sq(y) == doctest::Approx(s * sum_sq(x)).epsilon(1e-9));
    }
}

TEST_CASE("adjoint identity <Ux, g> == <x, U^T g> for every kind") {
    Rng rng(4);
    for (Upsampler kind :
         {Upsampler::nearest, Upsampler::linear, Upsampler::fourier_tile, Upsampler::fourier_pad}) {
        for (int trial = 0; trial < 40; ++trial) {
            const int n = 2 + static_cast<int>(rng.below(20));
            const int s = 2 + static_cast<int>(rng.below(4));
            const auto x = random_vec(n, rng);
            const auto g = random_vec(n * s, rng);
            std::vector<double> ux;
            switch (kind) {
                case Upsampler::nearest: ux = upsample_nearest_1d(x, s); break;
                case Upsampler::linear: ux = upsample_linear_1d(x, s); break;
                case Upsampler::fourier_tile: ux = upsample_fourier_tile_1d(x, s); break;
                case Upsampler::fourier_pad: ux = upsample_fourier_pad_1d(x, s); break;
            }
            const auto utg = upsample_adjoint_1d(g, s, n, kind);
            REQUIRE(utg.size() == x.size());
            CHECK(dot(ux, g) == doctest::Approx(dot(x, utg)).epsilon(1e-9));
        }
    }
}

TEST_CASE("FeatureMap upsample applies the 1-D core per channel") {
    FeatureMap f(2, 3);
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 3; ++t) f.at(c, t) = c * 10.0 + t;
    for (Upsampler kind :
         {Upsampler::nearest, Upsampler::linear, Upsampler::fourier_tile, Upsampler::fourier_pad}) {
        const FeatureMap u = upsample(f, 3, kind);
        REQUIRE(u.channels == 2);
        REQUIRE(u.time == 9);
        for (int c = 0; c < 2; ++c) {
            std::vector<double> row(3);
            for (int t = 0; t < 3; ++t) row[static_cast<size_t>(t)] = f.at(c, t);
            std::vector<double> want;
            switch (kind) {
                case Upsampler::nearest: want = upsample_nearest_1d(row, 3); break;
                case Upsampler::linear: want = upsample_linear_1d(row, 3); break;
                case Upsampler::fourier_tile: want = upsample_fourier_tile_1d(row, 3); break;
                case Upsampler::fourier_pad: want = upsample_fourier_pad_1d(row, 3); break;
            }
            for (int t = 0; t < 9; ++t) CHECK(u.at(c, t) == doctest::Approx(want[static_cast<size_t>(t)]));
        }
    }
}

TEST_CASE("upsampler names round-trip") {
    for (Upsampler kind :
         {Upsampler::nearest, Upsampler::linear, Upsampler::fourier_tile, Upsampler::fourier_pad})
        CHECK(upsampler_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(upsampler_from_string("bicubic"), ConfigError);
}

TEST_CASE("scale chains validate when s1*s2 == 2*hop") {
    for (ScaleChain chain : {ScaleChain{2, 160, 160}, ScaleChain{16, 20, 160}, ScaleChain{16, 16, 128},
                             ScaleChain{10, 16, 80}, ScaleChain{4, 8, 16}, ScaleChain{2, 300, 300}}) {
        CHECK_NOTHROW(validate_scale_chain(chain));
    }
}

TEST_CASE("mismatched scale chain is rejected with the numbers in the message") {
    const ScaleChain bad{16, 20, 128};  // 320 != 256
    try {
        validate_scale_chain(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("16") != std::string::npos);
        CHECK(msg.find("20") != std::string::npos);
        CHECK(msg.find("256") != std::string::npos);  // the expected product 2*hop
    }
    CHECK_THROWS_AS(validate_scale_chain(ScaleChain{0, 320, 160}), ConfigError);
}
