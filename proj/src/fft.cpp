#include "zrlab/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace zrlab {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative Cooley-Tukey, n must be a power of two.
void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein's chirp-z trick reduces an arbitrary-length DFT to a pow2
// convolution.
void fft_bluestein(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    const size_t m = next_pow2(2 * n + 1);
    const double sign = inverse ? 1.0 : -1.0;

    std::vector<cplx> chirp(n);
    for (size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small for long inputs.
        const std::uintmax_t k2 = (static_cast<std::uintmax_t>(k) * k) % (2 * n);
        const double ang = sign * M_PI * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }

    std::vector<cplx> u(m, cplx(0, 0)), v(m, cplx(0, 0));
    for (size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
    for (size_t k = 0; k < n; ++k) {
        v[k] = std::conj(chirp[k]);
        if (k != 0) v[m - k] = std::conj(chirp[k]);
    }

    fft_pow2(u, false);
    fft_pow2(v, false);
    for (size_t k = 0; k < m; ++k) u[k] *= v[k];
    fft_pow2(u, true);
    const double scale = 1.0 / static_cast<double>(m);
    for (size_t k = 0; k < n; ++k) a[k] = u[k] * scale * chirp[k];
}

}  // namespace

void fft(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_pow2(a, inverse);
    } else {
        fft_bluestein(a, inverse);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= scale;
    }
}

std::vector<cplx> fft_forward(const std::vector<double>& x) {
    std::vector<cplx> a(x.size());
    for (size_t i = 0; i < x.size(); ++i) a[i] = cplx(x[i], 0.0);
    fft(a, false);
    return a;
}

std::vector<double> fft_inverse_real(std::vector<cplx> spectrum) {
    fft(spectrum, true);
    std::vector<double> out(spectrum.size());
    for (size_t i = 0; i < spectrum.size(); ++i) out[i] = spectrum[i].real();
    return out;
}

std::vector<cplx> dft_naive(const std::vector<cplx>& x, bool inverse) {
    const size_t n = x.size();
    std::vector<cplx> out(n, cplx(0, 0));
    const double sign = inverse ? 1.0 : -1.0;
    for (size_t k = 0; k < n; ++k) {
        cplx acc(0, 0);
        for (size_t t = 0; t < n; ++t) {
            const double ang =
                sign * 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
            acc += x[t] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

}  // namespace zrlab
