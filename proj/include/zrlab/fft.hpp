#pragma once

#include <complex>
#include <vector>

namespace zrlab {

using cplx = std::complex<double>;

// In-place DFT of arbitrary length: radix-2 for powers of two, Bluestein
// otherwise. Inverse applies the 1/N normalization.
void fft(std::vector<cplx>& a, bool inverse);

std::vector<cplx> fft_forward(const std::vector<double>& x);
std::vector<double> fft_inverse_real(std::vector<cplx> spectrum);

// Reference O(N^2) transform used as the oracle in tests.
std::vector<cplx> dft_naive(const std::vector<cplx>& x, bool inverse);

}  // namespace zrlab
