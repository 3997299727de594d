#pragma once

#include <string>
#include <vector>

namespace zrlab {

// Tensor flowing between the interpolation blocks: channels x time.
struct FeatureMap {
    int channels = 0;
    int time = 0;
    std::vector<double> values;  // row-major, channel-major
    double time_rate = 0.0;      // informational

    FeatureMap() = default;
    FeatureMap(int c, int t) : channels(c), time(t), values(static_cast<size_t>(c) * t, 0.0) {}
    double& at(int c, int t) { return values[static_cast<size_t>(c) * time + t]; }
    double at(int c, int t) const { return values[static_cast<size_t>(c) * time + t]; }
};

enum class Upsampler { nearest, linear, fourier_tile, fourier_pad };

Upsampler upsampler_from_string(const std::string& s);
std::string to_string(Upsampler u);

// The two interpolation factors around the vocoder LSTM. Codes run at half
// the mel frame rate, so s1*s2 must equal 2*hop to land back on samples.
struct ScaleChain {
    int s1 = 2;
    int s2 = 160;
    int hop = 160;
};

void validate_scale_chain(const ScaleChain& chain);

// Per-channel 1-D cores. All return a signal of length s*T.
std::vector<double> upsample_nearest_1d(const std::vector<double>& x, int s);
std::vector<double> upsample_linear_1d(const std::vector<double>& x, int s);
// Spectrum replication; exactly zero-insertion ((s-1) zeros between samples).
std::vector<double> upsample_fourier_tile_1d(const std::vector<double>& x, int s);
// Nyquist-split zero padding scaled by s; exact band-limited interpolation,
// passes through the original samples.
std::vector<double> upsample_fourier_pad_1d(const std::vector<double>& x, int s);

FeatureMap upsample(const FeatureMap& f, int s, Upsampler kind);
FeatureMap upsample_nearest(const FeatureMap& f, int s);
FeatureMap upsample_linear(const FeatureMap& f, int s);
FeatureMap upsample_fourier_tile(const FeatureMap& f, int s);
FeatureMap upsample_fourier_pad(const FeatureMap& f, int s);

// Adjoint of each operator, for backpropagation through the vocoder. g has
// length s*T; the result has length T. Verified against the operator matrix
// via <Ux, g> == <x, U^T g>.
std::vector<double> upsample_adjoint_1d(const std::vector<double>& g, int s, int in_len, Upsampler kind);

}  // namespace zrlab
