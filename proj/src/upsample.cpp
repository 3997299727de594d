#include "zrlab/upsample.hpp"

#include <cmath>
#include <stdexcept>

#include "zrlab/fft.hpp"
#include "zrlab/util.hpp"

namespace zrlab {

Upsampler upsampler_from_string(const std::string& s) {
    if (s == "nearest") return Upsampler::nearest;
    if (s == "linear") return Upsampler::linear;
    if (s == "fourier_tile") return Upsampler::fourier_tile;
    if (s == "fourier_pad") return Upsampler::fourier_pad;
    throw ConfigError("unknown upsampler '" + s + "' (nearest|linear|fourier_tile|fourier_pad)");
}

std::string to_string(Upsampler u) {
    switch (u) {
        case Upsampler::nearest: return "nearest";
        case Upsampler::linear: return "linear";
        case Upsampler::fourier_tile: return "fourier_tile";
        case Upsampler::fourier_pad: return "fourier_pad";
    }
    return "?";
}

void validate_scale_chain(const ScaleChain& chain) {
    if (chain.s1 < 1 || chain.s2 < 1) throw ConfigError("scale chain factors must be >= 1");
    if (chain.hop < 1) throw ConfigError("scale chain hop must be >= 1");
    const long long product = static_cast<long long>(chain.s1) * chain.s2;
    const long long expected = 2LL * chain.hop;
    if (product != expected)
        throw ConfigError("scale chain " + std::to_string(chain.s1) + ":" + std::to_string(chain.s2) +
                          " does not restore the sample rate: s1*s2 = " + std::to_string(product) +
                          ", expected 2*hop = " + std::to_string(expected));
}

namespace {

void check_args(size_t len, int s) {
    if (len == 0) throw DataError("upsample: empty input");
    if (s < 1) throw DataError("upsample: scale factor must be >= 1");
}

}  // namespace

std::vector<double> upsample_nearest_1d(const std::vector<double>& x, int s) {
    check_args(x.size(), s);
    if (s == 1) return x;
    std::vector<double> out(x.size() * static_cast<size_t>(s));
    for (size_t n = 0; n < out.size(); ++n) out[n] = x[n / static_cast<size_t>(s)];
    return out;
}

std::vector<double> upsample_linear_1d(const std::vector<double>& x, int s) {
    check_args(x.size(), s);
    if (s == 1) return x;
    const size_t T = x.size();
    const size_t out_len = T * static_cast<size_t>(s);
    std::vector<double> out(out_len);
    if (T == 1) {
        for (auto& v : out) v = x[0];
        return out;
    }
    // Align-corners: first and last output samples coincide with the input
    // endpoints.
    const double step = static_cast<double>(T - 1) / static_cast<double>(out_len - 1);
    for (size_t n = 0; n < out_len; ++n) {
        const double pos = static_cast<double>(n) * step;
        size_t i0 = static_cast<size_t>(pos);
        if (i0 >= T - 1) i0 = T - 2;
        const double frac = pos - static_cast<double>(i0);
        out[n] = x[i0] * (1.0 - frac) + x[i0 + 1] * frac;
    }
    return out;
}

std::vector<double> upsample_fourier_tile_1d(const std::vector<double>& x, int s) {
    check_args(x.size(), s);
    if (s == 1) return x;
    const size_t T = x.size();
    std::vector<cplx> spectrum = fft_forward(x);
    std::vector<cplx> tiled(T * static_cast<size_t>(s));
    for (size_t k = 0; k < tiled.size(); ++k) tiled[k] = spectrum[k % T];
    return fft_inverse_real(std::move(tiled));
}

std::vector<double> upsample_fourier_pad_1d(const std::vector<double>& x, int s) {
    check_args(x.size(), s);
    if (s == 1) return x;
    const size_t T = x.size();
    const size_t out_len = T * static_cast<size_t>(s);
    std::vector<cplx> spectrum = fft_forward(x);
    std::vector<cplx> padded(out_len, cplx(0, 0));

    if (T % 2 == 0) {
        const size_t nyq = T / 2;
        for (size_t k = 0; k < nyq; ++k) padded[k] = spectrum[k];
        // Splitting the Nyquist bin half/half keeps the output real.
        padded[nyq] = spectrum[nyq] * 0.5;
        padded[out_len - nyq] = spectrum[nyq] * 0.5;
        for (size_t k = nyq + 1; k < T; ++k) padded[out_len - T + k] = spectrum[k];
    } else {
        const size_t head = (T + 1) / 2;
        for (size_t k = 0; k < head; ++k) padded[k] = spectrum[k];
        for (size_t k = head; k < T; ++k) padded[out_len - T + k] = spectrum[k];
    }
    for (auto& z : padded) z *= static_cast<double>(s);
    return fft_inverse_real(std::move(padded));
}

namespace {

FeatureMap apply_per_channel(const FeatureMap& f, int s,
                             std::vector<double> (*op)(const std::vector<double>&, int)) {
    if (f.channels <= 0 || f.time <= 0) throw DataError("upsample: empty feature map");
    FeatureMap out(f.channels, f.time * s);
    out.time_rate = f.time_rate * s;
    std::vector<double> chan(static_cast<size_t>(f.time));
    for (int c = 0; c < f.channels; ++c) {
        for (int t = 0; t < f.time; ++t) chan[t] = f.at(c, t);
        const std::vector<double> up = op(chan, s);
        for (int t = 0; t < out.time; ++t) out.at(c, t) = up[t];
    }
    return out;
}

}  // namespace

FeatureMap upsample_nearest(const FeatureMap& f, int s) { return apply_per_channel(f, s, upsample_nearest_1d); }
FeatureMap upsample_linear(const FeatureMap& f, int s) { return apply_per_channel(f, s, upsample_linear_1d); }
FeatureMap upsample_fourier_tile(const FeatureMap& f, int s) {
    return apply_per_channel(f, s, upsample_fourier_tile_1d);
}
FeatureMap upsample_fourier_pad(const FeatureMap& f, int s) {
    return apply_per_channel(f, s, upsample_fourier_pad_1d);
}

FeatureMap upsample(const FeatureMap& f, int s, Upsampler kind) {
    switch (kind) {
        case Upsampler::nearest: return upsample_nearest(f, s);
        case Upsampler::linear: return upsample_linear(f, s);
        case Upsampler::fourier_tile: return upsample_fourier_tile(f, s);
        case Upsampler::fourier_pad: return upsample_fourier_pad(f, s);
    }
    throw ConfigError("upsample: bad kind");
}

std::vector<double> upsample_adjoint_1d(const std::vector<double>& g, int s, int in_len, Upsampler kind) {
    if (in_len <= 0) throw DataError("upsample_adjoint: bad input length");
    if (s < 1) throw DataError("upsample_adjoint: scale factor must be >= 1");
    const size_t T = static_cast<size_t>(in_len);
    if (g.size() != T * static_cast<size_t>(s)) throw DataError("upsample_adjoint: gradient length mismatch");
    if (s == 1) return g;

    std::vector<double> gx(T, 0.0);
    switch (kind) {
        case Upsampler::nearest:
            for (size_t n = 0; n < g.size(); ++n) gx[n / static_cast<size_t>(s)] += g[n];
            return gx;

        case Upsampler::linear: {
            if (T == 1) {
                for (double v : g) gx[0] += v;
                return gx;
            }
            const size_t out_len = g.size();
            const double step = static_cast<double>(T - 1) / static_cast<double>(out_len - 1);
            for (size_t n = 0; n < out_len; ++n) {
                const double pos = static_cast<double>(n) * step;
                size_t i0 = static_cast<size_t>(pos);
                if (i0 >= T - 1) i0 = T - 2;
                const double frac = pos - static_cast<double>(i0);
                gx[i0] += g[n] * (1.0 - frac);
                gx[i0 + 1] += g[n] * frac;
            }
            return gx;
        }

        case Upsampler::fourier_tile:
            // Tiling equals zero-insertion, whose adjoint is plain sampling.
            for (size_t t = 0; t < T; ++t) gx[t] = g[t * static_cast<size_t>(s)];
            return gx;

        case Upsampler::fourier_pad: {
            // Transpose of s * IDFT_sT . pad . DFT_T, using the symmetry of
            // the DFT matrices: gx = s * Re(DFT_T(pad^T(IDFT_sT(g)))).
            std::vector<cplx> big(g.size());
            for (size_t i = 0; i < g.size(); ++i) big[i] = cplx(g[i], 0.0);
            fft(big, true);

            std::vector<cplx> gathered(T, cplx(0, 0));
            const size_t out_len = g.size();
            if (T % 2 == 0) {
                const size_t nyq = T / 2;
                for (size_t k = 0; k < nyq; ++k) gathered[k] = big[k];
                gathered[nyq] = (big[nyq] + big[out_len - nyq]) * 0.5;
                for (size_t k = nyq + 1; k < T; ++k) gathered[k] = big[out_len - T + k];
            } else {
                const size_t head = (T + 1) / 2;
                for (size_t k = 0; k < head; ++k) gathered[k] = big[k];
                for (size_t k = head; k < T; ++k) gathered[k] = big[out_len - T + k];
            }
            fft(gathered, false);
            for (size_t t = 0; t < T; ++t) gx[t] = static_cast<double>(s) * gathered[t].real();
            return gx;
        }
    }
    throw ConfigError("upsample_adjoint: bad kind");
}

}  // namespace zrlab
