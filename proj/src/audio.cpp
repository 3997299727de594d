#include "zrlab/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "zrlab/util.hpp"

namespace zrlab {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}

double bessel_i0(double x) {
    // Series expansion; converges fast for the beta range used here.
    double sum = 1.0, term = 1.0;
    const double half_x2 = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= half_x2 / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

}  // namespace

Waveform load_wav(const std::string& path) {
    const std::string raw = read_file(path);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    const size_t n = raw.size();

    if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
        throw DataError("malformed WAV: " + path);

    int channels = 0, sample_rate = 0, bits = 0, format = 0;
    const unsigned char* data = nullptr;
    size_t data_len = 0;

    size_t off = 12;
    while (off + 8 <= n) {
        const char* id = reinterpret_cast<const char*>(p + off);
        const std::uint32_t sz = read_u32(p + off + 4);
        if (off + 8 + sz > n) throw DataError("malformed WAV: truncated chunk in " + path);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (sz < 16) throw DataError("malformed WAV: short fmt chunk in " + path);
            format = read_u16(p + off + 8);
            channels = read_u16(p + off + 10);
            sample_rate = static_cast<int>(read_u32(p + off + 12));
            bits = read_u16(p + off + 22);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = p + off + 8;
            data_len = sz;
        }
        off += 8 + sz + (sz & 1);  // chunks are word-aligned
    }

    if (channels <= 0 || sample_rate <= 0) throw DataError("malformed WAV: missing fmt chunk in " + path);
    if (format != 1 || bits != 16) throw DataError("unsupported WAV codec (want PCM16): " + path);
    if (data == nullptr || data_len == 0) throw DataError("malformed WAV: empty payload in " + path);

    const size_t stride = static_cast<size_t>(channels) * 2;
    const size_t frames = data_len / stride;
    if (frames == 0) throw DataError("malformed WAV: empty payload in " + path);

    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
        const unsigned char* sp = data + i * stride;  // first channel
        const std::int16_t v = static_cast<std::int16_t>(sp[0] | (sp[1] << 8));
        w.samples[i] = static_cast<double>(v) / 32768.0;
    }
    return w;
}

void save_wav(const std::string& path, const Waveform& w) {
    if (w.sample_rate <= 0) throw DataError("save_wav: sample rate must be positive");
    std::string out;
    const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
    out.reserve(44 + data_size);
    out += "RIFF";
    put_u32(out, 36 + data_size);
    out += "WAVE";
    out += "fmt ";
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate * 2));
    put_u16(out, 2);
    put_u16(out, 16);
    out += "data";
    put_u32(out, data_size);
    for (double s : w.samples) {
        const double c = std::clamp(s, -1.0, 1.0);
        // Same 1/32768 scale as the reader, so load -> save is exact.
        const int v = std::clamp(static_cast<int>(std::lrint(c * 32768.0)), -32768, 32767);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
    atomic_write_file(path, out);
}

Waveform resample(const Waveform& w, int target_rate) {
    if (target_rate <= 0) throw DataError("resample: target rate must be positive");
    if (w.sample_rate <= 0) throw DataError("resample: source rate must be positive");
    if (target_rate == w.sample_rate) return w;

    const int g = std::gcd(w.sample_rate, target_rate);
    const std::int64_t up = target_rate / g;    // L
    const std::int64_t down = w.sample_rate / g;  // M

    // Kaiser-windowed sinc lowpass at the tighter of the two Nyquist limits,
    // evaluated in the up-sampled domain.
    const int zero_crossings = 24;
    const double beta = 9.0;
    const double cutoff = 1.0 / static_cast<double>(std::max(up, down));  // of pi
    const std::int64_t half = zero_crossings * std::max(up, down);
    const double inv_i0 = 1.0 / bessel_i0(beta);

    std::vector<double> taps(static_cast<size_t>(2 * half + 1));
    for (std::int64_t i = -half; i <= half; ++i) {
        const double t = static_cast<double>(i);
        const double x = M_PI * cutoff * t;
        const double sinc = (i == 0) ? 1.0 : std::sin(x) / x;
        const double r = t / static_cast<double>(half);
        const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) * inv_i0;
        taps[static_cast<size_t>(i + half)] = sinc * win;
    }

    const std::int64_t in_len = static_cast<std::int64_t>(w.samples.size());
    const std::int64_t out_len = (in_len * up + down / 2) / down;

    Waveform out;
    out.sample_rate = target_rate;
    out.samples.resize(static_cast<size_t>(out_len));

    for (std::int64_t o = 0; o < out_len; ++o) {
        // Output sample o sits at upsampled-grid position o*down; input sample
        // k sits at k*up. Walk every input sample within the filter support.
        const std::int64_t pos_up = o * down;
        const std::int64_t base = pos_up / up;

        double acc = 0.0, gain = 0.0;
        for (std::int64_t k = base - half / up - 1; k <= base + half / up + 1; ++k) {
            const std::int64_t d = pos_up - k * up;
            if (d < -half || d > half) continue;
            const double h = taps[static_cast<size_t>(d + half)];
            gain += h;
            if (k >= 0 && k < in_len) acc += h * w.samples[static_cast<size_t>(k)];
        }
        // Per-phase normalization keeps DC gain exactly 1.
        out.samples[static_cast<size_t>(o)] = gain != 0.0 ? acc / gain : 0.0;
    }
    return out;
}

int mulaw_encode(double x) {
    const double c = std::clamp(x, -1.0, 1.0);
    const double f = std::copysign(std::log1p(255.0 * std::abs(c)) / std::log(256.0), c);
    const int q = static_cast<int>(std::floor((f + 1.0) / 2.0 * 255.0 + 0.5));
    return std::clamp(q, 0, 255);
}

double mulaw_decode(int code) {
    const int q = std::clamp(code, 0, 255);
    const double f = 2.0 * static_cast<double>(q) / 255.0 - 1.0;
    return std::copysign((std::pow(256.0, std::abs(f)) - 1.0) / 255.0, f);
}

std::vector<int> mulaw_encode(const std::vector<double>& x) {
    std::vector<int> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = mulaw_encode(x[i]);
    return out;
}

std::vector<double> mulaw_decode(const std::vector<int>& codes) {
    std::vector<double> out(codes.size());
    for (size_t i = 0; i < codes.size(); ++i) out[i] = mulaw_decode(codes[i]);
    return out;
}

}  // namespace zrlab
