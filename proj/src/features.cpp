#include "zrlab/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <json.hpp>

#include "zrlab/fft.hpp"
#include "zrlab/util.hpp"

namespace zrlab {

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

void FeatureConfig::validate() const {
    if (sample_rate <= 0) throw ConfigError("features.sample_rate must be positive");
    if (n_mels <= 0) throw ConfigError("features.n_mels must be positive");
    if (hop <= 0) throw ConfigError("features.hop must be positive");
    const int win = win_samples();
    if (hop > win) throw ConfigError("features.hop must not exceed the window length");
    if (win > n_fft) throw ConfigError("features: window length exceeds n_fft");
    if (!(fmin < fmax)) throw ConfigError("features.fmin must be below fmax");
    if (fmax > sample_rate / 2.0 + 1e-9) throw ConfigError("features.fmax must not exceed Nyquist");
    if (log_floor <= 0.0) throw ConfigError("features.log_floor must be positive");
}

std::string FeatureConfig::hash() const {
    nlohmann::json j{{"sample_rate", sample_rate}, {"n_mels", n_mels}, {"win_ms", win_ms},
                     {"hop", hop},                 {"n_fft", n_fft},   {"fmin", fmin},
                     {"fmax", fmax},               {"log_floor", log_floor}};
    return hash_hex(fnv1a64(j.dump()));
}

int frame_count(std::int64_t len, int win, int hop) {
    if (len < win) return 0;
    return static_cast<int>(1 + (len - win) / hop);
}

std::vector<double> mel_filterbank(const FeatureConfig& cfg) {
    const int n_bins = cfg.n_fft / 2 + 1;
    std::vector<double> fb(static_cast<size_t>(cfg.n_mels) * n_bins, 0.0);

    const double mel_lo = hz_to_mel(cfg.fmin);
    const double mel_hi = hz_to_mel(cfg.fmax);
    std::vector<double> edges(static_cast<size_t>(cfg.n_mels) + 2);
    for (size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (cfg.n_mels + 1));

    for (int m = 0; m < cfg.n_mels; ++m) {
        const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
        const double area_norm = 2.0 / (f2 - f0);
        for (int k = 0; k < n_bins; ++k) {
            const double fk = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
            double w = 0.0;
            if (fk > f0 && fk < f1)
                w = (fk - f0) / (f1 - f0);
            else if (fk >= f1 && fk < f2)
                w = (f2 - fk) / (f2 - f1);
            fb[static_cast<size_t>(m) * n_bins + k] = w * area_norm;
        }
    }
    return fb;
}

MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg) {
    cfg.validate();
    const int win = cfg.win_samples();
    const std::int64_t len = static_cast<std::int64_t>(w.samples.size());
    if (len < win) throw DataError("log_mel: signal shorter than one analysis window");

    const int n_frames = frame_count(len, win, cfg.hop);
    const int n_bins = cfg.n_fft / 2 + 1;

    std::vector<double> window(static_cast<size_t>(win));
    for (int i = 0; i < win; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);

    const std::vector<double> fb = mel_filterbank(cfg);

    MelSpectrogram out;
    out.n_mels = cfg.n_mels;
    out.n_frames = n_frames;
    out.values.assign(static_cast<size_t>(cfg.n_mels) * n_frames, 0.0);
    out.config_hash = cfg.hash();
    out.norm = NormState::log;

#pragma omp parallel for schedule(static)
    for (int f = 0; f < n_frames; ++f) {
        std::vector<cplx> buf(static_cast<size_t>(cfg.n_fft), cplx(0, 0));
        const std::int64_t start = static_cast<std::int64_t>(f) * cfg.hop;
        for (int i = 0; i < win; ++i)
            buf[i] = cplx(w.samples[static_cast<size_t>(start + i)] * window[i], 0.0);
        fft(buf, false);

        std::vector<double> mag(static_cast<size_t>(n_bins));
        for (int k = 0; k < n_bins; ++k) mag[k] = std::abs(buf[k]);

        for (int m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            const double* row = &fb[static_cast<size_t>(m) * n_bins];
            for (int k = 0; k < n_bins; ++k) acc += row[k] * mag[k];
            out.at(m, f) = std::log(std::max(acc, cfg.log_floor));
        }
    }
    return out;
}

MelSpectrogram minmax_normalize(const MelSpectrogram& m, std::optional<std::pair<double, double>> stats) {
    if (m.norm != NormState::log) throw DataError("minmax_normalize: input must be log-compressed");
    double lo, hi;
    if (stats.has_value()) {
        lo = stats->first;
        hi = stats->second;
    } else {
        lo = *std::min_element(m.values.begin(), m.values.end());
        hi = *std::max_element(m.values.begin(), m.values.end());
    }

    MelSpectrogram out = m;
    out.norm = NormState::minmax;
    out.norm_min = lo;
    out.norm_max = hi;
    if (hi == lo) {
        std::fill(out.values.begin(), out.values.end(), 0.0);
        return out;
    }
    const double inv = 1.0 / (hi - lo);
    for (auto& v : out.values) v = std::clamp((v - lo) * inv, 0.0, 1.0);
    return out;
}

MelSpectrogram minmax_denormalize(const MelSpectrogram& m) {
    if (m.norm != NormState::minmax) throw DataError("minmax_denormalize: input is not min-max normalized");
    MelSpectrogram out = m;
    out.norm = NormState::log;
    for (auto& v : out.values) v = m.norm_min + v * (m.norm_max - m.norm_min);
    return out;
}

TrainingWindow sample_training_window(const MelSpectrogram& mel, const Waveform& audio, int frames, int hop,
                                      Rng& rng) {
    if (frames <= 0 || hop <= 0) throw ConfigError("sample_training_window: frames and hop must be positive");
    if (mel.n_frames < frames) throw DataError("sample_training_window: utterance too short");
    const std::int64_t need = static_cast<std::int64_t>(mel.n_frames - 1) * hop;
    if (static_cast<std::int64_t>(audio.samples.size()) < need)
        throw DataError("sample_training_window: audio shorter than the mel grid implies");

    // The last admissible start also needs frames*hop audio samples.
    std::int64_t max_start = mel.n_frames - frames;
    const std::int64_t audio_limit =
        static_cast<std::int64_t>(audio.samples.size()) / hop - frames;
    max_start = std::min<std::int64_t>(max_start, audio_limit);
    if (max_start < 0) throw DataError("sample_training_window: utterance too short");

    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_start) + 1));

    TrainingWindow out;
    out.start_frame = start;
    out.mel.n_mels = mel.n_mels;
    out.mel.n_frames = frames;
    out.mel.config_hash = mel.config_hash;
    out.mel.norm = mel.norm;
    out.mel.norm_min = mel.norm_min;
    out.mel.norm_max = mel.norm_max;
    out.mel.values.resize(static_cast<size_t>(mel.n_mels) * frames);
    for (int m = 0; m < mel.n_mels; ++m)
        for (int f = 0; f < frames; ++f) out.mel.at(m, f) = mel.at(m, start + f);

    const std::int64_t a0 = static_cast<std::int64_t>(start) * hop;
    out.audio.assign(audio.samples.begin() + a0, audio.samples.begin() + a0 + static_cast<std::int64_t>(frames) * hop);
    return out;
}

void save_mel(const std::string& path, const MelSpectrogram& m) {
    std::string out;
    out.reserve(12 + m.values.size() * 4);
    out += "MEL1";
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(m.n_mels), static_cast<std::uint32_t>(m.n_frames)};
    out.append(reinterpret_cast<const char*>(dims), 8);
    std::vector<float> f32(m.values.size());
    for (size_t i = 0; i < m.values.size(); ++i) f32[i] = static_cast<float>(m.values[i]);
    out.append(reinterpret_cast<const char*>(f32.data()), f32.size() * 4);
    atomic_write_file(path, out);

    nlohmann::json side{{"config_hash", m.config_hash},
                        {"n_mels", m.n_mels},
                        {"n_frames", m.n_frames},
                        {"norm", m.norm == NormState::raw ? "raw" : m.norm == NormState::log ? "log" : "minmax"}};
    if (m.norm == NormState::minmax) {
        side["min"] = m.norm_min;
        side["max"] = m.norm_max;
    }
    std::string stem = path;
    if (auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
    atomic_write_file(stem + ".json", side.dump(2) + "\n");
}

MelSpectrogram load_mel(const std::string& path) {
    const std::string raw = read_file(path);
    if (raw.size() < 12 || raw.compare(0, 4, "MEL1") != 0)
        throw DataError("feature cache: bad magic in " + path);
    std::uint32_t dims[2];
    std::memcpy(dims, raw.data() + 4, 8);
    MelSpectrogram m;
    m.n_mels = static_cast<int>(dims[0]);
    m.n_frames = static_cast<int>(dims[1]);
    const size_t need = 12 + static_cast<size_t>(m.n_mels) * m.n_frames * 4;
    if (raw.size() < need) throw DataError("feature cache: truncated payload in " + path);
    m.values.resize(static_cast<size_t>(m.n_mels) * m.n_frames);
    const float* f32 = reinterpret_cast<const float*>(raw.data() + 12);
    for (size_t i = 0; i < m.values.size(); ++i) m.values[i] = static_cast<double>(f32[i]);

    std::string stem = path;
    if (auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
    try {
        const auto side = nlohmann::json::parse(read_file(stem + ".json"));
        m.config_hash = side.value("config_hash", "");
        const std::string norm = side.value("norm", "raw");
        m.norm = norm == "log" ? NormState::log : norm == "minmax" ? NormState::minmax : NormState::raw;
        if (m.norm == NormState::minmax) {
            m.norm_min = side.value("min", 0.0);
            m.norm_max = side.value("max", 0.0);
        }
    } catch (const DataError&) {
        // No sidecar: values only.
    }
    return m;
}

}  // namespace zrlab
