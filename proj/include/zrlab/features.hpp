#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zrlab/audio.hpp"
#include "zrlab/rng.hpp"

namespace zrlab {

struct FeatureConfig {
    int sample_rate = 16000;
    int n_mels = 80;
    double win_ms = 40.0;
    int hop = 160;
    int n_fft = 1024;
    double fmin = 0.0;
    double fmax = 8000.0;
    double log_floor = 1e-10;

    int win_samples() const { return static_cast<int>(win_ms * sample_rate / 1000.0 + 0.5); }
    void validate() const;
    std::string hash() const;
};

enum class NormState { raw, log, minmax };

struct MelSpectrogram {
    int n_mels = 0;
    int n_frames = 0;
    std::vector<double> values;  // row-major, n_mels rows x n_frames cols
    std::string config_hash;
    NormState norm = NormState::raw;
    double norm_min = 0.0;  // valid when norm == minmax
    double norm_max = 0.0;

    double& at(int mel, int frame) { return values[static_cast<size_t>(mel) * n_frames + frame]; }
    double at(int mel, int frame) const { return values[static_cast<size_t>(mel) * n_frames + frame]; }
};

int frame_count(std::int64_t len, int win, int hop);

// HTK-scale triangular filterbank, unit-area filters; rows n_mels, cols
// n_fft/2+1.
std::vector<double> mel_filterbank(const FeatureConfig& cfg);

// Hann-windowed magnitude STFT -> mel filterbank -> log(max(v, log_floor)).
MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg);

// Maps log values to [0,1]; stats default to this spectrogram's own min/max.
// Constant input maps to all zeros.
MelSpectrogram minmax_normalize(const MelSpectrogram& m, std::optional<std::pair<double, double>> stats = {});
MelSpectrogram minmax_denormalize(const MelSpectrogram& m);

struct TrainingWindow {
    MelSpectrogram mel;           // `frames` frames
    std::vector<double> audio;    // frames*hop samples, aligned to the slice
    int start_frame = 0;
};

// Random aligned (mel, audio) slice for one training item. Throws DataError
// when the utterance is shorter than the window.
TrainingWindow sample_training_window(const MelSpectrogram& mel, const Waveform& audio, int frames, int hop,
                                      Rng& rng);

// Feature cache: magic "MEL1", u32 n_mels, u32 n_frames, f32 LE row-major
// values; norm state and config hash go in a JSON sidecar of the same stem.
void save_mel(const std::string& path, const MelSpectrogram& m);
MelSpectrogram load_mel(const std::string& path);

}  // namespace zrlab
