#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zrlab {

// Mono audio, samples normalized to [-1, 1].
struct Waveform {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// RIFF/WAVE PCM16 little-endian. Multi-channel input keeps the first channel.
Waveform load_wav(const std::string& path);
void save_wav(const std::string& path, const Waveform& w);

// Band-limited polyphase resampling (Kaiser-windowed sinc). Duration is
// preserved within one output sample; equal rates return the input unchanged.
Waveform resample(const Waveform& w, int target_rate);

// 256-level mu-law companding. encode clamps |x| to 1.
int mulaw_encode(double x);
double mulaw_decode(int code);

std::vector<int> mulaw_encode(const std::vector<double>& x);
std::vector<double> mulaw_decode(const std::vector<int>& codes);

}  // namespace zrlab
