#include "zrlab/toydata.hpp"

#include <cmath>
#include <filesystem>

#include "zrlab/rng.hpp"
#include "zrlab/util.hpp"

namespace zrlab {

namespace {

double phone_freq(int phone, int n_phones) {
    // Geometric ladder over [200, 950] Hz; second harmonics stay below the
    // toy Nyquist of 2 kHz.
    const double ratio = std::pow(950.0 / 200.0, 1.0 / (n_phones - 1));
    return 200.0 * std::pow(ratio, phone);
}

// Speaker timbre: pitch multiplier and second-harmonic mix.
struct SpeakerVoice {
    double pitch;
    double h2;
};

SpeakerVoice voice_of(int speaker) {
    static const SpeakerVoice table[] = {{1.00, 0.00}, {1.03, 0.35}, {0.97, 0.60}, {1.06, 0.25}};
    const SpeakerVoice base = table[speaker % 4];
    // Further speakers reuse the four voices with a pitch offset.
    return {base.pitch * (1.0 + 0.08 * (speaker / 4)), base.h2};
}

}  // namespace

Waveform toy_waveform(const std::vector<int>& unit_phones, int speaker, const ToyConfig& cfg) {
    const SpeakerVoice voice = voice_of(speaker);
    const int samples_per_unit = 2 * cfg.hop;

    Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.samples.reserve(unit_phones.size() * static_cast<std::size_t>(samples_per_unit));

    double phase = 0.0;  // continuous across segment boundaries
    const double norm = 1.0 + voice.h2;
    for (int phone : unit_phones) {
        const double f = phone_freq(phone, cfg.n_phones) * voice.pitch;
        const double dphi = 2.0 * M_PI * f / cfg.sample_rate;
        for (int i = 0; i < samples_per_unit; ++i) {
            phase += dphi;
            if (phase > 2.0 * M_PI) phase -= 2.0 * M_PI;
            w.samples.push_back(cfg.amplitude * (std::sin(phase) + voice.h2 * std::sin(2.0 * phase)) / norm);
        }
    }
    return w;
}

ToyDataset generate_toy_dataset(const std::string& out_dir, const ToyConfig& cfg, std::uint64_t seed) {
    if (cfg.n_phones < 2 || cfg.n_phones > 26) throw ConfigError("toy: n_phones must lie in [2, 26]");
    if (cfg.min_segment_units < 1 || cfg.max_segment_units < cfg.min_segment_units)
        throw ConfigError("toy: bad segment length range");

    std::filesystem::create_directories(out_dir + "/wav");
    Rng rng(seed);
    ToyDataset ds;

    const double unit_rate = static_cast<double>(cfg.sample_rate) / (2.0 * cfg.hop);
    for (int spk = 0; spk < cfg.n_speakers; ++spk) {
        for (int utt = 0; utt < cfg.utterances_per_speaker; ++utt) {
            std::vector<int> unit_phones;
            std::string transcript;
            int prev_phone = -1;
            for (int seg = 0; seg < cfg.segments_per_utterance; ++seg) {
                // No immediate repeats, so transcripts have real structure.
                int phone = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_phones)));
                if (phone == prev_phone) phone = (phone + 1) % cfg.n_phones;
                prev_phone = phone;
                const int len =
                    cfg.min_segment_units +
                    static_cast<int>(rng.below(
                        static_cast<std::uint64_t>(cfg.max_segment_units - cfg.min_segment_units + 1)));
                unit_phones.insert(unit_phones.end(), static_cast<std::size_t>(len), phone);
                if (!transcript.empty()) transcript.push_back(' ');
                transcript.push_back(static_cast<char>('a' + phone));
            }

            char id[32];
            std::snprintf(id, sizeof(id), "s%d_u%03d", spk, utt);

            const Waveform w = toy_waveform(unit_phones, spk, cfg);
            save_wav(out_dir + "/wav/" + id + ".wav", w);

            ManifestEntry entry;
            entry.id = id;
            entry.wav = std::string("wav/") + id + ".wav";
            entry.speaker = "spk" + std::to_string(spk);
            entry.transcript = transcript;
            entry.split = utt >= cfg.utterances_per_speaker - cfg.val_per_speaker ? "val" : "train";
            ds.manifest.push_back(std::move(entry));

            UnitSequence u;
            u.id = id;
            u.speaker = "spk" + std::to_string(spk);
            u.indices = unit_phones;
            u.frame_rate = unit_rate;
            ds.units.push_back(std::move(u));
        }
    }

    write_manifest(out_dir + "/manifest.jsonl", ds.manifest);
    write_units_jsonl(out_dir + "/units_ref.jsonl", ds.units);
    return ds;
}

}  // namespace zrlab
