#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zrlab/artifacts.hpp"
#include "zrlab/audio.hpp"
#include "zrlab/units.hpp"

namespace zrlab {

// Synthetic multi-speaker corpus: utterances are sequences of tone segments
// ("phones") with speaker-specific timbre and pitch shift. Every utterance
// ships with its ground-truth unit stream (one phone id per unit frame), so
// vocoder experiments do not depend on encoder quality.
struct ToyConfig {
    int sample_rate = 4000;
    int hop = 16;  // unit rate = sample_rate / (2*hop) = 125 Hz
    int n_speakers = 4;
    int n_phones = 16;
    int utterances_per_speaker = 12;
    int segments_per_utterance = 6;
    int min_segment_units = 3;
    int max_segment_units = 8;
    int val_per_speaker = 2;  // trailing utterances tagged "val"
    double amplitude = 0.4;
};

struct ToyDataset {
    std::vector<ManifestEntry> manifest;
    std::vector<UnitSequence> units;  // ground truth, aligned with manifest
};

// Writes wav/<id>.wav, manifest.jsonl, and units_ref.jsonl under out_dir.
ToyDataset generate_toy_dataset(const std::string& out_dir, const ToyConfig& cfg, std::uint64_t seed);

// The waveform for one utterance given its per-unit phone ids; exposed so
// tests can synthesize matched references.
Waveform toy_waveform(const std::vector<int>& unit_phones, int speaker, const ToyConfig& cfg);

}  // namespace zrlab
