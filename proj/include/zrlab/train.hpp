#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zrlab/artifacts.hpp"
#include "zrlab/checkpoint.hpp"
#include "zrlab/config.hpp"
#include "zrlab/models.hpp"
#include "zrlab/schedule.hpp"

namespace zrlab {

// ---------------------------------------------------------------- dataset

struct LoadedUtterance {
    ManifestEntry entry;
    Waveform audio;          // at cfg.features.sample_rate
    MelSpectrogram mel;      // min-max normalized with the train-split stats
    std::vector<int> units;  // attached from a units file; empty when absent
    int speaker_idx = 0;
};

struct Dataset {
    std::vector<LoadedUtterance> train, val;
    std::vector<std::string> speakers;  // sorted unique ids; index = embedding row
    double norm_min = 0.0, norm_max = 0.0;
};

// Loads audio + features for every manifest row. With features_dir set, mel
// caches <features_dir>/<id>.mel are used; otherwise features are computed
// here with global min-max stats over the train split. units_path attaches
// unit streams by utterance id.
Dataset load_dataset(const RunConfig& cfg, const std::string& features_dir = "",
                     const std::string& units_path = "");

// ---------------------------------------------------------------- loops

struct TrainLogRow {
    std::int64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    double aux = 0.0;  // encoder: mean CPC accuracy; vocoder: val NLL at log points
};

void write_loss_artifacts(const std::string& out_dir, const std::string& stem,
                          const std::vector<TrainLogRow>& log, const std::string& aux_name);

template <typename S>
struct EncoderRun {
    Encoder<S> model;
    std::vector<TrainLogRow> log;
    double final_loss = 0.0;
    double val_accuracy = 0.0;  // mean CPC accuracy on validation windows
    Checkpoint checkpoint;      // final state
};

// Deterministic seeded loop: Adam, lr from lr_at, global-norm clipping,
// dead-code reinit, CSV log rows every train.log_every steps. A non-finite
// loss raises NumericError naming the step, lr, and batch. With out_dir set,
// periodic checkpoints land in <out_dir>/.
template <typename S>
EncoderRun<S> run_train_encoder(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir = "",
                                const std::string& resume_path = "");

template <typename S>
struct VocoderRun {
    Vocoder<S> model;
    std::vector<TrainLogRow> log;
    double final_loss = 0.0;
    double val_nll = 0.0;  // mean per-sample NLL (nats) on validation windows
    Checkpoint checkpoint;
};

template <typename S>
VocoderRun<S> run_train_vocoder(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir = "",
                                const std::string& resume_path = "");

// Validation NLL of an existing vocoder over the deterministic window grid.
template <typename S>
double vocoder_val_nll(Vocoder<S>& voc, const RunConfig& cfg, const Dataset& ds);

// CPC accuracy (mean over prediction steps, weighted by pair counts) on the
// validation windows, negatives drawn from a fixed-seed stream.
template <typename S>
double encoder_val_accuracy(Encoder<S>& enc, const RunConfig& cfg, const Dataset& ds);

// LR range test driving one fresh model; model_kind is "encoder" or
// "vocoder".
LrrtReport run_model_lrrt(const RunConfig& cfg, const Dataset& ds, const std::string& model_kind,
                          const LrrtOptions& opts, bool f64);

}  // namespace zrlab
