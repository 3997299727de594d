#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "zrlab/features.hpp"
#include "zrlab/metrics.hpp"
#include "zrlab/models.hpp"
#include "zrlab/schedule.hpp"

namespace zrlab {

// ---------------------------------------------------------------- toml subset

// Value model for the config format: strings, integers, floats, booleans,
// and single-line arrays. Tables appear as "section.key" flattened paths.
struct TomlValue {
    enum class Kind { string_, integer, floating, boolean, array };
    Kind kind = Kind::string_;
    std::string s;
    std::int64_t i = 0;
    double f = 0.0;
    bool b = false;
    std::vector<TomlValue> items;
};

std::map<std::string, TomlValue> parse_toml(const std::string& text);

// ---------------------------------------------------------------- run config

struct DataConfig {
    std::string manifest;
    std::string dir;
    double chunk_seconds = 0.0;  // 0 = no chunking
};

struct TrainConfig {
    int batch_size = 8;
    std::int64_t checkpoint_every = 1000;
    std::int64_t log_every = 50;
    double clip_norm = 1.0;
    int val_batches = 4;
    std::int64_t codebook_patience = 200;  // dead-code reinit threshold
};

struct EvalConfig {
    metrics::FrameMetric abx_metric = metrics::FrameMetric::cosine;
    metrics::AbxMode abx_mode = metrics::AbxMode::within;
    std::int64_t abx_budget = 20000;
    bool collapse_runs = false;
};

struct RunConfig {
    std::string preset;
    std::uint64_t seed = 0;
    DataConfig data;
    FeatureConfig features;
    int frames = 32;  // mel frames per training window
    EncoderConfig encoder;
    VocoderConfig vocoder;
    ScheduleConfig sched;
    TrainConfig train;
    EvalConfig eval;

    // Syncs the derived fields (vocoder vocab/rate/hop, encoder mel count),
    // then runs every cross-field check. Errors name the config field.
    void finalize();

    nlohmann::json to_json() const;
    std::string hash() const;  // fnv1a-64 hex of the canonical JSON
};

// Named preset table; every (scale chain, hop, frames, scheduler, steps)
// combination the experiments use is expressible as one preset.
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

// Parse a TOML file over preset defaults. A nonempty preset_override wins
// over the file's own `preset` key. Unknown keys are errors.
RunConfig parse_config(const std::string& path, const std::string& preset_override = "");

}  // namespace zrlab
