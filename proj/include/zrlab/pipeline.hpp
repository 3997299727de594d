#pragma once

#include <string>
#include <vector>

#include "zrlab/config.hpp"
#include "zrlab/schedule.hpp"

namespace zrlab {

// Inputs one CLI subcommand needs beyond the run config. Paths left empty
// fall back to command defaults (or raise ConfigError when required).
struct PipelineOptions {
    RunConfig cfg;
    std::string out_dir = "out";
    bool f64 = false;

    std::string features_dir;     // prep output to reuse (train-*/encode)
    std::string units_path;       // train-vocoder / synth / eval-units
    std::string checkpoint_path;  // encode / synth
    std::string resume_path;      // train-* warm start
    std::string ref_path;         // eval-text lines / eval-audio manifest
    std::string hyp_path;         // eval-text lines / eval-audio wav dir
    std::string abx_items_path;   // eval-units optional ABX item file
    std::string lrrt_model = "vocoder";
    LrrtOptions lrrt;
    double temperature = 0.0;  // synth sampling; <= 0 decodes argmax
};

// Runs one subcommand end to end (including its run manifest) and returns
// the output paths it wrote. Errors surface as ConfigError / DataError /
// NumericError.
std::vector<std::string> run_command(const std::string& command, const PipelineOptions& opt);

std::vector<std::string> command_names();

}  // namespace zrlab
