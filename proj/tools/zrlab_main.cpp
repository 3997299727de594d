#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "zrlab/kernels.hpp"
#include "zrlab/pipeline.hpp"
#include "zrlab/util.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "out";
    int threads = 1;
    std::string precision = "f32";
    std::string upsampler;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "TOML run config");
    cmd->add_option("--preset", a.preset, "named preset (overrides the config file's preset key)");
    cmd->add_option("--seed", a.seed, "RNG seed")->each([&a](const std::string&) { a.seed_set = true; });
    cmd->add_option("--out-dir", a.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--threads", a.threads, "worker threads for the parallel kernels")->capture_default_str();
    cmd->add_option("--precision", a.precision, "model precision")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();
    cmd->add_option("--upsampler", a.upsampler, "override both vocoder upsamplers")
        ->check(CLI::IsMember({"nearest", "linear", "fourier_tile", "fourier_pad"}));
}

zrlab::PipelineOptions build_options(const CommonArgs& a) {
    zrlab::PipelineOptions opt;
    if (!a.config_path.empty())
        opt.cfg = zrlab::parse_config(a.config_path, a.preset);
    else if (!a.preset.empty())
        opt.cfg = zrlab::preset_config(a.preset);
    else
        opt.cfg = zrlab::preset_config("baseline");
    if (a.seed_set) opt.cfg.seed = a.seed;
    if (!a.upsampler.empty()) {
        opt.cfg.vocoder.up1 = zrlab::upsampler_from_string(a.upsampler);
        opt.cfg.vocoder.up2 = zrlab::upsampler_from_string(a.upsampler);
    }
    opt.cfg.finalize();
    opt.out_dir = a.out_dir;
    opt.f64 = a.precision == "f64";
    if (a.threads < 1) throw zrlab::ConfigError("--threads must be >= 1");
    zrlab::set_num_threads(a.threads);
    return opt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spoken-unit discovery and resynthesis lab"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd = nullptr;
        CommonArgs common;
        std::string features_dir, units, checkpoint, resume, ref, hyp, abx_items;
        std::string lrrt_model = "vocoder";
        zrlab::LrrtOptions lrrt;
        double temperature = 0.0;
    };
    std::map<std::string, Sub> subs;
    for (const std::string& name : zrlab::command_names()) {
        Sub& s = subs[name];
        s.cmd = app.add_subcommand(name, "");
        add_common(s.cmd, s.common);
    }

    subs["prep"].cmd->description("resample, extract normalized log-mel features, write caches");
    subs["lrrt"].cmd->description("exponential lr sweep on a fresh model; suggests a peak lr");
    subs["train-encoder"].cmd->description("train the vq-cpc unit encoder");
    subs["train-vocoder"].cmd->description("train the unit-to-waveform vocoder");
    subs["encode"].cmd->description("discretize utterances into unit streams");
    subs["synth"].cmd->description("generate waveforms from unit streams");
    subs["eval-units"].cmd->description("bitrate (and optional abx) of a unit inventory");
    subs["eval-audio"].cmd->description("log-mel mse / psnr / ssim between two waveform sets");
    subs["eval-text"].cmd->description("character and word error rates over paired line files");
    subs["sched-preview"].cmd->description("dump the exact per-step lr table for the configured schedule");

    for (const char* name : {"lrrt", "train-encoder", "train-vocoder", "encode"})
        subs[name].cmd->add_option("--features", subs[name].features_dir,
                                   "feature cache directory from prep (features are recomputed when absent)");
    for (const char* name : {"lrrt", "train-vocoder", "synth", "eval-units"})
        subs[name].cmd->add_option("--units", subs[name].units, "units JSONL file");
    for (const char* name : {"encode", "synth"})
        subs[name].cmd->add_option("--checkpoint", subs[name].checkpoint, "model checkpoint (.zvck)");
    for (const char* name : {"train-encoder", "train-vocoder"})
        subs[name].cmd->add_option("--resume", subs[name].resume, "checkpoint to continue from");

    {
        Sub& s = subs["lrrt"];
        s.cmd->add_option("--model", s.lrrt_model, "encoder or vocoder")->capture_default_str();
        s.cmd->add_option("--lr-start", s.lrrt.start_lr, "first lr level")->capture_default_str();
        s.cmd->add_option("--lr-end", s.lrrt.end_lr, "last lr level")->capture_default_str();
        s.cmd->add_option("--lrrt-steps", s.lrrt.total_steps, "optimization step budget")->capture_default_str();
        s.cmd->add_option("--step-rate", s.lrrt.step_rate, "steps spent per lr level")->capture_default_str();
    }
    subs["synth"].cmd->add_option("--temperature", subs["synth"].temperature,
                                  "sampling temperature; <= 0 decodes argmax")
        ->capture_default_str();
    subs["eval-units"].cmd->add_option("--abx-items", subs["eval-units"].abx_items,
                                       "JSONL of {category, speaker, features} rows");
    for (const char* name : {"eval-audio", "eval-text"}) {
        subs[name].cmd->add_option("--ref", subs[name].ref, "reference input")->required();
        subs[name].cmd->add_option("--hyp", subs[name].hyp, "hypothesis input")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto& [name, s] : subs) {
            if (!s.cmd->parsed()) continue;
            zrlab::PipelineOptions opt = build_options(s.common);
            opt.features_dir = s.features_dir;
            opt.units_path = s.units;
            opt.checkpoint_path = s.checkpoint;
            opt.resume_path = s.resume;
            opt.ref_path = s.ref;
            opt.hyp_path = s.hyp;
            opt.abx_items_path = s.abx_items;
            opt.lrrt_model = s.lrrt_model;
            opt.lrrt = s.lrrt;
            opt.temperature = s.temperature;
            zrlab::run_command(name, opt);
            return 0;
        }
    } catch (const zrlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const zrlab::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const zrlab::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
