#include "zrlab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <utility>

#include "zrlab/artifacts.hpp"
#include "zrlab/checkpoint.hpp"
#include "zrlab/metrics.hpp"
#include "zrlab/models.hpp"
#include "zrlab/train.hpp"
#include "zrlab/util.hpp"

namespace zrlab {

namespace fs = std::filesystem;

static std::string resolve_rel(const std::string& path, const std::string& base_file, const std::string& dir) {
    if (!path.empty() && fs::path(path).is_absolute()) return path;
    std::string base = dir;
    if (base.empty()) base = fs::path(base_file).parent_path().string();
    if (base.empty()) return path;
    return base + "/" + path;
}

// ---------------------------------------------------------------- prep

static std::vector<std::string> cmd_prep(const PipelineOptions& opt) {
    const RunConfig& cfg = opt.cfg;
    if (cfg.data.manifest.empty()) throw ConfigError("data.manifest: required for prep");
    const std::vector<ManifestEntry> entries = read_manifest(cfg.data.manifest);
    fs::create_directories(opt.out_dir + "/audio");
    fs::create_directories(opt.out_dir + "/features");

    struct Item {
        ManifestEntry entry;
        Waveform audio;
        MelSpectrogram raw;
    };
    std::vector<Item> items;
    const int win = cfg.features.win_samples();
    for (const auto& e : entries) {
        Waveform w = resample(load_wav(resolve_rel(e.wav, cfg.data.manifest, cfg.data.dir)),
                              cfg.features.sample_rate);
        std::vector<std::pair<std::string, Waveform>> pieces;
        if (cfg.data.chunk_seconds > 0.0) {
            const std::int64_t chunk =
                std::llround(cfg.data.chunk_seconds * static_cast<double>(cfg.features.sample_rate));
            if (chunk < win) throw ConfigError("data.chunk_seconds: chunk shorter than the analysis window");
            const std::int64_t n = static_cast<std::int64_t>(w.samples.size());
            int c = 0;
            for (std::int64_t s = 0; s < n; s += chunk) {
                const std::int64_t stop = std::min(n, s + chunk);
                if (stop - s < win) break;  // drop a tail shorter than one window
                char suffix[16];
                std::snprintf(suffix, sizeof suffix, "_c%03d", c++);
                pieces.emplace_back(e.id + suffix,
                                    Waveform{std::vector<double>(w.samples.begin() + s, w.samples.begin() + stop),
                                             w.sample_rate});
            }
        } else {
            pieces.emplace_back(e.id, std::move(w));
        }
        if (pieces.empty() || static_cast<int>(pieces.front().second.samples.size()) < win)
            throw DataError("prep: utterance " + e.id + " shorter than one analysis window");
        for (auto& [id, piece] : pieces) {
            Item it;
            it.entry = e;
            it.entry.id = id;
            if (pieces.size() > 1) it.entry.transcript.clear();  // transcripts do not partition across chunks
            it.entry.wav = "audio/" + id + ".wav";
            it.audio = std::move(piece);
            it.raw = log_mel(it.audio, cfg.features);
            items.push_back(std::move(it));
        }
    }

    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& it : items) {
        if (it.entry.split != "train") continue;
        for (double v : it.raw.values) {
            if (!any) { lo = hi = v; any = true; }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!any) throw DataError("prep: no train-split utterances in " + cfg.data.manifest);

    std::vector<std::string> outputs;
    std::vector<ManifestEntry> out_entries;
    for (auto& it : items) {
        const std::string wav_path = opt.out_dir + "/" + it.entry.wav;
        save_wav(wav_path, it.audio);
        const std::string mel_path = opt.out_dir + "/features/" + it.entry.id + ".mel";
        save_mel(mel_path, minmax_normalize(it.raw, std::make_pair(lo, hi)));
        outputs.push_back(wav_path);
        outputs.push_back(mel_path);
        out_entries.push_back(it.entry);
    }
    write_manifest(opt.out_dir + "/manifest.jsonl", out_entries);
    const nlohmann::json stats{{"min", lo},
                               {"max", hi},
                               {"config_hash", cfg.features.hash()},
                               {"n_utterances", static_cast<std::int64_t>(items.size())}};
    atomic_write_file(opt.out_dir + "/stats.json", stats.dump(2) + "\n");
    outputs.push_back(opt.out_dir + "/manifest.jsonl");
    outputs.push_back(opt.out_dir + "/stats.json");
    std::cout << "prep: " << items.size() << " utterances, log-mel range [" << format_double(lo) << ", "
              << format_double(hi) << "]\n";
    return outputs;
}

// ---------------------------------------------------------------- lrrt

static void cmd_lrrt(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    if (opt.lrrt_model == "vocoder" && opt.units_path.empty())
        throw ConfigError("lrrt: --units is required for the vocoder model");
    Dataset ds = load_dataset(opt.cfg, opt.features_dir, opt.units_path);
    const LrrtReport rep = run_model_lrrt(opt.cfg, ds, opt.lrrt_model, opt.lrrt, opt.f64);

    std::vector<std::vector<std::string>> rows;
    SvgSeries raw{"raw", {}, {}}, smoothed{"smoothed", {}, {}};
    for (const auto& r : rep.records) {
        rows.push_back({csv_cell(r.step), csv_cell(r.lr), csv_cell(r.raw_loss), csv_cell(r.smoothed_loss)});
        raw.x.push_back(r.lr);
        raw.y.push_back(r.raw_loss);
        smoothed.x.push_back(r.lr);
        smoothed.y.push_back(r.smoothed_loss);
    }
    const std::string csv = opt.out_dir + "/lrrt_curve.csv";
    const std::string svg = opt.out_dir + "/lrrt_curve.svg";
    const std::string js = opt.out_dir + "/lrrt.json";
    write_csv(csv, {"step", "lr", "raw_loss", "smoothed_loss"}, rows);
    write_svg_chart(svg, "lr range test (" + opt.lrrt_model + ")", "lr", "loss", {smoothed, raw}, true);
    const nlohmann::json summary{{"model", opt.lrrt_model},
                                 {"suggested_max_lr", rep.suggested_max_lr},
                                 {"exploded", rep.exploded},
                                 {"explosion_lr", rep.explosion_lr},
                                 {"levels", static_cast<std::int64_t>(rep.records.size())}};
    atomic_write_file(js, summary.dump(2) + "\n");
    outputs = {csv, svg, js};
    std::cout << "lrrt: suggested max lr " << format_double(rep.suggested_max_lr)
              << (rep.exploded ? " (explosion at " + format_double(rep.explosion_lr) + ")" : " (no explosion)")
              << "\n";
}

// ---------------------------------------------------------------- training

template <typename S>
static void train_encoder_impl(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    Dataset ds = load_dataset(opt.cfg, opt.features_dir);
    EncoderRun<S> run = run_train_encoder<S>(opt.cfg, ds, opt.out_dir, opt.resume_path);
    outputs = {opt.out_dir + "/encoder.zvck", opt.out_dir + "/train_encoder_loss.csv",
               opt.out_dir + "/train_encoder_loss.svg"};
    std::cout << "train-encoder: " << opt.cfg.sched.total_steps << " steps, final loss "
              << format_double(run.final_loss) << ", val cpc accuracy " << format_double(run.val_accuracy)
              << "\n";
}

template <typename S>
static void train_vocoder_impl(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    if (opt.units_path.empty()) throw ConfigError("train-vocoder: --units is required");
    Dataset ds = load_dataset(opt.cfg, opt.features_dir, opt.units_path);
    VocoderRun<S> run = run_train_vocoder<S>(opt.cfg, ds, opt.out_dir, opt.resume_path);
    // Synthesis needs the speaker table that fixed the embedding rows.
    run.checkpoint.config["speakers"] = ds.speakers;
    save_checkpoint(opt.out_dir + "/vocoder.zvck", run.checkpoint);
    outputs = {opt.out_dir + "/vocoder.zvck", opt.out_dir + "/train_vocoder_loss.csv",
               opt.out_dir + "/train_vocoder_loss.svg"};
    std::cout << "train-vocoder: " << opt.cfg.sched.total_steps << " steps, final loss "
              << format_double(run.final_loss) << ", val nll " << format_double(run.val_nll)
              << " nats/sample\n";
}

// ---------------------------------------------------------------- encode / synth

template <typename S>
static void encode_impl(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    const RunConfig& cfg = opt.cfg;
    if (opt.checkpoint_path.empty()) throw ConfigError("encode: --checkpoint is required");
    Dataset ds = load_dataset(cfg, opt.features_dir);
    const Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    Rng rng(cfg.seed);
    Encoder<S> enc(cfg.encoder, rng);
    restore_params<S>(ck, enc.params());

    std::vector<const LoadedUtterance*> all;
    for (const auto& u : ds.train) all.push_back(&u);
    for (const auto& u : ds.val) all.push_back(&u);
    std::sort(all.begin(), all.end(),
              [](const LoadedUtterance* a, const LoadedUtterance* b) { return a->entry.id < b->entry.id; });

    const double frame_rate = static_cast<double>(cfg.features.sample_rate) / (2.0 * cfg.features.hop);
    std::vector<UnitSequence> units;
    for (const LoadedUtterance* u : all) {
        const int m_count = u->mel.n_mels, t_count = u->mel.n_frames;
        Tensor<S> mel({1, m_count, t_count});
        for (int m = 0; m < m_count; ++m)
            for (int f = 0; f < t_count; ++f)
                mel.data[static_cast<size_t>(m) * t_count + f] = static_cast<S>(u->mel.at(m, f));
        units.push_back(enc.encode_units(mel, u->entry.id, u->entry.speaker, frame_rate));
    }
    const std::string path = opt.out_dir + "/units.jsonl";
    write_units_jsonl(path, units);
    outputs.push_back(path);
    std::int64_t total = 0;
    for (const auto& u : units) total += static_cast<std::int64_t>(u.indices.size());
    std::cout << "encode: " << units.size() << " utterances, " << total << " units at "
              << format_double(frame_rate) << " Hz\n";
}

template <typename S>
static void synth_impl(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    const RunConfig& cfg = opt.cfg;
    if (opt.checkpoint_path.empty()) throw ConfigError("synth: --checkpoint is required");
    if (opt.units_path.empty()) throw ConfigError("synth: --units is required");
    const Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    Rng rng(cfg.seed);
    Vocoder<S> voc(cfg.vocoder, rng);
    restore_params<S>(ck, voc.params());

    const std::vector<UnitSequence> units = read_units_jsonl(opt.units_path);
    std::vector<std::string> speakers;
    if (ck.config.contains("speakers")) {
        speakers = ck.config["speakers"].get<std::vector<std::string>>();
    } else {
        std::set<std::string> s;
        for (const auto& u : units) s.insert(u.speaker);
        speakers.assign(s.begin(), s.end());
    }

    fs::create_directories(opt.out_dir + "/synth");
    for (const auto& u : units) {
        const auto it = std::find(speakers.begin(), speakers.end(), u.speaker);
        if (it == speakers.end())
            throw DataError("synth: unknown speaker '" + u.speaker + "' for utterance " + u.id);
        const Waveform w = voc.generate(u.indices, static_cast<int>(it - speakers.begin()), opt.temperature, rng);
        const std::string path = opt.out_dir + "/synth/" + u.id + ".wav";
        save_wav(path, w);
        outputs.push_back(path);
    }
    std::cout << "synth: " << units.size() << " utterances, " << voc.samples_per_unit()
              << " samples per unit\n";
}

// ---------------------------------------------------------------- eval

static std::vector<metrics::AbxItem> read_abx_items(const std::string& path) {
    std::vector<metrics::AbxItem> items;
    for (const auto& row : read_jsonl(path)) {
        if (!row.contains("category") || !row.contains("speaker") || !row.contains("features"))
            throw DataError("abx items " + path + ": rows need category, speaker, features");
        metrics::AbxItem it;
        it.category = row["category"].get<std::string>();
        it.speaker = row["speaker"].get<std::string>();
        for (const auto& frame : row["features"]) it.features.push_back(frame.get<std::vector<double>>());
        if (it.features.empty()) throw DataError("abx items " + path + ": empty feature sequence");
        items.push_back(std::move(it));
    }
    return items;
}

static void cmd_eval_units(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    if (opt.units_path.empty()) throw ConfigError("eval-units: --units is required");
    const std::vector<UnitSequence> units = read_units_jsonl(opt.units_path);
    if (units.empty()) throw DataError("eval-units: empty units file " + opt.units_path);

    double duration = 0.0;
    std::int64_t total = 0;
    std::set<int> used;
    for (const auto& u : units) {
        if (u.frame_rate <= 0.0) throw DataError("eval-units: sequence " + u.id + " has no frame rate");
        duration += static_cast<double>(u.indices.size()) / u.frame_rate;
        total += static_cast<std::int64_t>(u.indices.size());
        used.insert(u.indices.begin(), u.indices.end());
    }

    const bool collapse = opt.cfg.eval.collapse_runs;
    std::vector<metrics::MetricReport> reports;
    reports.push_back({"bitrate", metrics::bitrate(units, duration, collapse), "bits/s",
                       static_cast<long>(units.size()), collapse ? "collapse_runs" : "raw"});
    reports.push_back({"unit_rate", static_cast<double>(total) / duration, "units/s",
                       static_cast<long>(units.size()), ""});
    reports.push_back({"distinct_units", static_cast<double>(used.size()), "types",
                       static_cast<long>(units.size()), ""});

    if (!opt.abx_items_path.empty()) {
        metrics::AbxOptions ao;
        ao.mode = opt.cfg.eval.abx_mode;
        ao.metric = opt.cfg.eval.abx_metric;
        ao.budget = static_cast<std::size_t>(opt.cfg.eval.abx_budget);
        ao.seed = opt.cfg.seed;
        const metrics::AbxResult res = metrics::abx_error(read_abx_items(opt.abx_items_path), ao);
        const std::string mode = ao.mode == metrics::AbxMode::within ? "within" : "across";
        reports.push_back({"abx_error", res.error_percent, "%", static_cast<long>(res.triplets),
                           mode + "/" + metrics::to_string(ao.metric) +
                               (res.subsampled ? "/subsampled" : "/exhaustive")});
    }

    const std::string path = opt.out_dir + "/eval_units.csv";
    write_metric_csv(path, reports);
    outputs.push_back(path);
    for (const auto& r : reports)
        std::cout << "eval-units: " << r.name << " " << format_double(r.value) << " " << r.units << "\n";
}

static MelSpectrogram trim_frames(const MelSpectrogram& m, int frames) {
    if (m.n_frames == frames) return m;
    MelSpectrogram out = m;
    out.n_frames = frames;
    out.values.resize(static_cast<size_t>(m.n_mels) * frames);
    for (int r = 0; r < m.n_mels; ++r)
        for (int f = 0; f < frames; ++f) out.values[static_cast<size_t>(r) * frames + f] = m.at(r, f);
    return out;
}

static void cmd_eval_audio(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    const RunConfig& cfg = opt.cfg;
    if (opt.ref_path.empty() || opt.hyp_path.empty())
        throw ConfigError("eval-audio: --ref manifest and --hyp wav directory are required");
    const std::vector<ManifestEntry> entries = read_manifest(opt.ref_path);

    std::vector<std::vector<std::string>> rows;
    double sum_mse = 0.0, sum_psnr = 0.0, sum_ssim = 0.0;
    for (const auto& e : entries) {
        const Waveform ref =
            resample(load_wav(resolve_rel(e.wav, opt.ref_path, cfg.data.dir)), cfg.features.sample_rate);
        const Waveform hyp = resample(load_wav(opt.hyp_path + "/" + e.id + ".wav"), cfg.features.sample_rate);
        const MelSpectrogram mr = log_mel(ref, cfg.features);
        const MelSpectrogram mh = log_mel(hyp, cfg.features);
        // Reference stats normalize both grids so identical audio compares equal.
        const double lo = *std::min_element(mr.values.begin(), mr.values.end());
        const double hi = *std::max_element(mr.values.begin(), mr.values.end());
        const int frames = std::min(mr.n_frames, mh.n_frames);
        if (frames < 1) throw DataError("eval-audio: utterance " + e.id + " has no overlapping frames");
        const MelSpectrogram nr = trim_frames(minmax_normalize(mr, std::make_pair(lo, hi)), frames);
        const MelSpectrogram nh = trim_frames(minmax_normalize(mh, std::make_pair(lo, hi)), frames);
        const double mse = metrics::ls_mse(nr, nh);
        const double ps = metrics::psnr(nr, nh);
        const double ss = metrics::ssim(nr, nh);
        rows.push_back({e.id, csv_cell(mse), csv_cell(ps), csv_cell(ss)});
        sum_mse += mse;
        sum_psnr += ps;
        sum_ssim += ss;
    }
    const double n = static_cast<double>(entries.size());
    rows.push_back({"mean", csv_cell(sum_mse / n), csv_cell(sum_psnr / n), csv_cell(sum_ssim / n)});
    const std::string path = opt.out_dir + "/eval_audio.csv";
    write_csv(path, {"id", "ls_mse", "psnr_db", "ssim"}, rows);
    outputs.push_back(path);
    std::cout << "eval-audio: " << entries.size() << " pairs, mean ls-mse " << format_double(sum_mse / n)
              << ", mean psnr " << format_double(sum_psnr / n) << " dB, mean ssim "
              << format_double(sum_ssim / n) << "\n";
}

static std::vector<std::string> read_lines(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = nl == std::string::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return lines;
}

static void cmd_eval_text(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    if (opt.ref_path.empty() || opt.hyp_path.empty())
        throw ConfigError("eval-text: --ref and --hyp line files are required");
    const std::vector<std::string> refs = read_lines(opt.ref_path);
    if (refs.empty()) throw DataError("eval-text: reference file is empty: " + opt.ref_path);
    const std::vector<std::string> hyps = read_lines(opt.hyp_path);
    if (refs.size() != hyps.size())
        throw DataError("eval-text: line count mismatch (ref " + std::to_string(refs.size()) + ", hyp " +
                        std::to_string(hyps.size()) + ")");

    std::vector<std::pair<std::string, std::string>> pairs;
    for (size_t i = 0; i < refs.size(); ++i) {
        if (trim(refs[i]).empty())
            throw DataError("eval-text: reference line " + std::to_string(i + 1) + " is empty");
        pairs.emplace_back(refs[i], hyps[i]);
    }

    double cer_sum = 0.0, wer_sum = 0.0;
    for (const auto& [r, h] : pairs) {
        cer_sum += metrics::error_rate(r, h, metrics::ErrorUnit::chars);
        wer_sum += metrics::error_rate(r, h, metrics::ErrorUnit::words);
    }
    const long n = static_cast<long>(pairs.size());
    const std::vector<metrics::MetricReport> reports{
        {"cer", metrics::corpus_error_rate(pairs, metrics::ErrorUnit::chars), "%", n, "pooled"},
        {"wer", metrics::corpus_error_rate(pairs, metrics::ErrorUnit::words), "%", n, "pooled"},
        {"cer_utt_mean", cer_sum / n, "%", n, "mean over utterances"},
        {"wer_utt_mean", wer_sum / n, "%", n, "mean over utterances"},
    };
    const std::string path = opt.out_dir + "/eval_text.csv";
    write_metric_csv(path, reports);
    outputs.push_back(path);
    std::cout << "eval-text: cer " << format_double(reports[0].value) << "%, wer "
              << format_double(reports[1].value) << "% over " << n << " lines\n";
}

// ---------------------------------------------------------------- sched-preview

static void cmd_sched_preview(const PipelineOptions& opt, std::vector<std::string>& outputs) {
    const ScheduleConfig& sc = opt.cfg.sched;
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<size_t>(sc.total_steps) + 1);
    SvgSeries series{to_string(sc.kind), {}, {}};
    const std::int64_t stride = std::max<std::int64_t>(1, sc.total_steps / 2000);
    double peak_lr = 0.0;
    std::int64_t peak_step = 0;
    for (std::int64_t s = 0; s <= sc.total_steps; ++s) {
        const double lr = lr_at(sc, s);
        rows.push_back({csv_cell(s), csv_cell(lr)});
        if (lr > peak_lr) { peak_lr = lr; peak_step = s; }
        if (s % stride == 0 || s == sc.total_steps) {
            series.x.push_back(static_cast<double>(s));
            series.y.push_back(lr);
        }
    }
    // Make sure the plotted curve contains the exact peak sample.
    if (peak_step % stride != 0) {
        series.x.push_back(static_cast<double>(peak_step));
        series.y.push_back(peak_lr);
        for (size_t i = series.x.size() - 1; i > 0 && series.x[i - 1] > series.x[i]; --i) {
            std::swap(series.x[i - 1], series.x[i]);
            std::swap(series.y[i - 1], series.y[i]);
        }
    }
    const std::string csv = opt.out_dir + "/sched_preview.csv";
    const std::string svg = opt.out_dir + "/sched_preview.svg";
    write_csv(csv, {"step", "lr"}, rows);
    write_svg_chart(svg, "lr schedule: " + to_string(sc.kind), "step", "lr", {series});
    outputs = {csv, svg};
    std::cout << "sched-preview: " << to_string(sc.kind) << ", peak lr " << format_double(peak_lr)
              << " at step " << peak_step << "\n";
}

// ---------------------------------------------------------------- dispatch

std::vector<std::string> command_names() {
    return {"prep",  "lrrt",  "train-encoder", "train-vocoder", "encode",
            "synth", "eval-units", "eval-audio", "eval-text", "sched-preview"};
}

std::vector<std::string> run_command(const std::string& command, const PipelineOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(opt.out_dir);
    std::vector<std::string> outputs;
    if (command == "prep") {
        outputs = cmd_prep(opt);
    } else if (command == "lrrt") {
        cmd_lrrt(opt, outputs);
    } else if (command == "train-encoder") {
        opt.f64 ? train_encoder_impl<double>(opt, outputs) : train_encoder_impl<float>(opt, outputs);
    } else if (command == "train-vocoder") {
        opt.f64 ? train_vocoder_impl<double>(opt, outputs) : train_vocoder_impl<float>(opt, outputs);
    } else if (command == "encode") {
        opt.f64 ? encode_impl<double>(opt, outputs) : encode_impl<float>(opt, outputs);
    } else if (command == "synth") {
        opt.f64 ? synth_impl<double>(opt, outputs) : synth_impl<float>(opt, outputs);
    } else if (command == "eval-units") {
        cmd_eval_units(opt, outputs);
    } else if (command == "eval-audio") {
        cmd_eval_audio(opt, outputs);
    } else if (command == "eval-text") {
        cmd_eval_text(opt, outputs);
    } else if (command == "sched-preview") {
        cmd_sched_preview(opt, outputs);
    } else {
        throw ConfigError("unknown command: " + command);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run_manifest(opt.out_dir, command, opt.cfg.to_json(), opt.cfg.seed, wall, outputs);
    return outputs;
}

}  // namespace zrlab
