#include "zrlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <utility>

#include "zrlab/util.hpp"

namespace zrlab {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- dataset

static std::string resolve_wav(const std::string& wav, const DataConfig& data, const std::string& manifest) {
    if (!wav.empty() && fs::path(wav).is_absolute()) return wav;
    std::string base = data.dir;
    if (base.empty()) base = fs::path(manifest).parent_path().string();
    if (base.empty()) return wav;
    return base + "/" + wav;
}

Dataset load_dataset(const RunConfig& cfg, const std::string& features_dir, const std::string& units_path) {
    if (cfg.data.manifest.empty()) throw ConfigError("data.manifest: required for this command");
    const std::vector<ManifestEntry> entries = read_manifest(cfg.data.manifest);

    std::map<std::string, std::vector<int>> units_by_id;
    if (!units_path.empty()) {
        for (auto& u : read_units_jsonl(units_path)) units_by_id[u.id] = u.indices;
    }

    Dataset ds;
    {
        std::set<std::string> spk;
        for (const auto& e : entries) spk.insert(e.speaker);
        ds.speakers.assign(spk.begin(), spk.end());
    }
    auto speaker_index = [&](const std::string& s) {
        return static_cast<int>(std::lower_bound(ds.speakers.begin(), ds.speakers.end(), s) - ds.speakers.begin());
    };

    std::vector<LoadedUtterance> loaded;
    loaded.reserve(entries.size());
    for (const auto& e : entries) {
        LoadedUtterance u;
        u.entry = e;
        u.audio = resample(load_wav(resolve_wav(e.wav, cfg.data, cfg.data.manifest)), cfg.features.sample_rate);
        u.speaker_idx = speaker_index(e.speaker);
        auto it = units_by_id.find(e.id);
        if (it != units_by_id.end()) u.units = it->second;
        if (!features_dir.empty()) {
            u.mel = load_mel(features_dir + "/" + e.id + ".mel");
            if (u.mel.norm != NormState::minmax)
                throw DataError("feature cache " + e.id + ".mel: expected normalized features");
        }
        loaded.push_back(std::move(u));
    }

    if (features_dir.empty()) {
        // Global min-max over the train split; val/test reuse the same stats.
        double lo = 0.0, hi = 0.0;
        bool any = false;
        std::vector<MelSpectrogram> raw(loaded.size());
        for (size_t i = 0; i < loaded.size(); ++i) {
            raw[i] = log_mel(loaded[i].audio, cfg.features);
            if (loaded[i].entry.split == "train") {
                for (double v : raw[i].values) {
                    if (!any) { lo = hi = v; any = true; }
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
        }
        if (!any) throw DataError("dataset: no train-split utterances in " + cfg.data.manifest);
        for (size_t i = 0; i < loaded.size(); ++i)
            loaded[i].mel = minmax_normalize(raw[i], std::make_pair(lo, hi));
        ds.norm_min = lo;
        ds.norm_max = hi;
    } else if (!loaded.empty()) {
        ds.norm_min = loaded.front().mel.norm_min;
        ds.norm_max = loaded.front().mel.norm_max;
    }

    for (auto& u : loaded) {
        if (u.entry.split == "train")
            ds.train.push_back(std::move(u));
        else
            ds.val.push_back(std::move(u));
    }
    if (ds.train.empty()) throw DataError("dataset: no train-split utterances in " + cfg.data.manifest);
    return ds;
}

// ---------------------------------------------------------------- batches

template <typename S>
static Tensor<S> encoder_batch(const RunConfig& cfg, const std::vector<LoadedUtterance>& pool, Rng& rng,
                               std::vector<int>* picked) {
    const int B = cfg.train.batch_size;
    const int M = cfg.features.n_mels;
    const int F = cfg.frames;
    Tensor<S> mel({B, M, F});
    for (int b = 0; b < B; ++b) {
        const int ui = static_cast<int>(rng.below(pool.size()));
        if (picked) picked->push_back(ui);
        const auto& utt = pool[ui];
        TrainingWindow w = sample_training_window(utt.mel, utt.audio, F, cfg.features.hop, rng);
        for (int m = 0; m < M; ++m)
            for (int f = 0; f < F; ++f)
                mel.data[(static_cast<size_t>(b) * M + m) * F + f] = static_cast<S>(w.mel.at(m, f));
    }
    return mel;
}

struct VocoderBatch {
    std::vector<std::vector<int>> units;
    std::vector<std::vector<int>> teacher;
    std::vector<int> speakers;
    std::vector<int> picked;
};

static VocoderBatch sample_vocoder_batch(const RunConfig& cfg, const std::vector<LoadedUtterance>& pool,
                                         Rng& rng) {
    const int B = cfg.train.batch_size;
    const int W = cfg.frames / 2;  // units per window: one unit covers two frames
    const int spu = cfg.vocoder.chain.s1 * cfg.vocoder.chain.s2;
    VocoderBatch vb;
    for (int b = 0; b < B; ++b) {
        const int ui = static_cast<int>(rng.below(pool.size()));
        const auto& utt = pool[ui];
        if (utt.units.empty())
            throw DataError("train-vocoder: utterance " + utt.entry.id + " has no unit stream");
        const std::int64_t usable =
            std::min<std::int64_t>(static_cast<std::int64_t>(utt.units.size()),
                                   static_cast<std::int64_t>(utt.audio.samples.size()) / spu);
        if (usable < W)
            throw DataError("train-vocoder: utterance " + utt.entry.id + " shorter than one window");
        const std::int64_t u0 = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(usable - W + 1)));
        vb.units.emplace_back(utt.units.begin() + u0, utt.units.begin() + u0 + W);
        std::vector<double> slice(utt.audio.samples.begin() + u0 * spu,
                                  utt.audio.samples.begin() + (u0 + W) * spu);
        vb.teacher.push_back(mulaw_encode(slice));
        vb.speakers.push_back(utt.speaker_idx);
        vb.picked.push_back(ui);
    }
    return vb;
}

// Deterministic non-overlapping validation windows (falls back to the train
// split when no val rows exist).
static const std::vector<LoadedUtterance>& val_pool(const Dataset& ds) {
    return ds.val.empty() ? ds.train : ds.val;
}

// ---------------------------------------------------------------- logging

void write_loss_artifacts(const std::string& out_dir, const std::string& stem,
                          const std::vector<TrainLogRow>& log, const std::string& aux_name) {
    std::vector<std::vector<std::string>> rows;
    SvgSeries loss_series{"loss", {}, {}};
    for (const auto& r : log) {
        rows.push_back({csv_cell(r.step), csv_cell(r.lr), csv_cell(r.loss), csv_cell(r.aux)});
        loss_series.x.push_back(static_cast<double>(r.step));
        loss_series.y.push_back(r.loss);
    }
    write_csv(out_dir + "/" + stem + "_loss.csv", {"step", "lr", "loss", aux_name}, rows);
    write_svg_chart(out_dir + "/" + stem + "_loss.svg", stem + " training loss", "step", "loss",
                    {loss_series});
}

// ---------------------------------------------------------------- encoder

template <typename S>
static double weighted_cpc_accuracy(const CpcResult<S>& cpc, int batch, int tprime) {
    double num = 0.0, den = 0.0;
    for (size_t k = 0; k < cpc.accuracy.size(); ++k) {
        const double w = static_cast<double>(batch) * std::max(0, tprime - static_cast<int>(k) - 1);
        num += cpc.accuracy[k] * w;
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

template <typename S>
double encoder_val_accuracy(Encoder<S>& enc, const RunConfig& cfg, const Dataset& ds) {
    const auto& pool = val_pool(ds);
    const int M = cfg.features.n_mels;
    const int F = cfg.frames;
    std::vector<std::pair<int, int>> windows;  // (utterance, start frame)
    for (size_t i = 0; i < pool.size(); ++i)
        for (int f = 0; f + F <= pool[i].mel.n_frames; f += F) windows.emplace_back(static_cast<int>(i), f);
    if (windows.empty()) throw DataError("encoder validation: every utterance is shorter than one window");

    Rng neg_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    double num = 0.0, den = 0.0;
    const int B = cfg.train.batch_size;
    for (size_t w0 = 0; w0 < windows.size(); w0 += B) {
        const int b_count = static_cast<int>(std::min<size_t>(B, windows.size() - w0));
        Tensor<S> mel({b_count, M, F});
        for (int b = 0; b < b_count; ++b) {
            const auto& utt = pool[windows[w0 + b].first];
            const int start = windows[w0 + b].second;
            for (int m = 0; m < M; ++m)
                for (int f = 0; f < F; ++f)
                    mel.data[(static_cast<size_t>(b) * M + m) * F + f] = static_cast<S>(utt.mel.at(m, start + f));
        }
        auto [ctx, zq] = enc.forward(mel);
        CpcResult<S> cpc = cpc_infonce_loss(enc.heads, ctx, zq, cfg.encoder.cpc_negatives, neg_rng, false);
        for (size_t k = 0; k < cpc.accuracy.size(); ++k) {
            const double w = static_cast<double>(b_count) *
                             std::max(0, enc.tprime_cache - static_cast<int>(k) - 1);
            num += cpc.accuracy[k] * w;
            den += w;
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

template <typename S>
static Checkpoint make_checkpoint(const RunConfig& cfg, const nn::ParamList<S>& params, std::int64_t step,
                                  const Rng& rng) {
    Checkpoint ck;
    ck.step = step;
    ck.config = cfg.to_json();
    ck.rng_state = rng.state();
    collect_params(params, ck);
    return ck;
}

template <typename S>
EncoderRun<S> run_train_encoder(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir,
                                const std::string& resume_path) {
    Rng rng(cfg.seed);
    EncoderRun<S> run{Encoder<S>(cfg.encoder, rng), {}, 0.0, 0.0, {}};
    Encoder<S>& enc = run.model;
    nn::ParamList<S> params = enc.params();

    std::int64_t start_step = 0;
    if (!resume_path.empty()) {
        Checkpoint ck = load_checkpoint(resume_path);
        restore_params<S>(ck, params);
        rng.set_state(ck.rng_state);
        start_step = ck.step;
        // Usage counters are not persisted; every entry counts as fresh so a
        // resume never mass-reinitializes the codebook.
        std::fill(enc.codebook.last_used.begin(), enc.codebook.last_used.end(), start_step);
    }

    nn::AdamState<S> adam;
    adam.init(params);

    for (std::int64_t step = start_step; step < cfg.sched.total_steps; ++step) {
        const double lr = lr_at(cfg.sched, step);
        nn::zero_grads(params);
        std::vector<int> picked;
        Tensor<S> mel = encoder_batch<S>(cfg, ds.train, rng, &picked);
        auto [ctx, zq] = enc.forward(mel);
        CpcResult<S> cpc = cpc_infonce_loss(enc.heads, ctx, zq, cfg.encoder.cpc_negatives, rng, true);
        const double loss = cpc.loss + enc.vq_loss + enc.commit_loss;
        if (!std::isfinite(loss))
            throw NumericError("train-encoder: non-finite loss at step " + std::to_string(step) + " (lr " +
                               format_double(lr) + ", batch starts at " + ds.train[picked[0]].entry.id + ")");
        enc.backward(cpc.grad_context, cpc.grad_zq);
        nn::clip_grad_norm(params, cfg.train.clip_norm);
        nn::adam_step(params, adam, lr);
        codebook_note_usage(enc.codebook, enc.idx_cache, step);
        codebook_reinit_dead(enc.codebook, enc.z_cache, step, cfg.train.codebook_patience, rng);

        run.final_loss = loss;
        if (step % cfg.train.log_every == 0 || step + 1 == cfg.sched.total_steps)
            run.log.push_back({step, lr, loss, weighted_cpc_accuracy(cpc, enc.batch_cache, enc.tprime_cache)});
        if (!out_dir.empty() && cfg.train.checkpoint_every > 0 && (step + 1) % cfg.train.checkpoint_every == 0 &&
            step + 1 < cfg.sched.total_steps) {
            Checkpoint ck = make_checkpoint(cfg, params, step + 1, rng);
            save_checkpoint(out_dir + "/encoder_step" + std::to_string(step + 1) + ".zvck", ck);
        }
    }

    run.val_accuracy = encoder_val_accuracy(enc, cfg, ds);
    run.checkpoint = make_checkpoint(cfg, params, cfg.sched.total_steps, rng);
    if (!out_dir.empty()) {
        save_checkpoint(out_dir + "/encoder.zvck", run.checkpoint);
        write_loss_artifacts(out_dir, "train_encoder", run.log, "accuracy");
    }
    return run;
}

// ---------------------------------------------------------------- vocoder

template <typename S>
double vocoder_val_nll(Vocoder<S>& voc, const RunConfig& cfg, const Dataset& ds) {
    const auto& pool = val_pool(ds);
    const int W = cfg.frames / 2;
    const int spu = voc.samples_per_unit();
    std::vector<std::pair<int, std::int64_t>> windows;  // (utterance, first unit)
    for (size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].units.empty())
            throw DataError("vocoder validation: utterance " + pool[i].entry.id + " has no unit stream");
        const std::int64_t usable =
            std::min<std::int64_t>(static_cast<std::int64_t>(pool[i].units.size()),
                                   static_cast<std::int64_t>(pool[i].audio.samples.size()) / spu);
        for (std::int64_t u = 0; u + W <= usable; u += W) windows.emplace_back(static_cast<int>(i), u);
    }
    if (windows.empty()) throw DataError("vocoder validation: every utterance is shorter than one window");

    double total_nll = 0.0;
    std::int64_t total_windows = 0;
    const int B = cfg.train.batch_size;
    for (size_t w0 = 0; w0 < windows.size(); w0 += B) {
        const int b_count = static_cast<int>(std::min<size_t>(B, windows.size() - w0));
        std::vector<std::vector<int>> units, teacher;
        std::vector<int> speakers;
        for (int b = 0; b < b_count; ++b) {
            const auto& utt = pool[windows[w0 + b].first];
            const std::int64_t u0 = windows[w0 + b].second;
            units.emplace_back(utt.units.begin() + u0, utt.units.begin() + u0 + W);
            std::vector<double> slice(utt.audio.samples.begin() + u0 * spu,
                                      utt.audio.samples.begin() + (u0 + W) * spu);
            teacher.push_back(mulaw_encode(slice));
            speakers.push_back(utt.speaker_idx);
        }
        total_nll += vocoder_nll(voc, units, speakers, teacher) * b_count;
        total_windows += b_count;
    }
    return total_nll / static_cast<double>(total_windows);
}

template <typename S>
VocoderRun<S> run_train_vocoder(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir,
                                const std::string& resume_path) {
    if (static_cast<int>(ds.speakers.size()) > cfg.vocoder.n_speakers)
        throw ConfigError("vocoder.n_speakers: dataset has " + std::to_string(ds.speakers.size()) +
                          " speakers, config allows " + std::to_string(cfg.vocoder.n_speakers));
    if (cfg.frames % 2 != 0 || cfg.frames < 2)
        throw ConfigError("features.frames: must be even and >= 2 for vocoder windows");

    Rng rng(cfg.seed);
    VocoderRun<S> run{Vocoder<S>(cfg.vocoder, rng), {}, 0.0, 0.0, {}};
    Vocoder<S>& voc = run.model;
    nn::ParamList<S> params = voc.params();

    std::int64_t start_step = 0;
    if (!resume_path.empty()) {
        Checkpoint ck = load_checkpoint(resume_path);
        restore_params<S>(ck, params);
        rng.set_state(ck.rng_state);
        start_step = ck.step;
    }

    nn::AdamState<S> adam;
    adam.init(params);

    for (std::int64_t step = start_step; step < cfg.sched.total_steps; ++step) {
        const double lr = lr_at(cfg.sched, step);
        nn::zero_grads(params);
        VocoderBatch vb = sample_vocoder_batch(cfg, ds.train, rng);
        Tensor<S> logits = voc.forward(vb.units, vb.speakers, vb.teacher);
        std::vector<int> targets;
        targets.reserve(logits.dim(0));
        for (const auto& t : vb.teacher) targets.insert(targets.end(), t.begin(), t.end());
        auto [loss, grad] = nn::softmax_xent(logits, targets);
        if (!std::isfinite(loss))
            throw NumericError("train-vocoder: non-finite loss at step " + std::to_string(step) + " (lr " +
                               format_double(lr) + ", batch starts at " + ds.train[vb.picked[0]].entry.id + ")");
        voc.backward(grad);
        nn::clip_grad_norm(params, cfg.train.clip_norm);
        nn::adam_step(params, adam, lr);

        run.final_loss = loss;
        if (step % cfg.train.log_every == 0 || step + 1 == cfg.sched.total_steps)
            run.log.push_back({step, lr, loss, loss / std::log(2.0)});
        if (!out_dir.empty() && cfg.train.checkpoint_every > 0 && (step + 1) % cfg.train.checkpoint_every == 0 &&
            step + 1 < cfg.sched.total_steps) {
            Checkpoint ck = make_checkpoint(cfg, params, step + 1, rng);
            save_checkpoint(out_dir + "/vocoder_step" + std::to_string(step + 1) + ".zvck", ck);
        }
    }

    run.val_nll = vocoder_val_nll(voc, cfg, ds);
    run.checkpoint = make_checkpoint(cfg, params, cfg.sched.total_steps, rng);
    if (!out_dir.empty()) {
        save_checkpoint(out_dir + "/vocoder.zvck", run.checkpoint);
        write_loss_artifacts(out_dir, "train_vocoder", run.log, "bits_per_sample");
    }
    return run;
}

// ---------------------------------------------------------------- lrrt

template <typename S>
static LrrtReport model_lrrt_impl(const RunConfig& cfg, const Dataset& ds, const std::string& kind,
                                  const LrrtOptions& opts) {
    Rng rng(cfg.seed);
    if (kind == "encoder") {
        Encoder<S> enc(cfg.encoder, rng);
        nn::ParamList<S> params = enc.params();
        nn::AdamState<S> adam;
        adam.init(params);
        std::int64_t step = 0;
        TrainStepFn fn = [&](double lr) {
            nn::zero_grads(params);
            Tensor<S> mel = encoder_batch<S>(cfg, ds.train, rng, nullptr);
            auto [ctx, zq] = enc.forward(mel);
            CpcResult<S> cpc = cpc_infonce_loss(enc.heads, ctx, zq, cfg.encoder.cpc_negatives, rng, true);
            const double loss = cpc.loss + enc.vq_loss + enc.commit_loss;
            enc.backward(cpc.grad_context, cpc.grad_zq);
            nn::clip_grad_norm(params, cfg.train.clip_norm);
            nn::adam_step(params, adam, lr);
            codebook_note_usage(enc.codebook, enc.idx_cache, step);
            codebook_reinit_dead(enc.codebook, enc.z_cache, step, cfg.train.codebook_patience, rng);
            ++step;
            return loss;
        };
        return run_lr_range_test(fn, opts);
    }
    if (kind == "vocoder") {
        Vocoder<S> voc(cfg.vocoder, rng);
        nn::ParamList<S> params = voc.params();
        nn::AdamState<S> adam;
        adam.init(params);
        TrainStepFn fn = [&](double lr) {
            nn::zero_grads(params);
            VocoderBatch vb = sample_vocoder_batch(cfg, ds.train, rng);
            Tensor<S> logits = voc.forward(vb.units, vb.speakers, vb.teacher);
            std::vector<int> targets;
            targets.reserve(logits.dim(0));
            for (const auto& t : vb.teacher) targets.insert(targets.end(), t.begin(), t.end());
            auto [loss, grad] = nn::softmax_xent(logits, targets);
            voc.backward(grad);
            nn::clip_grad_norm(params, cfg.train.clip_norm);
            nn::adam_step(params, adam, lr);
            return loss;
        };
        return run_lr_range_test(fn, opts);
    }
    throw ConfigError("lrrt: unknown model kind '" + kind + "' (expected encoder or vocoder)");
}

LrrtReport run_model_lrrt(const RunConfig& cfg, const Dataset& ds, const std::string& model_kind,
                          const LrrtOptions& opts, bool f64) {
    if (f64) return model_lrrt_impl<double>(cfg, ds, model_kind, opts);
    return model_lrrt_impl<float>(cfg, ds, model_kind, opts);
}

// ---------------------------------------------------------------- instantiation

template struct EncoderRun<float>;
template struct EncoderRun<double>;
template struct VocoderRun<float>;
template struct VocoderRun<double>;

template EncoderRun<float> run_train_encoder<float>(const RunConfig&, const Dataset&, const std::string&,
                                                    const std::string&);
template EncoderRun<double> run_train_encoder<double>(const RunConfig&, const Dataset&, const std::string&,
                                                      const std::string&);
template VocoderRun<float> run_train_vocoder<float>(const RunConfig&, const Dataset&, const std::string&,
                                                    const std::string&);
template VocoderRun<double> run_train_vocoder<double>(const RunConfig&, const Dataset&, const std::string&,
                                                      const std::string&);
template double vocoder_val_nll<float>(Vocoder<float>&, const RunConfig&, const Dataset&);
template double vocoder_val_nll<double>(Vocoder<double>&, const RunConfig&, const Dataset&);
template double encoder_val_accuracy<float>(Encoder<float>&, const RunConfig&, const Dataset&);
template double encoder_val_accuracy<double>(Encoder<double>&, const RunConfig&, const Dataset&);

}  // namespace zrlab
