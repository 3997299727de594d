#include "zrlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "zrlab/util.hpp"

namespace zrlab {

namespace {

// [B, C, T] map -> [B*T, C] rows (time-major within a batch item).
template <typename S>
Tensor<S> map_to_rows(const Tensor<S>& m) {
    const int B = m.dim(0), C = m.dim(1), T = m.dim(2);
    Tensor<S> rows({B * T, C});
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t)
            for (int c = 0; c < C; ++c)
                rows.data[(static_cast<std::size_t>(b) * T + t) * C + c] =
                    m.data[(static_cast<std::size_t>(b) * C + c) * T + t];
    return rows;
}

template <typename S>
Tensor<S> rows_to_map(const Tensor<S>& rows, int B, int C, int T) {
    Tensor<S> m({B, C, T});
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t)
            for (int c = 0; c < C; ++c)
                m.data[(static_cast<std::size_t>(b) * C + c) * T + t] =
                    rows.data[(static_cast<std::size_t>(b) * T + t) * C + c];
    return m;
}

// Upsampling runs in f64 internally (the Fourier variants are defined there);
// the wrapper casts per channel row.
template <typename S>
Tensor<S> upsample_map(const Tensor<S>& m, int s, Upsampler kind) {
    const int B = m.dim(0), C = m.dim(1), T = m.dim(2);
    Tensor<S> out({B, C, T * s});
    std::vector<double> row(static_cast<std::size_t>(T));
    for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(b) * C + c) * T;
            for (int t = 0; t < T; ++t) row[static_cast<std::size_t>(t)] = static_cast<double>(m.data[base + t]);
            std::vector<double> up;
            switch (kind) {
                case Upsampler::nearest: up = upsample_nearest_1d(row, s); break;
                case Upsampler::linear: up = upsample_linear_1d(row, s); break;
                case Upsampler::fourier_tile: up = upsample_fourier_tile_1d(row, s); break;
                case Upsampler::fourier_pad: up = upsample_fourier_pad_1d(row, s); break;
            }
            const std::size_t obase = (static_cast<std::size_t>(b) * C + c) * (static_cast<std::size_t>(T) * s);
            for (int t = 0; t < T * s; ++t) out.data[obase + t] = static_cast<S>(up[static_cast<std::size_t>(t)]);
        }
    }
    return out;
}

template <typename S>
Tensor<S> upsample_map_adjoint(const Tensor<S>& g, int s, int in_len, Upsampler kind) {
    const int B = g.dim(0), C = g.dim(1), T_up = g.dim(2);
    Tensor<S> out({B, C, in_len});
    std::vector<double> row(static_cast<std::size_t>(T_up));
    for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(b) * C + c) * T_up;
            for (int t = 0; t < T_up; ++t) row[static_cast<std::size_t>(t)] = static_cast<double>(g.data[base + t]);
            const std::vector<double> down = upsample_adjoint_1d(row, s, in_len, kind);
            const std::size_t obase = (static_cast<std::size_t>(b) * C + c) * in_len;
            for (int t = 0; t < in_len; ++t) out.data[obase + t] = static_cast<S>(down[static_cast<std::size_t>(t)]);
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- codebook

template <typename S>
Codebook<S>::Codebook(int vocab, int dim, Rng& rng) : entries({vocab, dim}) {
    nn::init_uniform(entries, dim, rng);
    usage.assign(static_cast<std::size_t>(vocab), 0);
    last_used.assign(static_cast<std::size_t>(vocab), 0);
}

template <typename S>
VqResult<S> vq_quantize(const Codebook<S>& cb, const Tensor<S>& z, double beta) {
    if (cb.vocab() == 0) throw DataError("vq_quantize: empty codebook");
    if (z.shape.size() != 2 || z.dim(1) != cb.dim())
        throw DataError("vq_quantize: embedding dimension mismatch");

    const int T = z.dim(0), d = cb.dim(), V = cb.vocab();
    VqResult<S> r;
    r.z_q = Tensor<S>({T, d});
    r.indices.resize(static_cast<std::size_t>(T));

    double vq = 0.0, commit = 0.0;
    for (int t = 0; t < T; ++t) {
        const S* row = z.data.data() + static_cast<std::size_t>(t) * d;
        int best = 0;
        double best_dist = 0.0;
        for (int v = 0; v < V; ++v) {
            const S* e = cb.entries.data.data() + static_cast<std::size_t>(v) * d;
            double dist = 0.0;
            for (int j = 0; j < d; ++j) {
                const double diff = static_cast<double>(row[j]) - static_cast<double>(e[j]);
                dist += diff * diff;
            }
            if (v == 0 || dist < best_dist) {  // ties keep the lowest index
                best = v;
                best_dist = dist;
            }
        }
        r.indices[static_cast<std::size_t>(t)] = best;
        std::copy_n(cb.entries.data.begin() + static_cast<std::size_t>(best) * d, d,
                    r.z_q.data.begin() + static_cast<std::size_t>(t) * d);
        vq += best_dist;
        commit += best_dist;
    }
    r.vq_loss = vq / T;
    r.commit_loss = beta * commit / T;
    return r;
}

template <typename S>
void vq_backward(Codebook<S>& cb, const Tensor<S>& z, const std::vector<int>& indices,
                 const Tensor<S>& grad_zq, double beta, Tensor<S>& grad_z) {
    const int T = z.dim(0), d = cb.dim();
    cb.entries.ensure_grad();
    grad_z = grad_zq;  // straight-through: quantization is identity backward
    for (int t = 0; t < T; ++t) {
        const S* zr = z.data.data() + static_cast<std::size_t>(t) * d;
        const S* e = cb.entries.data.data() + static_cast<std::size_t>(indices[static_cast<std::size_t>(t)]) * d;
        S* ge = cb.entries.grad.data() + static_cast<std::size_t>(indices[static_cast<std::size_t>(t)]) * d;
        S* gz = grad_z.data.data() + static_cast<std::size_t>(t) * d;
        for (int j = 0; j < d; ++j) {
            const double diff = static_cast<double>(zr[j]) - static_cast<double>(e[j]);
            ge[j] += static_cast<S>(-2.0 * diff / T);          // d(vq_loss)/de
            gz[j] += static_cast<S>(2.0 * beta * diff / T);    // d(commit)/dz
        }
    }
}

template <typename S>
void codebook_note_usage(Codebook<S>& cb, const std::vector<int>& indices, std::int64_t step) {
    for (int idx : indices) {
        ++cb.usage[static_cast<std::size_t>(idx)];
        cb.last_used[static_cast<std::size_t>(idx)] = step;
    }
}

template <typename S>
int codebook_reinit_dead(Codebook<S>& cb, const Tensor<S>& z_rows, std::int64_t step, std::int64_t patience,
                         Rng& rng) {
    const int d = cb.dim();
    int reset = 0;
    for (int v = 0; v < cb.vocab(); ++v) {
        if (step - cb.last_used[static_cast<std::size_t>(v)] < patience) continue;
        const std::size_t src = rng.below(static_cast<std::uint64_t>(z_rows.dim(0)));
        std::copy_n(z_rows.data.begin() + src * d, d, cb.entries.data.begin() + static_cast<std::size_t>(v) * d);
        cb.last_used[static_cast<std::size_t>(v)] = step;
        ++reset;
    }
    return reset;
}

// ---------------------------------------------------------------- encoder

void EncoderConfig::validate() const {
    if (n_mels <= 0 || conv_channels <= 0 || embed_dim <= 0 || codebook_size <= 0 || context_dim <= 0)
        throw ConfigError("encoder: dimensions must be positive");
    if (cpc_horizon < 1) throw ConfigError("encoder: cpc_horizon must be >= 1");
    if (cpc_negatives < 1) throw ConfigError("encoder: cpc_negatives must be >= 1");
    if (commit_beta < 0) throw ConfigError("encoder: commit_beta must be >= 0");
}

template <typename S>
Encoder<S>::Encoder(const EncoderConfig& c, Rng& rng)
    : cfg(c),
      conv1(c.n_mels, c.conv_channels, 4, 2, 1, rng),
      conv2(c.conv_channels, c.conv_channels, 3, 1, 1, rng),
      norm(c.conv_channels),
      proj(c.conv_channels, c.embed_dim, rng),
      codebook(c.codebook_size, c.embed_dim, rng),
      context(c.embed_dim, c.context_dim, rng) {
    cfg.validate();
    heads.reserve(static_cast<std::size_t>(c.cpc_horizon));
    for (int k = 0; k < c.cpc_horizon; ++k) heads.emplace_back(c.context_dim, c.embed_dim, rng);
}

template <typename S>
nn::ParamList<S> Encoder<S>::params() {
    nn::ParamList<S> p;
    conv1.params(p, "encoder.conv1");
    conv2.params(p, "encoder.conv2");
    if (cfg.layer_norm) norm.params(p, "encoder.norm");
    proj.params(p, "encoder.proj");
    p.push_back({"encoder.codebook", &codebook.entries});
    context.params(p, "encoder.context");
    for (std::size_t k = 0; k < heads.size(); ++k)
        heads[k].params(p, "encoder.head" + std::to_string(k + 1));
    return p;
}

template <typename S>
std::pair<Tensor<S>, Tensor<S>> Encoder<S>::forward(const Tensor<S>& mel) {
    if (mel.shape.size() != 3 || mel.dim(1) != cfg.n_mels) throw DataError("encoder: expect [B, n_mels, T]");
    if (mel.dim(2) < 2) throw DataError("encoder: input shorter than conv receptive field");

    a1_cache = conv1.forward(mel);
    Tensor<S> r1 = nn::relu(a1_cache);
    a2_cache = conv2.forward(r1);
    Tensor<S> r2 = nn::relu(a2_cache);

    batch_cache = r2.dim(0);
    tprime_cache = r2.dim(2);
    Tensor<S> rows = map_to_rows(r2);
    if (cfg.layer_norm) rows = norm.forward(rows);
    z_cache = proj.forward(rows);

    VqResult<S> vq = vq_quantize(codebook, z_cache, cfg.commit_beta);
    idx_cache = std::move(vq.indices);
    vq_loss = vq.vq_loss;
    commit_loss = vq.commit_loss;

    Tensor<S> zq_map = rows_to_map(vq.z_q, batch_cache, cfg.embed_dim, tprime_cache);
    Tensor<S> ctx = context.forward(zq_map);
    return {std::move(ctx), std::move(zq_map)};
}

template <typename S>
void Encoder<S>::backward(const Tensor<S>& grad_context, const Tensor<S>& grad_zq) {
    Tensor<S> g_zq_map = context.backward(grad_context);
    for (std::size_t i = 0; i < g_zq_map.data.size(); ++i) g_zq_map.data[i] += grad_zq.data[i];
    Tensor<S> g_zq_rows = map_to_rows(g_zq_map);

    Tensor<S> g_z;
    vq_backward(codebook, z_cache, idx_cache, g_zq_rows, cfg.commit_beta, g_z);

    Tensor<S> g_rows = proj.backward(g_z);
    if (cfg.layer_norm) g_rows = norm.backward(g_rows);
    Tensor<S> g_r2 = rows_to_map(g_rows, batch_cache, cfg.conv_channels, tprime_cache);

    Tensor<S> g_a2 = nn::relu_backward(a2_cache, g_r2);
    Tensor<S> g_r1 = conv2.backward(g_a2);
    Tensor<S> g_a1 = nn::relu_backward(a1_cache, g_r1);
    conv1.backward(g_a1);
}

template <typename S>
UnitSequence Encoder<S>::encode_units(const Tensor<S>& mel, const std::string& id, const std::string& speaker,
                                      double frame_rate) {
    forward(mel);
    UnitSequence u;
    u.id = id;
    u.speaker = speaker;
    u.indices = idx_cache;
    u.frame_rate = frame_rate;
    return u;
}

template <typename S>
std::vector<std::vector<double>> Encoder<S>::encode_context(const Tensor<S>& mel) {
    auto [ctx, zq] = forward(mel);
    const int H = ctx.dim(1), T = ctx.dim(2);
    std::vector<std::vector<double>> frames(static_cast<std::size_t>(T), std::vector<double>(H));
    for (int t = 0; t < T; ++t)
        for (int h = 0; h < H; ++h)
            frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(h)] =
                static_cast<double>(ctx.data[(static_cast<std::size_t>(0) * H + h) * T + t]);
    return frames;
}

// ---------------------------------------------------------------- infonce

template <typename S>
CpcResult<S> cpc_infonce_loss(std::vector<nn::Linear<S>>& heads, const Tensor<S>& context,
                              const Tensor<S>& z_q, int n_negatives, Rng& rng, bool with_grads) {
    const int B = context.dim(0), H = context.dim(1), T = context.dim(2);
    const int d = z_q.dim(1);
    const int K = static_cast<int>(heads.size());
    if (T <= K) throw DataError("cpc: sequence shorter than prediction horizon");
    if (B * T < 2) throw DataError("cpc: batch too small to draw negatives");

    const std::size_t n_pos_total = static_cast<std::size_t>(B) * T;

    CpcResult<S> r;
    r.accuracy.assign(static_cast<std::size_t>(K), 0.0);
    if (with_grads) {
        r.grad_context = Tensor<S>({B, H, T});
        r.grad_zq = Tensor<S>({B, d, T});
    }

    // z_q rows indexed by b*T + t for candidate lookups.
    Tensor<S> zq_rows = map_to_rows(z_q);

    long total_rows = 0;
    for (int k = 1; k <= K; ++k) total_rows += static_cast<long>(B) * (T - k);

    double loss_sum = 0.0;
    for (int k = 1; k <= K; ++k) {
        const int span = T - k;
        const int n_rows = B * span;

        Tensor<S> ctx_rows({n_rows, H});
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < span; ++t)
                for (int h = 0; h < H; ++h)
                    ctx_rows.data[(static_cast<std::size_t>(b) * span + t) * H + h] =
                        context.data[(static_cast<std::size_t>(b) * H + h) * T + t];

        Tensor<S> pred = heads[static_cast<std::size_t>(k - 1)].forward(ctx_rows);  // [n_rows, d]

        // Candidate 0 is the positive z_{t+k}; the rest are negatives drawn
        // uniformly from every other (utterance, position) pair.
        std::vector<std::size_t> cand(static_cast<std::size_t>(n_rows) * (1 + n_negatives));
        Tensor<S> logits({n_rows, 1 + n_negatives});
        for (int b = 0; b < B; ++b) {
            for (int t = 0; t < span; ++t) {
                const std::size_t row = static_cast<std::size_t>(b) * span + t;
                const std::size_t pos = static_cast<std::size_t>(b) * T + (t + k);
                cand[row * (1 + n_negatives)] = pos;
                for (int j = 1; j <= n_negatives; ++j) {
                    std::size_t neg = rng.below(n_pos_total - 1);
                    if (neg >= pos) ++neg;
                    cand[row * (1 + n_negatives) + j] = neg;
                }
                const S* p = pred.data.data() + row * d;
                for (int j = 0; j < 1 + n_negatives; ++j) {
                    const S* zr = zq_rows.data.data() + cand[row * (1 + n_negatives) + j] * d;
                    S dot = S(0);
                    for (int c = 0; c < d; ++c) dot += p[c] * zr[c];
                    logits.data[row * (1 + n_negatives) + j] = dot;
                }
            }
        }

        std::vector<int> targets(static_cast<std::size_t>(n_rows), 0);
        auto [loss_k, grad_logits] = nn::softmax_xent(logits, targets);
        loss_sum += loss_k * n_rows;

        long correct = 0;
        for (int row = 0; row < n_rows; ++row) {
            const S* lr = logits.data.data() + static_cast<std::size_t>(row) * (1 + n_negatives);
            bool top = true;
            for (int j = 1; j <= n_negatives; ++j)
                if (lr[j] >= lr[0]) {
                    top = false;
                    break;
                }
            if (top) ++correct;
        }
        r.accuracy[static_cast<std::size_t>(k - 1)] = static_cast<double>(correct) / n_rows;

        if (!with_grads) continue;

        // softmax_xent averaged over n_rows; rescale so the total is a mean
        // over every (b, t, k) triple.
        const double scale = static_cast<double>(n_rows) / static_cast<double>(total_rows);
        Tensor<S> grad_pred({n_rows, d});
        for (int row = 0; row < n_rows; ++row) {
            const S* p = pred.data.data() + static_cast<std::size_t>(row) * d;
            for (int j = 0; j < 1 + n_negatives; ++j) {
                const S g = static_cast<S>(
                    static_cast<double>(grad_logits.data[static_cast<std::size_t>(row) * (1 + n_negatives) + j]) *
                    scale);
                const std::size_t cidx = cand[static_cast<std::size_t>(row) * (1 + n_negatives) + j];
                const S* zr = zq_rows.data.data() + cidx * d;
                S* gp = grad_pred.data.data() + static_cast<std::size_t>(row) * d;
                const int cb = static_cast<int>(cidx / static_cast<std::size_t>(T));
                const int ct = static_cast<int>(cidx % static_cast<std::size_t>(T));
                for (int c = 0; c < d; ++c) {
                    gp[c] += g * zr[c];
                    r.grad_zq.data[(static_cast<std::size_t>(cb) * d + c) * T + ct] += g * p[c];
                }
            }
        }

        Tensor<S> grad_ctx_rows = heads[static_cast<std::size_t>(k - 1)].backward(grad_pred);
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < span; ++t)
                for (int h = 0; h < H; ++h)
                    r.grad_context.data[(static_cast<std::size_t>(b) * H + h) * T + t] +=
                        grad_ctx_rows.data[(static_cast<std::size_t>(b) * span + t) * H + h];
    }

    r.loss = loss_sum / static_cast<double>(total_rows);
    return r;
}

// ---------------------------------------------------------------- vocoder

void VocoderConfig::validate() const {
    if (unit_vocab <= 0 || code_embed_dim <= 0 || n_speakers <= 0 || speaker_embed_dim <= 0 ||
        lstm_hidden <= 0 || sample_embed_dim <= 0 || head_hidden <= 0)
        throw ConfigError("vocoder: dimensions must be positive");
    if (mulaw_channels != 256) throw ConfigError("vocoder: mulaw_channels must be 256");
    if (sample_rate <= 0) throw ConfigError("vocoder: sample_rate must be positive");
    validate_scale_chain(chain);
}

template <typename S>
Vocoder<S>::Vocoder(const VocoderConfig& c, Rng& rng)
    : cfg(c),
      code_emb(c.unit_vocab, c.code_embed_dim, rng),
      spk_emb(c.n_speakers, c.speaker_embed_dim, rng),
      lstm(c.code_embed_dim + c.speaker_embed_dim, c.lstm_hidden, rng),
      sample_emb(c.mulaw_channels, c.sample_embed_dim, rng),
      fc1(c.lstm_hidden + c.sample_embed_dim, c.head_hidden, rng),
      fc2(c.head_hidden, c.mulaw_channels, rng) {
    cfg.validate();
}

template <typename S>
nn::ParamList<S> Vocoder<S>::params() {
    nn::ParamList<S> p;
    code_emb.params(p, "vocoder.code_emb");
    spk_emb.params(p, "vocoder.spk_emb");
    lstm.params(p, "vocoder.lstm");
    sample_emb.params(p, "vocoder.sample_emb");
    fc1.params(p, "vocoder.fc1");
    fc2.params(p, "vocoder.fc2");
    return p;
}

template <typename S>
Tensor<S> Vocoder<S>::condition(const std::vector<std::vector<int>>& units, const std::vector<int>& speakers) {
    const int B = static_cast<int>(units.size());
    if (B == 0) throw DataError("vocoder: empty batch");
    const int T_u = static_cast<int>(units[0].size());
    if (T_u == 0) throw DataError("vocoder: empty unit sequence");
    for (const auto& u : units)
        if (static_cast<int>(u.size()) != T_u) throw DataError("vocoder: ragged unit batch");
    if (static_cast<int>(speakers.size()) != B) throw DataError("vocoder: speaker count mismatch");

    std::vector<int> flat;
    flat.reserve(static_cast<std::size_t>(B) * T_u);
    for (const auto& u : units) flat.insert(flat.end(), u.begin(), u.end());
    Tensor<S> code_rows = code_emb.forward(flat);       // [B*T_u, E_c]
    Tensor<S> spk_rows = spk_emb.forward(speakers);     // [B, E_s]

    const int E_c = cfg.code_embed_dim, E_s = cfg.speaker_embed_dim;
    Tensor<S> feat({B, E_c + E_s, T_u});
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T_u; ++t) {
            for (int c = 0; c < E_c; ++c)
                feat.data[(static_cast<std::size_t>(b) * (E_c + E_s) + c) * T_u + t] =
                    code_rows.data[(static_cast<std::size_t>(b) * T_u + t) * E_c + c];
            for (int c = 0; c < E_s; ++c)
                feat.data[(static_cast<std::size_t>(b) * (E_c + E_s) + E_c + c) * T_u + t] =
                    spk_rows.data[static_cast<std::size_t>(b) * E_s + c];
        }

    Tensor<S> up1 = upsample_map(feat, cfg.chain.s1, cfg.up1);  // [B, E, T_u*s1]
    Tensor<S> hidden = lstm.forward(up1);                       // [B, H, T_u*s1]
    up2_cache = upsample_map(hidden, cfg.chain.s2, cfg.up2);    // [B, H, T_samples]

    batch_cache = B;
    units_cache = T_u;
    return up2_cache;
}

template <typename S>
Tensor<S> Vocoder<S>::forward(const std::vector<std::vector<int>>& units, const std::vector<int>& speakers,
                              const std::vector<std::vector<int>>& teacher) {
    const Tensor<S> cond = condition(units, speakers);
    const int B = batch_cache;
    const int T_s = cond.dim(2);
    if (static_cast<int>(teacher.size()) != B) throw DataError("vocoder: teacher batch mismatch");
    for (const auto& tc : teacher)
        if (static_cast<int>(tc.size()) != T_s)
            throw DataError("vocoder: teacher length must equal units * " + std::to_string(samples_per_unit()));

    // Previous-sample codes, shifted right with the start token 128.
    std::vector<int> prev(static_cast<std::size_t>(B) * T_s);
    for (int b = 0; b < B; ++b) {
        prev[static_cast<std::size_t>(b) * T_s] = 128;
        for (int t = 1; t < T_s; ++t)
            prev[static_cast<std::size_t>(b) * T_s + t] = teacher[static_cast<std::size_t>(b)][static_cast<std::size_t>(t - 1)];
    }
    Tensor<S> prev_rows = sample_emb.forward(prev);  // [B*T_s, E_p]

    const int H = cfg.lstm_hidden, E_p = cfg.sample_embed_dim;
    fc1_in_cache = Tensor<S>({B * T_s, H + E_p});
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T_s; ++t) {
            const std::size_t row = static_cast<std::size_t>(b) * T_s + t;
            for (int h = 0; h < H; ++h)
                fc1_in_cache.data[row * (H + E_p) + h] = cond.data[(static_cast<std::size_t>(b) * H + h) * T_s + t];
            for (int c = 0; c < E_p; ++c)
                fc1_in_cache.data[row * (H + E_p) + H + c] = prev_rows.data[row * E_p + c];
        }

    fc1_out_cache = fc1.forward(fc1_in_cache);
    Tensor<S> hidden = nn::relu(fc1_out_cache);
    return fc2.forward(hidden);  // [B*T_s, 256]
}

template <typename S>
void Vocoder<S>::backward(const Tensor<S>& grad_logits) {
    const int B = batch_cache;
    const int T_s = up2_cache.dim(2);
    const int H = cfg.lstm_hidden, E_p = cfg.sample_embed_dim;

    Tensor<S> g_hidden = fc2.backward(grad_logits);
    Tensor<S> g_fc1_out = nn::relu_backward(fc1_out_cache, g_hidden);
    Tensor<S> g_fc1_in = fc1.backward(g_fc1_out);

    Tensor<S> g_up2({B, H, T_s});
    Tensor<S> g_prev_rows({B * T_s, E_p});
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T_s; ++t) {
            const std::size_t row = static_cast<std::size_t>(b) * T_s + t;
            for (int h = 0; h < H; ++h)
                g_up2.data[(static_cast<std::size_t>(b) * H + h) * T_s + t] = g_fc1_in.data[row * (H + E_p) + h];
            for (int c = 0; c < E_p; ++c)
                g_prev_rows.data[row * E_p + c] = g_fc1_in.data[row * (H + E_p) + H + c];
        }
    sample_emb.backward(g_prev_rows);

    const int T_mid = units_cache * cfg.chain.s1;
    Tensor<S> g_hidden_mid = upsample_map_adjoint(g_up2, cfg.chain.s2, T_mid, cfg.up2);
    Tensor<S> g_up1 = lstm.backward(g_hidden_mid);
    Tensor<S> g_feat = upsample_map_adjoint(g_up1, cfg.chain.s1, units_cache, cfg.up1);

    const int E_c = cfg.code_embed_dim, E_s = cfg.speaker_embed_dim;
    Tensor<S> g_code_rows({B * units_cache, E_c});
    Tensor<S> g_spk_rows({B, E_s});
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < units_cache; ++t) {
            const std::size_t row = static_cast<std::size_t>(b) * units_cache + t;
            for (int c = 0; c < E_c; ++c)
                g_code_rows.data[row * E_c + c] =
                    g_feat.data[(static_cast<std::size_t>(b) * (E_c + E_s) + c) * units_cache + t];
            for (int c = 0; c < E_s; ++c)
                g_spk_rows.data[static_cast<std::size_t>(b) * E_s + c] +=
                    g_feat.data[(static_cast<std::size_t>(b) * (E_c + E_s) + E_c + c) * units_cache + t];
        }
    code_emb.backward(g_code_rows);
    spk_emb.backward(g_spk_rows);
}

template <typename S>
Waveform Vocoder<S>::generate(const std::vector<int>& units, int speaker, double temperature, Rng& rng) {
    const Tensor<S> cond = condition({units}, {speaker});
    const int T_s = cond.dim(2);
    const int H = cfg.lstm_hidden, E_p = cfg.sample_embed_dim;

    Waveform out;
    out.sample_rate = cfg.sample_rate;
    out.samples.resize(static_cast<std::size_t>(T_s));

    int prev = 128;  // start token: mu-law code of silence
    Tensor<S> row({1, H + E_p});
    for (int t = 0; t < T_s; ++t) {
        Tensor<S> emb = sample_emb.forward({prev});
        for (int h = 0; h < H; ++h) row.data[static_cast<std::size_t>(h)] = cond.data[static_cast<std::size_t>(h) * T_s + t];
        for (int c = 0; c < E_p; ++c) row.data[static_cast<std::size_t>(H + c)] = emb.data[static_cast<std::size_t>(c)];

        Tensor<S> h1 = fc1.forward(row);
        Tensor<S> r1 = nn::relu(h1);
        Tensor<S> logits = fc2.forward(r1);

        int code;
        if (temperature <= 0.0) {
            code = 0;
            for (int j = 1; j < cfg.mulaw_channels; ++j)
                if (logits.data[static_cast<std::size_t>(j)] > logits.data[static_cast<std::size_t>(code)]) code = j;
        } else {
            Tensor<S> scaled = logits;
            for (auto& v : scaled.data) v = static_cast<S>(static_cast<double>(v) / temperature);
            const std::vector<double> p = nn::softmax_row(scaled, 0);
            double u = rng.uniform(), acc = 0.0;
            code = cfg.mulaw_channels - 1;
            for (int j = 0; j < cfg.mulaw_channels; ++j) {
                acc += p[static_cast<std::size_t>(j)];
                if (u < acc) {
                    code = j;
                    break;
                }
            }
        }
        out.samples[static_cast<std::size_t>(t)] = mulaw_decode(code);
        prev = code;
    }
    return out;
}

template <typename S>
double vocoder_nll(Vocoder<S>& voc, const std::vector<std::vector<int>>& units,
                   const std::vector<int>& speakers, const std::vector<std::vector<int>>& teacher) {
    Tensor<S> logits = voc.forward(units, speakers, teacher);
    std::vector<int> targets;
    targets.reserve(logits.data.size() / static_cast<std::size_t>(voc.cfg.mulaw_channels));
    for (const auto& tc : teacher) targets.insert(targets.end(), tc.begin(), tc.end());
    auto [loss, grad] = nn::softmax_xent(logits, targets);
    return loss;
}

// ---------------------------------------------------------------- instantiations

#define ZRLAB_MODELS_INSTANTIATE(S)                                                                        \
    template struct Codebook<S>;                                                                           \
    template VqResult<S> vq_quantize<S>(const Codebook<S>&, const Tensor<S>&, double);                     \
    template void vq_backward<S>(Codebook<S>&, const Tensor<S>&, const std::vector<int>&,                  \
                                 const Tensor<S>&, double, Tensor<S>&);                                    \
    template void codebook_note_usage<S>(Codebook<S>&, const std::vector<int>&, std::int64_t);             \
    template int codebook_reinit_dead<S>(Codebook<S>&, const Tensor<S>&, std::int64_t, std::int64_t,       \
                                         Rng&);                                                            \
    template struct Encoder<S>;                                                                            \
    template CpcResult<S> cpc_infonce_loss<S>(std::vector<nn::Linear<S>>&, const Tensor<S>&,               \
                                              const Tensor<S>&, int, Rng&, bool);                          \
    template struct Vocoder<S>;                                                                            \
    template double vocoder_nll<S>(Vocoder<S>&, const std::vector<std::vector<int>>&,                      \
                                   const std::vector<int>&, const std::vector<std::vector<int>>&);

ZRLAB_MODELS_INSTANTIATE(float)
ZRLAB_MODELS_INSTANTIATE(double)

}  // namespace zrlab
