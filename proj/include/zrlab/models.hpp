#pragma once

#include <string>
#include <vector>

#include "zrlab/audio.hpp"
#include "zrlab/nn.hpp"
#include "zrlab/rng.hpp"
#include "zrlab/tensor.hpp"
#include "zrlab/units.hpp"
#include "zrlab/upsample.hpp"

namespace zrlab {

// ---------------------------------------------------------------- codebook

template <typename S>
struct Codebook {
    Tensor<S> entries;                // [V, d]
    std::vector<long> usage;          // lifetime selection counts
    std::vector<std::int64_t> last_used;  // training step of last selection

    Codebook() = default;
    Codebook(int vocab, int dim, Rng& rng);

    int vocab() const { return entries.dim(0); }
    int dim() const { return entries.dim(1); }
};

template <typename S>
struct VqResult {
    Tensor<S> z_q;             // [T, d]; rows are bitwise rows of the codebook
    std::vector<int> indices;  // [T]
    double vq_loss = 0.0;      // ||sg(z) - e||^2, mean over rows, sum over dims
    double commit_loss = 0.0;  // beta * ||z - sg(e)||^2, same reduction
};

// Nearest entry by squared Euclidean distance; ties resolve to the lowest
// index. Pure; usage bookkeeping is the caller's (see codebook_note_usage).
template <typename S>
VqResult<S> vq_quantize(const Codebook<S>& cb, const Tensor<S>& z, double beta);

// Straight-through backward: grad_z = grad_zq + d(commit)/dz, and the
// codebook accumulates d(vq_loss)/de on the selected rows.
template <typename S>
void vq_backward(Codebook<S>& cb, const Tensor<S>& z, const std::vector<int>& indices,
                 const Tensor<S>& grad_zq, double beta, Tensor<S>& grad_z);

template <typename S>
void codebook_note_usage(Codebook<S>& cb, const std::vector<int>& indices, std::int64_t step);

// Entries unused for `patience` consecutive steps are reseeded from random
// rows of the current batch of pre-quantization vectors. Returns the number
// of entries reset.
template <typename S>
int codebook_reinit_dead(Codebook<S>& cb, const Tensor<S>& z_rows, std::int64_t step, std::int64_t patience,
                         Rng& rng);

// ---------------------------------------------------------------- encoder

struct EncoderConfig {
    int n_mels = 80;
    int conv_channels = 256;
    int embed_dim = 64;      // codebook dimension d
    int codebook_size = 512; // V
    int context_dim = 256;   // LSTM width
    int cpc_horizon = 4;     // K
    int cpc_negatives = 16;  // N_neg
    double commit_beta = 0.25;
    bool layer_norm = true;

    void validate() const;
};

// Conv stack (downsample x2 exactly) -> projection -> VQ bottleneck -> LSTM
// context. One forward populates the caches one backward consumes.
template <typename S>
struct Encoder {
    EncoderConfig cfg;
    nn::Conv1d<S> conv1;  // k=4, s=2, p=1: T -> floor(T/2)
    nn::Conv1d<S> conv2;  // k=3, s=1, p=1
    nn::LayerNorm<S> norm;
    nn::Linear<S> proj;
    Codebook<S> codebook;
    nn::Lstm<S> context;
    std::vector<nn::Linear<S>> heads;  // CPC prediction heads W_1..W_K

    // forward caches
    Tensor<S> a1_cache, a2_cache;  // pre-relu conv activations
    Tensor<S> z_cache;             // [B*T', d] pre-quantization rows
    std::vector<int> idx_cache;
    double vq_loss = 0.0, commit_loss = 0.0;
    int batch_cache = 0, tprime_cache = 0;

    Encoder() = default;
    Encoder(const EncoderConfig& cfg, Rng& rng);

    nn::ParamList<S> params();

    // mel [B, n_mels, T] -> (context [B, H, T'], z_q map [B, d, T']),
    // T' = floor(T/2). Throws DataError when T is below the conv receptive
    // field.
    std::pair<Tensor<S>, Tensor<S>> forward(const Tensor<S>& mel);

    // grad_context [B, H, T'], grad_zq [B, d, T'] (CPC scores touch z_q both
    // through the LSTM and directly as candidates).
    void backward(const Tensor<S>& grad_context, const Tensor<S>& grad_zq);

    // Inference: single normalized mel -> unit indices, one per 2 frames.
    UnitSequence encode_units(const Tensor<S>& mel, const std::string& id, const std::string& speaker,
                              double frame_rate);
    // Context features for one utterance, frames x context_dim.
    std::vector<std::vector<double>> encode_context(const Tensor<S>& mel);
};

template <typename S>
struct CpcResult {
    double loss = 0.0;
    std::vector<double> accuracy;  // per step k, fraction of positives ranked first
    Tensor<S> grad_context;        // [B, H, T']
    Tensor<S> grad_zq;             // [B, d, T']
};

// InfoNCE over K future steps: score (W_k c_t)^T z_{t+k} against N_neg
// negatives drawn from other positions in the batch; softmax-xent over
// 1+N_neg candidates, mean over (b, t, k). Head gradients accumulate when
// with_grads is set.
template <typename S>
CpcResult<S> cpc_infonce_loss(std::vector<nn::Linear<S>>& heads, const Tensor<S>& context,
                              const Tensor<S>& z_q, int n_negatives, Rng& rng, bool with_grads);

// ---------------------------------------------------------------- vocoder

struct VocoderConfig {
    int unit_vocab = 512;
    int code_embed_dim = 64;
    int n_speakers = 1;
    int speaker_embed_dim = 16;
    int lstm_hidden = 256;
    int sample_embed_dim = 32;  // previous mu-law code embedding
    int head_hidden = 128;
    int mulaw_channels = 256;
    int sample_rate = 16000;
    ScaleChain chain;                       // s1 * s2 == 2 * hop
    Upsampler up1 = Upsampler::nearest;     // before the LSTM
    Upsampler up2 = Upsampler::nearest;     // after the LSTM

    void validate() const;
};

// Fig-style unit vocoder: unit+speaker embedding -> upsample s1 -> LSTM ->
// upsample s2 -> combine with previous-sample embedding -> 256-way logits.
template <typename S>
struct Vocoder {
    VocoderConfig cfg;
    nn::Embedding<S> code_emb;
    nn::Embedding<S> spk_emb;
    nn::Lstm<S> lstm;
    nn::Embedding<S> sample_emb;
    nn::Linear<S> fc1;
    nn::Linear<S> fc2;

    // forward caches
    Tensor<S> up2_cache;    // [B, H, T_samples]
    Tensor<S> fc1_in_cache; // [B*T_samples, H + sample_embed]
    Tensor<S> fc1_out_cache;
    int batch_cache = 0, units_cache = 0;

    Vocoder() = default;
    Vocoder(const VocoderConfig& cfg, Rng& rng);

    nn::ParamList<S> params();

    int samples_per_unit() const { return cfg.chain.s1 * cfg.chain.s2; }

    // Teacher-forced forward. units [B][T_u] (equal lengths), teacher mu-law
    // codes [B][T_u * 2 * hop]. Returns logits [B*T_samples, 256] in sample
    // order. Throws DataError on a teacher length mismatch.
    Tensor<S> forward(const std::vector<std::vector<int>>& units, const std::vector<int>& speakers,
                      const std::vector<std::vector<int>>& teacher);

    void backward(const Tensor<S>& grad_logits);

    // Autoregressive generation; output length is exactly units * s1 * s2
    // samples. temperature <= 0 selects argmax decoding.
    Waveform generate(const std::vector<int>& units, int speaker, double temperature, Rng& rng);

    // Conditioning trunk shared by forward/generate: embeddings -> upsample
    // s1 -> LSTM -> upsample s2.
    Tensor<S> condition(const std::vector<std::vector<int>>& units, const std::vector<int>& speakers);
};

// Mean NLL (nats per sample) of teacher codes under the vocoder, no grads.
template <typename S>
double vocoder_nll(Vocoder<S>& voc, const std::vector<std::vector<int>>& units,
                   const std::vector<int>& speakers, const std::vector<std::vector<int>>& teacher);

}  // namespace zrlab
