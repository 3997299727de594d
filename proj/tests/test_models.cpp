#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "zrlab/models.hpp"
#include "zrlab/rng.hpp"
#include "zrlab/util.hpp"

using namespace zrlab;

namespace {

EncoderConfig small_encoder_cfg() {
    EncoderConfig c;
    c.n_mels = 8;
    c.conv_channels = 12;
    c.embed_dim = 6;
    c.codebook_size = 10;
    c.context_dim = 9;
    c.cpc_horizon = 4;
    c.cpc_negatives = 16;
    return c;
}

VocoderConfig small_vocoder_cfg(ScaleChain chain) {
    VocoderConfig c;
    c.unit_vocab = 10;
    c.code_embed_dim = 6;
    c.n_speakers = 3;
    c.speaker_embed_dim = 4;
    c.lstm_hidden = 8;
    c.sample_embed_dim = 5;
    c.head_hidden = 7;
    c.sample_rate = 16000;
    c.chain = chain;
    return c;
}

template <typename S>
Tensor<S> random_tensor(std::vector<int> shape, Rng& rng) {
    Tensor<S> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<S>(rng.uniform(-1.0, 1.0));
    return t;
}

}  // namespace

// ---------------------------------------------------------------- vq

TEST_CASE("vq_quantize picks the nearest entry and copies its row bitwise") {
    Codebook<double> cb;
    cb.entries = Tensor<double>({3, 2});
    cb.entries.data = {0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
    cb.usage.assign(3, 0);
    cb.last_used.assign(3, 0);

    Tensor<double> z({3, 2});
    z.data = {0.1, 0.1, 0.9, 0.2, -0.1, 1.3};
    const auto r = vq_quantize(cb, z, 0.25);
    CHECK(r.indices == std::vector<int>{0, 1, 2});
    CHECK(r.z_q.data == std::vector<double>{0.0, 0.0, 1.0, 0.0, 0.0, 1.0});
}

TEST_CASE("vq tie resolves to the lowest index") {
    Codebook<double> cb;
    cb.entries = Tensor<double>({2, 2});
    cb.entries.data = {0.0, 0.0, 1.0, 0.0};
    cb.usage.assign(2, 0);
    cb.last_used.assign(2, 0);

    Tensor<double> z({1, 2});
    z.data = {0.5, 0.0};  // equidistant from both entries
    CHECK(vq_quantize(cb, z, 0.25).indices == std::vector<int>{0});
}

TEST_CASE("vq loss values: distance 0.05 row gives commit 0.05 at beta 1") {
    Codebook<double> cb;
    cb.entries = Tensor<double>({2, 2});
    cb.entries.data = {0.0, 0.0, 5.0, 5.0};
    cb.usage.assign(2, 0);
    cb.last_used.assign(2, 0);

    Tensor<double> z({1, 2});
    z.data = {0.1, 0.2};  // squared distance 0.01 + 0.04 = 0.05
    const auto r1 = vq_quantize(cb, z, 1.0);
    CHECK(r1.vq_loss == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(r1.commit_loss == doctest::Approx(0.05).epsilon(1e-12));
    const auto r2 = vq_quantize(cb, z, 0.25);
    CHECK(r2.commit_loss == doctest::Approx(0.0125).epsilon(1e-12));
}

TEST_CASE("vq_backward is straight-through plus analytic commit/codebook terms") {
    const double beta = 0.25;
    Codebook<double> cb;
    cb.entries = Tensor<double>({2, 2});
    cb.entries.data = {0.0, 0.0, 2.0, 2.0};
    cb.usage.assign(2, 0);
    cb.last_used.assign(2, 0);

    Tensor<double> z({2, 2});
    z.data = {0.1, -0.2, 1.8, 2.3};
    const auto r = vq_quantize(cb, z, beta);
    REQUIRE(r.indices == std::vector<int>{0, 1});

    Tensor<double> gzq({2, 2});
    gzq.data = {1.0, 2.0, 3.0, 4.0};
    Tensor<double> gz;
    cb.entries.ensure_grad();
    cb.entries.zero_grad();
    vq_backward(cb, z, r.indices, gzq, beta, gz);

    const int T = 2;
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < 2; ++j) {
            const double diff = z.at2(t, j) - cb.entries.at2(r.indices[static_cast<size_t>(t)], j);
            // grad_z = grad_zq (straight-through) + d(beta * mean ||z - e||^2)/dz
            CHECK(gz.at2(t, j) ==
                  doctest::Approx(gzq.at2(t, j) + 2.0 * beta * diff / T).epsilon(1e-12));
        }
    // codebook rows accumulate d(mean ||sg(z) - e||^2)/de = -2 diff / T
    CHECK(cb.entries.grad[0] == doctest::Approx(-2.0 * (0.1 - 0.0) / T).epsilon(1e-12));
    CHECK(cb.entries.grad[3] == doctest::Approx(-2.0 * (2.3 - 2.0) / T).epsilon(1e-12));
}

TEST_CASE("commit gradient matches central differences under a fixed assignment") {
    const double beta = 0.25;
    Codebook<double> cb;
    cb.entries = Tensor<double>({2, 2});
    cb.entries.data = {0.0, 0.0, 10.0, 10.0};  // far apart: assignment is stable
    cb.usage.assign(2, 0);
    cb.last_used.assign(2, 0);

    Tensor<double> z({2, 2});
    z.data = {0.3, -0.4, 9.7, 10.2};

    Tensor<double> gzq({2, 2});  // zero upstream: isolate the commit term
    Tensor<double> gz;
    cb.entries.ensure_grad();
    const auto r = vq_quantize(cb, z, beta);
    vq_backward(cb, z, r.indices, gzq, beta, gz);

    const double eps = 1e-6;
    for (size_t i = 0; i < z.data.size(); ++i) {
        const double saved = z.data[i];
        z.data[i] = saved + eps;
        const double lp = vq_quantize(cb, z, beta).commit_loss;
        z.data[i] = saved - eps;
        const double lm = vq_quantize(cb, z, beta).commit_loss;
        z.data[i] = saved;
        CHECK(gz.data[i] == doctest::Approx((lp - lm) / (2.0 * eps)).epsilon(1e-6));
    }
}

TEST_CASE("dead codebook entries are reseeded from batch rows after patience") {
    Rng rng(3);
    Codebook<float> cb(4, 3, rng);
    const Tensor<float> batch = random_tensor<float>({5, 3}, rng);

    // Entries 0 and 2 are in use; 1 and 3 go stale.
    codebook_note_usage(cb, std::vector<int>{0, 2}, 100);
    CHECK(cb.usage[0] == 1);
    CHECK(cb.last_used[2] == 100);

    const Tensor<float> before = cb.entries;
    // staleness 49 for the used entries (kept), 149 for the stale ones
    const int reset = codebook_reinit_dead(cb, batch, 149, 50, rng);
    CHECK(reset == 2);
    for (int j = 0; j < 3; ++j) {
        CHECK(cb.entries.at2(0, j) == before.at2(0, j));
        CHECK(cb.entries.at2(2, j) == before.at2(2, j));
    }
    for (int v : {1, 3}) {
        bool matches_batch_row = false;
        for (int r = 0; r < 5; ++r) {
            bool all = true;
            for (int j = 0; j < 3; ++j)
                if (cb.entries.at2(v, j) != batch.at2(r, j)) all = false;
            matches_batch_row |= all;
        }
        CHECK(matches_batch_row);
        CHECK(cb.last_used[static_cast<size_t>(v)] == 149);
    }
    // Fresh entries are safe for another patience window (the survivors need
    // their usage refreshed or they would age out themselves).
    codebook_note_usage(cb, std::vector<int>{0, 2}, 149);
    CHECK(codebook_reinit_dead(cb, batch, 151, 50, rng) == 0);
}

// ---------------------------------------------------------------- encoder

TEST_CASE("encoder halves the time axis and emits codebook rows") {
    Rng rng(5);
    Encoder<double> enc(small_encoder_cfg(), rng);
    for (int T : {16, 17, 31}) {
        Rng data_rng(7);
        const auto mel = random_tensor<double>({2, 8, T}, data_rng);
        auto [ctx, zq] = enc.forward(mel);
        CHECK(ctx.shape == std::vector<int>{2, 9, T / 2});
        CHECK(zq.shape == std::vector<int>{2, 6, T / 2});
        // Every z_q column is bitwise one of the codebook rows.
        for (int b = 0; b < 2; ++b)
            for (int t = 0; t < T / 2; ++t) {
                bool found = false;
                for (int v = 0; v < enc.codebook.vocab() && !found; ++v) {
                    bool all = true;
                    for (int j = 0; j < 6; ++j)
                        if (zq.data[(static_cast<size_t>(b) * 6 + j) * (T / 2) + t] !=
                            enc.codebook.entries.at2(v, j))
                            all = false;
                    found = all;
                }
                CHECK(found);
            }
    }
}

TEST_CASE("encoder rejects inputs below the conv receptive field") {
    Rng rng(5);
    Encoder<double> enc(small_encoder_cfg(), rng);
    Rng data_rng(7);
    const auto mel = random_tensor<double>({1, 8, 1}, data_rng);
    CHECK_THROWS_AS(enc.forward(mel), DataError);
}

TEST_CASE("encoder construction and forward are deterministic per seed") {
    Rng a(42), b(42);
    Encoder<float> e1(small_encoder_cfg(), a), e2(small_encoder_cfg(), b);
    Rng da(1), db(1);
    const auto m1 = random_tensor<float>({1, 8, 20}, da);
    const auto m2 = random_tensor<float>({1, 8, 20}, db);
    auto [c1, q1] = e1.forward(m1);
    auto [c2, q2] = e2.forward(m2);
    CHECK(c1.data == c2.data);
    CHECK(q1.data == q2.data);
}

TEST_CASE("encode_units emits one unit per two frames at the stated rate") {
    Rng rng(6);
    Encoder<float> enc(small_encoder_cfg(), rng);
    Rng data_rng(8);
    const auto mel = random_tensor<float>({1, 8, 24}, data_rng);
    const UnitSequence us = enc.encode_units(mel, "utt1", "spk0", 50.0);
    CHECK(us.id == "utt1");
    CHECK(us.speaker == "spk0");
    CHECK(us.frame_rate == 50.0);
    CHECK(us.indices.size() == 12);
    for (int idx : us.indices) {
        CHECK(idx >= 0);
        CHECK(idx < 10);
    }
    const auto ctx = enc.encode_context(mel);
    CHECK(ctx.size() == 12);
    CHECK(ctx[0].size() == 9);
}

// ---------------------------------------------------------------- cpc

TEST_CASE("untrained InfoNCE loss sits within 10% of ln(N_neg + 1)") {
    Rng rng(9);
    EncoderConfig cfg = small_encoder_cfg();
    Encoder<double> enc(cfg, rng);
    Rng data_rng(10);
    const auto mel = random_tensor<double>({8, 8, 32}, data_rng);
    auto [ctx, zq] = enc.forward(mel);
    Rng neg_rng(11);
    const auto r = cpc_infonce_loss(enc.heads, ctx, zq, cfg.cpc_negatives, neg_rng, false);
    const double want = std::log(17.0);
    CHECK(r.loss > 0.9 * want);
    CHECK(r.loss < 1.1 * want);
    CHECK(static_cast<int>(r.accuracy.size()) == cfg.cpc_horizon);
}

TEST_CASE("identical-code candidates make strict top-1 accuracy zero") {
    // Constant z_q: every negative ties with the positive, and ties never
    // count as correct predictions.
    Rng rng(12);
    EncoderConfig cfg = small_encoder_cfg();
    Encoder<double> enc(cfg, rng);
    Tensor<double> ctx = random_tensor<double>({2, 9, 10}, rng);
    Tensor<double> zq({2, 6, 10});
    for (auto& v : zq.data) v = 0.5;
    Rng neg_rng(13);
    const auto r = cpc_infonce_loss(enc.heads, ctx, zq, cfg.cpc_negatives, neg_rng, false);
    // Uniform scores: softmax over 17 identical candidates.
    CHECK(r.loss == doctest::Approx(std::log(17.0)).epsilon(1e-9));
    for (double a : r.accuracy) CHECK(a == 0.0);
}

TEST_CASE("cpc rejects sequences shorter than the horizon") {
    Rng rng(14);
    EncoderConfig cfg = small_encoder_cfg();
    Encoder<double> enc(cfg, rng);
    Tensor<double> ctx = random_tensor<double>({1, 9, 4}, rng);
    Tensor<double> zq = random_tensor<double>({1, 6, 4}, rng);
    Rng neg_rng(15);
    CHECK_THROWS_AS(cpc_infonce_loss(enc.heads, ctx, zq, cfg.cpc_negatives, neg_rng, false), DataError);
}

TEST_CASE("cpc gradients flow to heads, context, and candidates") {
    Rng rng(16);
    EncoderConfig cfg = small_encoder_cfg();
    Encoder<double> enc(cfg, rng);
    Tensor<double> ctx = random_tensor<double>({2, 9, 12}, rng);
    Tensor<double> zq = random_tensor<double>({2, 6, 12}, rng);
    for (auto& h : enc.heads) {
        h.weight.ensure_grad();
        h.bias.ensure_grad();
    }
    Rng neg_rng(17);
    const auto r = cpc_infonce_loss(enc.heads, ctx, zq, cfg.cpc_negatives, neg_rng, true);
    CHECK(r.grad_context.shape == ctx.shape);
    CHECK(r.grad_zq.shape == zq.shape);
    double gnorm = 0.0;
    for (double v : r.grad_context.data) gnorm += v * v;
    CHECK(gnorm > 0.0);
    double hnorm = 0.0;
    for (double v : enc.heads[0].weight.grad) hnorm += v * v;
    CHECK(hnorm > 0.0);
}

// ---------------------------------------------------------------- vocoder

TEST_CASE("generate emits exactly units * s1 * s2 samples for every preset chain") {
    Rng rng(18);
    struct Case {
        ScaleChain chain;
        int units;
    };
    for (const Case& c : {Case{{2, 160, 160}, 10}, Case{{16, 20, 160}, 7}, Case{{16, 16, 128}, 5},
                          Case{{10, 16, 80}, 51}, Case{{4, 8, 16}, 12}}) {
        Vocoder<float> voc(small_vocoder_cfg(c.chain), rng);
        std::vector<int> units(static_cast<size_t>(c.units));
        for (size_t i = 0; i < units.size(); ++i) units[i] = static_cast<int>(i % 10);
        Rng gen_rng(19);
        const Waveform w = voc.generate(units, 1, 0.0, gen_rng);
        CHECK(w.samples.size() == static_cast<size_t>(c.units) * c.chain.s1 * c.chain.s2);
        CHECK(w.samples.size() == static_cast<size_t>(c.units) * 2 * c.chain.hop);
        CHECK(w.sample_rate == 16000);
    }
}

TEST_CASE("10 units at hop 160 produce 3200 samples; 51 at hop 80 produce 8160") {
    Rng rng(20);
    Vocoder<float> base(small_vocoder_cfg({2, 160, 160}), rng);
    Rng g1(1);
    CHECK(base.generate(std::vector<int>(10, 3), 0, 0.0, g1).samples.size() == 3200);
    Vocoder<float> rebal(small_vocoder_cfg({10, 16, 80}), rng);
    Rng g2(1);
    CHECK(rebal.generate(std::vector<int>(51, 3), 0, 0.0, g2).samples.size() == 8160);
}

TEST_CASE("teacher-forced forward shapes and validation") {
    Rng rng(21);
    Vocoder<double> voc(small_vocoder_cfg({4, 8, 16}), rng);
    const int units_len = 3, spu = 32;
    const std::vector<std::vector<int>> units{{1, 2, 3}, {4, 5, 6}};
    std::vector<std::vector<int>> teacher(2, std::vector<int>(units_len * spu, 128));
    const auto logits = voc.forward(units, {0, 1}, teacher);
    CHECK(logits.shape == std::vector<int>{2 * units_len * spu, 256});

    std::vector<std::vector<int>> bad = teacher;
    bad[1].pop_back();
    CHECK_THROWS_AS(voc.forward(units, {0, 1}, bad), DataError);
    CHECK_THROWS_AS(voc.forward({{1}, {2, 3}}, {0, 1}, teacher), DataError);
    CHECK_THROWS_AS(voc.forward(units, {0}, teacher), DataError);
}

TEST_CASE("speaker identity changes the conditioning") {
    Rng rng(22);
    Vocoder<double> voc(small_vocoder_cfg({4, 8, 16}), rng);
    const std::vector<std::vector<int>> units{{1, 2, 3, 4}};
    const auto a = voc.condition(units, {0});
    const auto b = voc.condition(units, {2});
    REQUIRE(a.shape == b.shape);
    double diff = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) diff = std::max(diff, std::abs(a.data[i] - b.data[i]));
    CHECK(diff > 1e-6);
}

TEST_CASE("vocoder_nll equals the teacher-forced cross entropy") {
    Rng rng(23);
    Vocoder<double> voc(small_vocoder_cfg({4, 8, 16}), rng);
    const std::vector<std::vector<int>> units{{7, 8}};
    std::vector<std::vector<int>> teacher{std::vector<int>(64)};
    Rng t(24);
    for (auto& c : teacher[0]) c = static_cast<int>(t.below(256));
    const double nll = vocoder_nll(voc, units, {0}, teacher);

    const auto logits = voc.forward(units, {0}, teacher);
    std::vector<int> flat(teacher[0].begin(), teacher[0].end());
    const auto [xent, grad] = nn::softmax_xent(logits, flat);
    CHECK(nll == doctest::Approx(xent).epsilon(1e-12));
}

TEST_CASE("generation is deterministic at temperature 0 and per-seed at temperature 1") {
    Rng rng(25);
    Vocoder<float> voc(small_vocoder_cfg({4, 8, 16}), rng);
    const std::vector<int> units{1, 2, 3};
    Rng g1(7), g2(7), g3(8);
    const auto a = voc.generate(units, 0, 0.0, g1);
    const auto b = voc.generate(units, 0, 0.0, g2);
    CHECK(a.samples == b.samples);
    Rng g4(7), g5(7);
    const auto c = voc.generate(units, 0, 1.0, g4);
    const auto d = voc.generate(units, 0, 1.0, g5);
    CHECK(c.samples == d.samples);
    const auto e = voc.generate(units, 0, 1.0, g3);
    CHECK(c.samples != e.samples);
}

TEST_CASE("generated samples decode from the mu-law grid") {
    Rng rng(26);
    Vocoder<float> voc(small_vocoder_cfg({4, 8, 16}), rng);
    Rng g(1);
    const auto w = voc.generate({1, 2}, 0, 0.0, g);
    for (double s : w.samples) {
        const int code = mulaw_encode(s);
        CHECK(s == doctest::Approx(mulaw_decode(code)).epsilon(1e-6));
    }
}
