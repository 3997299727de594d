#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "zrlab/features.hpp"
#include "zrlab/rng.hpp"
#include "zrlab/util.hpp"

using namespace zrlab;

namespace {

std::string tmp_path(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "zrlab_features_test";
    fs::create_directories(dir);
    return (dir / name).string();
}

FeatureConfig toy_features() {
    FeatureConfig cfg;
    cfg.sample_rate = 4000;
    cfg.n_mels = 32;
    cfg.win_ms = 16.0;
    cfg.hop = 16;
    cfg.n_fft = 128;
    cfg.fmax = 2000.0;
    return cfg;
}

Waveform noise(int n, int sr, std::uint64_t seed) {
    Rng rng(seed);
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(static_cast<size_t>(n));
    for (auto& s : w.samples) s = rng.uniform(-0.8, 0.8);
    return w;
}

}  // namespace

TEST_CASE("frame_count formula") {
    CHECK(frame_count(0, 640, 160) == 0);
    CHECK(frame_count(639, 640, 160) == 0);
    CHECK(frame_count(640, 640, 160) == 1);
    CHECK(frame_count(799, 640, 160) == 1);
    CHECK(frame_count(800, 640, 160) == 2);
    CHECK(frame_count(16000, 640, 160) == 97);
}

TEST_CASE("mel filterbank shape, positivity, and coverage") {
    const FeatureConfig cfg = toy_features();
    const auto fb = mel_filterbank(cfg);
    const int n_bins = cfg.n_fft / 2 + 1;
    REQUIRE(static_cast<int>(fb.size()) == cfg.n_mels * n_bins);
    for (double v : fb) CHECK(v >= 0.0);
    for (int m = 0; m < cfg.n_mels; ++m) {
        double row = 0.0;
        for (int b = 0; b < n_bins; ++b) row += fb[static_cast<size_t>(m) * n_bins + b];
        CHECK(row > 0.0);  // every filter touches at least one bin
    }
}

TEST_CASE("log_mel shape and floor") {
    const FeatureConfig cfg = toy_features();
    const Waveform w = noise(4000, 4000, 1);
    const MelSpectrogram m = log_mel(w, cfg);
    CHECK(m.n_mels == cfg.n_mels);
    CHECK(m.n_frames == frame_count(static_cast<std::int64_t>(w.samples.size()), cfg.win_samples(), cfg.hop));
    CHECK(m.norm == NormState::log);
    CHECK(m.config_hash == cfg.hash());
    const double floor = std::log(cfg.log_floor);
    for (double v : m.values) CHECK(v >= floor - 1e-12);
}

TEST_CASE("minmax_normalize maps to [0,1] and denormalize inverts") {
    const FeatureConfig cfg = toy_features();
    const MelSpectrogram m = log_mel(noise(4000, 4000, 2), cfg);
    const MelSpectrogram n = minmax_normalize(m);
    CHECK(n.norm == NormState::minmax);
    double lo = 1e300, hi = -1e300;
    for (double v : n.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(1.0));
    const MelSpectrogram back = minmax_denormalize(n);
    for (size_t i = 0; i < m.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(m.values[i]).epsilon(1e-12));
}

TEST_CASE("minmax_normalize with external stats and constant input") {
    MelSpectrogram m;
    m.n_mels = 2;
    m.n_frames = 3;
    m.values = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    m.norm = NormState::log;
    const MelSpectrogram n = minmax_normalize(m, std::make_pair(0.0, 10.0));
    CHECK(n.values[0] == doctest::Approx(0.1));
    CHECK(n.values[5] == doctest::Approx(0.6));
    CHECK(n.norm_min == 0.0);
    CHECK(n.norm_max == 10.0);

    MelSpectrogram flat = m;
    flat.values.assign(6, 4.2);
    const MelSpectrogram z = minmax_normalize(flat);
    for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("MEL1 cache round-trips through disk with a JSON sidecar") {
    const FeatureConfig cfg = toy_features();
    MelSpectrogram m = minmax_normalize(log_mel(noise(3000, 4000, 3), cfg));
    const std::string p = tmp_path("u0.mel");
    save_mel(p, m);

    // Sidecar lives at the same stem.
    const std::string sidecar = tmp_path("u0.json");
    const auto meta = nlohmann::json::parse(read_file(sidecar));
    CHECK(meta.at("config_hash").get<std::string>() == cfg.hash());
    CHECK(meta.at("norm").get<std::string>() == "minmax");

    const MelSpectrogram back = load_mel(p);
    CHECK(back.n_mels == m.n_mels);
    CHECK(back.n_frames == m.n_frames);
    CHECK(back.norm == NormState::minmax);
    CHECK(back.norm_min == doctest::Approx(m.norm_min).epsilon(1e-7));
    CHECK(back.norm_max == doctest::Approx(m.norm_max).epsilon(1e-7));
    CHECK(back.config_hash == m.config_hash);
    for (size_t i = 0; i < m.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(m.values[i]).epsilon(1e-6));  // f32 payload

    // A second save of the loaded copy is byte-identical (f32 is sticky).
    const std::string p2 = tmp_path("u1.mel");
    save_mel(p2, back);
    CHECK(read_file(p) == read_file(p2));
}

TEST_CASE("load_mel rejects a bad magic") {
    const std::string p = tmp_path("bad.mel");
    atomic_write_file(p, "NOPE....................");
    CHECK_THROWS_AS(load_mel(p), DataError);
}

TEST_CASE("sample_training_window aligns mel and audio") {
    const FeatureConfig cfg = toy_features();
    const Waveform w = noise(4000, 4000, 4);
    const MelSpectrogram m = minmax_normalize(log_mel(w, cfg));
    Rng rng(5);
    const int frames = 16;
    for (int trial = 0; trial < 20; ++trial) {
        const TrainingWindow win = sample_training_window(m, w, frames, cfg.hop, rng);
        REQUIRE(win.mel.n_frames == frames);
        REQUIRE(static_cast<int>(win.audio.size()) == frames * cfg.hop);
        CHECK(win.start_frame >= 0);
        CHECK(win.start_frame + frames <= m.n_frames);
        for (int mel = 0; mel < m.n_mels; ++mel)
            for (int f = 0; f < frames; ++f)
                CHECK(win.mel.at(mel, f) == m.at(mel, win.start_frame + f));
        for (int i = 0; i < frames * cfg.hop; ++i)
            CHECK(win.audio[static_cast<size_t>(i)] ==
                  w.samples[static_cast<size_t>(win.start_frame) * cfg.hop + i]);
    }
}

TEST_CASE("sample_training_window is deterministic per seed and rejects short inputs") {
    const FeatureConfig cfg = toy_features();
    const Waveform w = noise(2000, 4000, 6);
    const MelSpectrogram m = minmax_normalize(log_mel(w, cfg));
    Rng a(9), b(9);
    const TrainingWindow wa = sample_training_window(m, w, 8, cfg.hop, a);
    const TrainingWindow wb = sample_training_window(m, w, 8, cfg.hop, b);
    CHECK(wa.start_frame == wb.start_frame);

    Rng c(1);
    CHECK_THROWS_AS(sample_training_window(m, w, m.n_frames + 1, cfg.hop, c), DataError);
}

TEST_CASE("feature config hash tracks every field") {
    FeatureConfig a = toy_features();
    FeatureConfig b = a;
    CHECK(a.hash() == b.hash());
    b.fmax = 1999.0;
    CHECK(a.hash() != b.hash());
    b = a;
    b.hop = 32;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("feature config validation") {
    FeatureConfig bad = toy_features();
    bad.hop = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = toy_features();
    bad.fmax = 3000.0;  // above Nyquist
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = toy_features();
    bad.n_fft = 8;  // below the window
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
