#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "zrlab/audio.hpp"
#include "zrlab/rng.hpp"
#include "zrlab/util.hpp"

using namespace zrlab;

namespace {

std::string tmp_path(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "zrlab_audio_test";
    fs::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("wav save/load round-trips within PCM16 quantization") {
    Rng rng(3);
    Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(1234);
    for (auto& s : w.samples) s = rng.uniform(-1.0, 1.0);
    const std::string p = tmp_path("rt.wav");
    save_wav(p, w);
    const Waveform back = load_wav(p);
    REQUIRE(back.sample_rate == w.sample_rate);
    REQUIRE(back.samples.size() == w.samples.size());
    // write scales by 32767 with rounding, read divides by 32768:
    // |error| <= (|x| + 0.5) / 32768 <= 1.5 / 32768
    for (size_t i = 0; i < w.samples.size(); ++i)
        CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.5 / 32768.0);
}

TEST_CASE("wav re-save of a loaded file is byte-identical") {
    Rng rng(5);
    Waveform w;
    w.sample_rate = 8000;
    w.samples.resize(777);
    for (auto& s : w.samples) s = rng.uniform(-1.0, 1.0);
    const std::string p1 = tmp_path("a.wav"), p2 = tmp_path("b.wav");
    save_wav(p1, w);
    save_wav(p2, load_wav(p1));
    CHECK(read_file(p1) == read_file(p2));
}

TEST_CASE("wav loader rejects junk") {
    const std::string p = tmp_path("junk.wav");
    atomic_write_file(p, "this is not RIFF data at all........");
    CHECK_THROWS_AS(load_wav(p), DataError);
    CHECK_THROWS_AS(load_wav(tmp_path("missing.wav")), DataError);
}

TEST_CASE("mu-law code space round-trips") {
    for (int c = 0; c < 256; ++c) CHECK(mulaw_encode(mulaw_decode(c)) == c);
}

TEST_CASE("mu-law encode is monotone and clamps") {
    int prev = mulaw_encode(-1.0);
    for (int i = 1; i <= 200; ++i) {
        const int cur = mulaw_encode(-1.0 + 2.0 * i / 200.0);
        CHECK(cur >= prev);
        prev = cur;
    }
    CHECK(mulaw_encode(-5.0) == mulaw_encode(-1.0));
    CHECK(mulaw_encode(5.0) == mulaw_encode(1.0));
    CHECK(mulaw_encode(-1.0) == 0);
    CHECK(mulaw_encode(1.0) == 255);
}

TEST_CASE("mu-law decode(encode(x)) stays close to x") {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        const double y = mulaw_decode(mulaw_encode(x));
        // Companding noise is proportional to amplitude plus a small floor.
        CHECK(std::abs(y - x) < 0.02 * std::abs(x) + 0.01);
    }
    const auto codes = mulaw_encode(std::vector<double>{-0.5, 0.0, 0.5});
    CHECK(codes.size() == 3);
    CHECK(mulaw_decode(codes).size() == 3);
}

TEST_CASE("resample preserves duration and is identity at equal rates") {
    Rng rng(21);
    Waveform w;
    w.sample_rate = 22050;
    w.samples.resize(22050);
    for (auto& s : w.samples) s = rng.uniform(-0.5, 0.5);

    const Waveform same = resample(w, 22050);
    CHECK(same.samples == w.samples);

    for (int target : {16000, 8000, 44100}) {
        const Waveform r = resample(w, target);
        CHECK(r.sample_rate == target);
        const double want = w.duration_s();
        CHECK(std::abs(r.duration_s() - want) <= 1.0 / target + 1e-12);
    }
}

TEST_CASE("resample reproduces an in-band sine") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(16000);
    const double f = 440.0;
    for (size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = 0.5 * std::sin(2.0 * M_PI * f * static_cast<double>(i) / w.sample_rate);

    const Waveform r = resample(w, 8000);
    double err = 0.0;
    int counted = 0;
    // Skip the filter-length edges where the sinc kernel is truncated.
    for (size_t i = 200; i + 200 < r.samples.size(); ++i) {
        const double want = 0.5 * std::sin(2.0 * M_PI * f * static_cast<double>(i) / r.sample_rate);
        err += (r.samples[i] - want) * (r.samples[i] - want);
        ++counted;
    }
    CHECK(std::sqrt(err / counted) < 0.01);
}
