#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "zrlab/config.hpp"
#include "zrlab/schedule.hpp"
#include "zrlab/util.hpp"

using namespace zrlab;

TEST_CASE("multistep halves exactly at each milestone") {
    const ScheduleConfig s = preset_config("baseline").sched;
    REQUIRE(s.kind == ScheduleKind::multistep);
    CHECK(lr_at(s, 0) == 4e-4);
    CHECK(lr_at(s, 49999) == 4e-4);
    CHECK(lr_at(s, 50000) == 4e-4 * 0.5);
    CHECK(lr_at(s, 99999) == 4e-4 * 0.25);
    CHECK(lr_at(s, 125000) == 4e-4 * 0.0625);
    // Five halvings: exact in floating point because each is a power of two.
    CHECK(lr_at(s, 150000) == 1.25e-5);
    CHECK(lr_at(s, 160000) == 1.25e-5);
}

TEST_CASE("lr_at domain is [0, total_steps] inclusive") {
    const ScheduleConfig s = preset_config("baseline").sched;
    CHECK_NOTHROW(lr_at(s, 0));
    CHECK_NOTHROW(lr_at(s, s.total_steps));
    CHECK_THROWS_AS(lr_at(s, -1), ConfigError);
    CHECK_THROWS_AS(lr_at(s, s.total_steps + 1), ConfigError);
}

TEST_CASE("oclr attains its peak exactly and ends at final_lr exactly") {
    const ScheduleConfig s = preset_config("balanced-60k").sched;
    REQUIRE(s.kind == ScheduleKind::oclr);
    const std::int64_t cycle =
        std::max<std::int64_t>(2, std::llround(s.cycle_fraction * static_cast<double>(s.total_steps)));
    const std::int64_t up = cycle / 2;

    CHECK(lr_at(s, 0) == s.base_lr);
    CHECK(lr_at(s, up) == 4e-3);  // peak, bitwise
    CHECK(lr_at(s, cycle) == s.base_lr);
    CHECK(lr_at(s, s.total_steps) == s.final_lr);

    // The peak is the global maximum.
    double peak_seen = 0.0;
    for (std::int64_t t = 0; t <= s.total_steps; t += 97) peak_seen = std::max(peak_seen, lr_at(s, t));
    CHECK(peak_seen <= 4e-3);

    // Monotone rise then fall inside the cycle.
    for (std::int64_t t = 1; t <= up; ++t) CHECK(lr_at(s, t) >= lr_at(s, t - 1));
    for (std::int64_t t = up + 1; t <= cycle; ++t) CHECK(lr_at(s, t) <= lr_at(s, t - 1));
    // Decay tail never rises.
    for (std::int64_t t = cycle + 1; t <= s.total_steps; t += 13) CHECK(lr_at(s, t) <= lr_at(s, t - 1));
}

TEST_CASE("schedules are pure: recomputation equals the first pass") {
    for (const char* preset : {"baseline", "balanced-30k", "toy-oclr", "toy-multistep"}) {
        const ScheduleConfig s = preset_config(preset).sched;
        std::vector<double> first;
        const std::int64_t stride = std::max<std::int64_t>(1, s.total_steps / 500);
        for (std::int64_t t = 0; t <= s.total_steps; t += stride) first.push_back(lr_at(s, t));
        size_t i = 0;
        for (std::int64_t t = 0; t <= s.total_steps; t += stride) CHECK(lr_at(s, t) == first[i++]);
    }
}

TEST_CASE("cyclic triangles between base and max") {
    ScheduleConfig s;
    s.kind = ScheduleKind::cyclic;
    s.total_steps = 100;
    s.base_lr = 1e-4;
    s.max_lr = 1e-3;
    s.step_size = 10;
    s.validate();
    CHECK(lr_at(s, 0) == s.base_lr);
    CHECK(lr_at(s, 10) == s.max_lr);
    CHECK(lr_at(s, 20) == s.base_lr);
    CHECK(lr_at(s, 30) == s.max_lr);
    CHECK(lr_at(s, 5) == doctest::Approx(s.base_lr + 0.5 * (s.max_lr - s.base_lr)));
}

TEST_CASE("cosine restarts reset to max_lr at each period boundary") {
    ScheduleConfig s;
    s.kind = ScheduleKind::cosine_restarts;
    s.total_steps = 100;
    s.base_lr = 1e-5;
    s.max_lr = 1e-3;
    s.t0 = 10;
    s.t_mult = 2.0;
    s.validate();
    CHECK(lr_at(s, 0) == s.max_lr);
    CHECK(lr_at(s, 10) == s.max_lr);  // first restart
    CHECK(lr_at(s, 30) == s.max_lr);  // second restart (period 20)
    CHECK(lr_at(s, 9) < lr_at(s, 0));
    CHECK(lr_at(s, 29) < lr_at(s, 10));
}

TEST_CASE("schedule validation rejects bad fields") {
    ScheduleConfig s = preset_config("baseline").sched;
    s.total_steps = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = preset_config("baseline").sched;
    s.milestones = {100, 100};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = preset_config("balanced-30k").sched;
    s.base_lr = 2.0 * s.max_lr;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = preset_config("balanced-30k").sched;
    s.cycle_fraction = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

// ---------------------------------------------------------------- lr range test

namespace {

LrrtOptions quick_opts(double start, double end, int step_rate, std::int64_t total) {
    LrrtOptions o;
    o.start_lr = start;
    o.end_lr = end;
    o.step_rate = step_rate;
    o.total_steps = total;
    return o;
}

}  // namespace

TEST_CASE("lrrt ladder is geometric and strictly increasing") {
    auto flat = [](double) { return 1.0; };
    const auto rep = run_lr_range_test(flat, quick_opts(1e-5, 1e-1, 1, 200));
    REQUIRE(rep.records.size() == 200);
    CHECK(rep.records.front().lr == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(rep.records.back().lr == doctest::Approx(1e-1).epsilon(1e-12));
    const double want_ratio = std::pow(1e-1 / 1e-5, 1.0 / 199.0);
    for (size_t i = 1; i < rep.records.size(); ++i) {
        CHECK(rep.records[i].lr > rep.records[i - 1].lr);
        CHECK(rep.records[i].lr / rep.records[i - 1].lr == doctest::Approx(want_ratio).epsilon(1e-12));
    }
    // step_rate groups optimization steps per level.
    const auto rep5 = run_lr_range_test(flat, quick_opts(1e-5, 1e-1, 5, 200));
    CHECK(rep5.records.size() == 40);
    CHECK(rep5.records[0].step == 5);
}

TEST_CASE("flat loss never explodes and suggests the end of the range") {
    auto flat = [](double) { return 2.5; };
    const auto rep = run_lr_range_test(flat, quick_opts(1e-6, 1.0, 1, 300));
    CHECK(!rep.exploded);
    CHECK(rep.records.size() == 300);
    // With no descent the whole sweep is usable; the suggestion falls back
    // to the last stable lr.
    CHECK(rep.suggested_max_lr == doctest::Approx(rep.records.back().lr).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(analyze_lrrt(rep), "lrrt analysis: no usable range", NumericError);
}

TEST_CASE("first smoothed value equals the first raw loss (bias-corrected EMA)") {
    int n = 0;
    auto decaying = [&n](double) { return 5.0 - 0.01 * n++; };
    const auto rep = run_lr_range_test(decaying, quick_opts(1e-4, 1e-2, 1, 50));
    REQUIRE(!rep.records.empty());
    CHECK(rep.records[0].smoothed_loss == doctest::Approx(rep.records[0].raw_loss).epsilon(1e-12));
}

TEST_CASE("explosion triggers once smoothed loss exceeds 4x the best") {
    // Loss is benign until lr crosses 1e-2, then blows up hard.
    auto fn = [](double lr) { return lr < 1e-2 ? 1.0 : 500.0; };
    const auto rep = run_lr_range_test(fn, quick_opts(1e-4, 1.0, 1, 200));
    CHECK(rep.exploded);
    CHECK(rep.explosion_lr >= 1e-2);
    // Records stop at the explosion.
    CHECK(rep.records.back().lr == doctest::Approx(rep.explosion_lr).epsilon(1e-12));
    CHECK(rep.records.back().smoothed_loss > 4.0);
    // All but the tail of the sweep was cut off.
    CHECK(rep.records.size() < 200);
}

TEST_CASE("non-finite raw loss stops the sweep immediately") {
    auto fn = [](double lr) { return lr < 1e-3 ? 1.0 : std::numeric_limits<double>::quiet_NaN(); };
    const auto rep = run_lr_range_test(fn, quick_opts(1e-4, 1.0, 1, 100));
    CHECK(rep.exploded);
    CHECK(rep.explosion_lr >= 1e-3);
}

TEST_CASE("analyze_lrrt picks the steepest descent before the explosion") {
    // Plateau at 4, clean descent between 1e-3 and 1e-2, explosion at 1e-1.
    auto fn = [](double lr) {
        if (lr < 1e-3) return 4.0;
        if (lr < 1e-2) return 4.0 - 3.0 * (std::log10(lr) + 3.0);  // slope in log-lr
        if (lr < 1e-1) return 1.0;
        return 1e6;
    };
    const auto rep = run_lr_range_test(fn, quick_opts(1e-5, 1.0, 1, 400));
    REQUIRE(rep.exploded);
    const double star = analyze_lrrt(rep);
    CHECK(star >= 1e-3);
    CHECK(star <= 5e-2);  // EMA smoothing lags the raw ramp by ~half a decade
    CHECK(rep.suggested_max_lr == star);
    CHECK(rep.descent_end >= rep.plateau_end);
}

TEST_CASE("lrrt rejects malformed options") {
    auto flat = [](double) { return 1.0; };
    CHECK_THROWS_AS(run_lr_range_test(flat, quick_opts(1e-2, 1e-3, 1, 100)), ConfigError);
    CHECK_THROWS_AS(run_lr_range_test(flat, quick_opts(0.0, 1e-3, 1, 100)), ConfigError);
    CHECK_THROWS_AS(run_lr_range_test(flat, quick_opts(1e-5, 1e-1, 0, 100)), ConfigError);
    CHECK_THROWS_AS(run_lr_range_test(flat, quick_opts(1e-5, 1e-1, 200, 100)), ConfigError);
}
