#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace zrlab {

enum class ScheduleKind { multistep, oclr, cyclic, cosine_restarts };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::multistep;
    std::int64_t total_steps = 160000;
    double base_lr = 4e-4;
    double max_lr = 4e-4;
    double final_lr = 4e-8;
    std::vector<std::int64_t> milestones;  // multistep
    double milestone_factor = 0.5;
    double cycle_fraction = 0.3;  // oclr: fraction of total_steps spent in the cycle
    bool linear_decay = false;    // oclr tail shape; cosine otherwise
    std::int64_t step_size = 2000;  // cyclic: half-period
    std::int64_t t0 = 10000;        // cosine_restarts: first period
    double t_mult = 2.0;

    void validate() const;
};

// Pure function of (cfg, step); calling twice yields identical values, which
// is what makes checkpoint resume exact.
double lr_at(const ScheduleConfig& cfg, std::int64_t step);

struct LrrtRecord {
    std::int64_t step = 0;  // global optimization step at which this lr level ended
    double lr = 0.0;
    double raw_loss = 0.0;
    double smoothed_loss = 0.0;
};

struct LrrtReport {
    std::vector<LrrtRecord> records;
    int step_rate = 1;
    bool exploded = false;
    double explosion_lr = 0.0;  // lr level at which the stop triggered
    double suggested_max_lr = 0.0;
    std::int64_t plateau_end = 0;  // record indices
    std::int64_t descent_end = 0;
};

struct LrrtOptions {
    double start_lr = 1e-6;
    double end_lr = 1.0;
    int step_rate = 1;          // optimization steps per lr level
    std::int64_t total_steps = 600;  // level count = total_steps / step_rate
    double smooth_beta = 0.98;  // bias-corrected EMA over raw losses
    double explosion_factor = 4.0;
};

// One optimization step at the given lr; returns the raw training loss. The
// closure owns its model, optimizer state, and data stream for the duration
// of the test.
using TrainStepFn = std::function<double(double lr)>;

LrrtReport run_lr_range_test(const TrainStepFn& step_fn, const LrrtOptions& opts);

// LR at the steepest smoothed-loss descent on the log-lr axis, restricted to
// records before the explosion. Throws NumericError("no usable range") when
// the curve never descends.
double analyze_lrrt(const LrrtReport& report);

}  // namespace zrlab
