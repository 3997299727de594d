#include "zrlab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "zrlab/util.hpp"

namespace zrlab {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "multistep") return ScheduleKind::multistep;
    if (s == "oclr") return ScheduleKind::oclr;
    if (s == "cyclic") return ScheduleKind::cyclic;
    if (s == "cosine_restarts") return ScheduleKind::cosine_restarts;
    throw ConfigError("unknown schedule kind '" + s + "'");
}

std::string to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::multistep: return "multistep";
        case ScheduleKind::oclr: return "oclr";
        case ScheduleKind::cyclic: return "cyclic";
        case ScheduleKind::cosine_restarts: return "cosine_restarts";
    }
    return "?";
}

void ScheduleConfig::validate() const {
    if (total_steps <= 0) throw ConfigError("scheduler.total_steps must be positive");
    if (base_lr <= 0.0) throw ConfigError("scheduler.base_lr must be positive");
    if (max_lr < base_lr) throw ConfigError("scheduler.max_lr must be >= base_lr");
    if (final_lr <= 0.0) throw ConfigError("scheduler.final_lr must be positive");
    if (cycle_fraction <= 0.0 || cycle_fraction > 1.0)
        throw ConfigError("scheduler.cycle_fraction must lie in (0, 1]");
    for (size_t i = 1; i < milestones.size(); ++i)
        if (milestones[i] <= milestones[i - 1])
            throw ConfigError("scheduler.milestones must be strictly increasing");
    if (kind == ScheduleKind::cyclic && step_size <= 0)
        throw ConfigError("scheduler.step_size must be positive");
    if (kind == ScheduleKind::cosine_restarts && (t0 <= 0 || t_mult < 1.0))
        throw ConfigError("scheduler.t0 must be positive and t_mult >= 1");
}

namespace {

// Endpoint-exact cosine interpolation: phase 0 -> a, phase 1 -> b.
double cosine_interp(double a, double b, double phase) {
    if (phase <= 0.0) return a;
    if (phase >= 1.0) return b;
    return b + (a - b) * 0.5 * (1.0 + std::cos(M_PI * phase));
}

}  // namespace

double lr_at(const ScheduleConfig& cfg, std::int64_t step) {
    if (step < 0 || step > cfg.total_steps) throw ConfigError("lr_at: step out of range");

    switch (cfg.kind) {
        case ScheduleKind::multistep: {
            int passed = 0;
            for (auto m : cfg.milestones)
                if (step >= m) ++passed;
            return cfg.base_lr * std::pow(cfg.milestone_factor, passed);
        }

        case ScheduleKind::oclr: {
            // Cosine rise base->max over the first half of the cycle window,
            // cosine fall max->base over the second half, then decay to
            // final_lr over the remaining steps.
            const std::int64_t cycle = std::max<std::int64_t>(
                2, static_cast<std::int64_t>(std::llround(cfg.cycle_fraction * static_cast<double>(cfg.total_steps))));
            const std::int64_t up = cycle / 2;
            if (step <= up) {
                if (step == up) return cfg.max_lr;  // peak attained exactly
                return cosine_interp(cfg.base_lr, cfg.max_lr, static_cast<double>(step) / static_cast<double>(up));
            }
            if (step <= cycle) {
                if (step == cycle) return cfg.base_lr;
                return cosine_interp(cfg.max_lr, cfg.base_lr,
                                     static_cast<double>(step - up) / static_cast<double>(cycle - up));
            }
            if (step == cfg.total_steps) return cfg.final_lr;
            const double phase = static_cast<double>(step - cycle) / static_cast<double>(cfg.total_steps - cycle);
            if (cfg.linear_decay) return cfg.base_lr + (cfg.final_lr - cfg.base_lr) * phase;
            return cosine_interp(cfg.base_lr, cfg.final_lr, phase);
        }

        case ScheduleKind::cyclic: {
            // Triangle between base and max with period 2*step_size.
            const std::int64_t pos = step % (2 * cfg.step_size);
            const std::int64_t dist = pos <= cfg.step_size ? pos : 2 * cfg.step_size - pos;
            return cfg.base_lr +
                   (cfg.max_lr - cfg.base_lr) * static_cast<double>(dist) / static_cast<double>(cfg.step_size);
        }

        case ScheduleKind::cosine_restarts: {
            std::int64_t period = cfg.t0;
            std::int64_t offset = step;
            while (offset >= period) {
                offset -= period;
                period = static_cast<std::int64_t>(std::llround(static_cast<double>(period) * cfg.t_mult));
                if (period <= 0) period = 1;
            }
            return cosine_interp(cfg.max_lr, cfg.base_lr,
                                 static_cast<double>(offset) / static_cast<double>(period));
        }
    }
    throw ConfigError("lr_at: bad schedule kind");
}

LrrtReport run_lr_range_test(const TrainStepFn& step_fn, const LrrtOptions& opts) {
    if (!(opts.start_lr < opts.end_lr)) throw ConfigError("lrrt: start_lr must be below end_lr");
    if (opts.start_lr <= 0.0) throw ConfigError("lrrt: start_lr must be positive");
    if (opts.step_rate < 1) throw ConfigError("lrrt: step_rate must be >= 1");
    if (opts.smooth_beta <= 0.0 || opts.smooth_beta >= 1.0) throw ConfigError("lrrt: beta must lie in (0,1)");

    const std::int64_t levels = opts.total_steps / opts.step_rate;
    if (levels < 2) throw ConfigError("lrrt: too few steps for the requested step_rate");
    const double ratio = std::pow(opts.end_lr / opts.start_lr, 1.0 / static_cast<double>(levels - 1));

    LrrtReport report;
    report.step_rate = opts.step_rate;
    report.records.reserve(static_cast<size_t>(levels));

    double ema = 0.0;
    double best = std::numeric_limits<double>::infinity();
    std::int64_t global_step = 0;

    for (std::int64_t level = 0; level < levels; ++level) {
        const double lr = opts.start_lr * std::pow(ratio, static_cast<double>(level));
        double raw = 0.0, smoothed = 0.0;
        bool blown = false;

        for (int i = 0; i < opts.step_rate; ++i) {
            raw = step_fn(lr);
            ++global_step;
            if (!std::isfinite(raw)) {
                blown = true;
                break;
            }
            ema = opts.smooth_beta * ema + (1.0 - opts.smooth_beta) * raw;
            smoothed = ema / (1.0 - std::pow(opts.smooth_beta, static_cast<double>(global_step)));
            if (smoothed > opts.explosion_factor * best) {
                blown = true;
                break;
            }
            best = std::min(best, smoothed);
        }

        report.records.push_back({global_step, lr, raw, smoothed});
        if (blown) {
            report.exploded = true;
            report.explosion_lr = lr;
            break;
        }
    }

    // Phase boundaries on the recorded curve: plateau ends at the first clear
    // drop below the starting level, descent ends at the smoothed minimum.
    if (!report.records.empty()) {
        const double start_level = report.records.front().smoothed_loss;
        std::int64_t plateau = 0;
        for (size_t i = 0; i < report.records.size(); ++i) {
            if (report.records[i].smoothed_loss < 0.95 * start_level) break;
            plateau = static_cast<std::int64_t>(i);
        }
        report.plateau_end = plateau;
        size_t argmin = 0;
        for (size_t i = 1; i < report.records.size(); ++i)
            if (report.records[i].smoothed_loss < report.records[argmin].smoothed_loss) argmin = i;
        report.descent_end = static_cast<std::int64_t>(argmin);
    }

    try {
        report.suggested_max_lr = analyze_lrrt(report);
    } catch (const NumericError&) {
        // Flat curve with no explosion: the sweep never found a limit, so the
        // guard value is the top of the tested range.
        report.suggested_max_lr = report.exploded ? report.records[report.descent_end].lr : opts.end_lr;
    }
    return report;
}

double analyze_lrrt(const LrrtReport& report) {
    if (report.records.size() < 10) throw NumericError("lrrt analysis: need at least 10 records");

    // Only the stretch before the explosion is usable.
    size_t usable = report.records.size();
    if (report.exploded && usable > 1) --usable;

    // Drops within rounding noise of zero are not descents: a flat sweep
    // must report no usable range instead of an arbitrary noise minimum.
    double scale = 0.0;
    for (size_t i = 0; i < usable; ++i)
        if (std::isfinite(report.records[i].smoothed_loss))
            scale = std::max(scale, std::fabs(report.records[i].smoothed_loss));
    const double noise_floor = 1e-9 * scale;

    double best_slope = 0.0;
    size_t best_idx = 0;
    bool found = false;
    for (size_t i = 1; i < usable; ++i) {
        const auto& a = report.records[i - 1];
        const auto& b = report.records[i];
        if (!std::isfinite(a.smoothed_loss) || !std::isfinite(b.smoothed_loss)) continue;
        const double dx = std::log(b.lr) - std::log(a.lr);
        if (dx <= 0.0) continue;
        const double slope = (b.smoothed_loss - a.smoothed_loss) / dx;
        if (slope < best_slope && slope < -noise_floor) {
            best_slope = slope;
            best_idx = i;
            found = true;
        }
    }
    if (!found) throw NumericError("lrrt analysis: no usable range");

    double suggestion = report.records[best_idx].lr;
    if (report.exploded && report.explosion_lr > 0.0)
        suggestion = std::min(suggestion, report.explosion_lr * 0.99);
    return suggestion;
}

}  // namespace zrlab
