#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "zrlab/metrics.hpp"
#include "zrlab/units.hpp"

namespace zrlab {

// ---------------------------------------------------------------- csv

// All cells written as-is; numeric cells should come through format_double
// so they round-trip exactly.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string csv_cell(double v);
std::string csv_cell(std::int64_t v);

void write_metric_csv(const std::string& path, const std::vector<metrics::MetricReport>& reports);

// ---------------------------------------------------------------- svg

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};

// Standalone line chart with axes and tick labels; log_x plots x on a log10
// axis (values must be positive).
void write_svg_chart(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<SvgSeries>& series, bool log_x = false);

// ---------------------------------------------------------------- jsonl

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

// Dataset manifest rows: one utterance each.
struct ManifestEntry {
    std::string id;
    std::string wav;         // path, relative to the manifest directory
    std::string speaker;
    std::string transcript;  // optional, empty when absent
    std::string split;       // "train" | "val" | "test"
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

std::vector<UnitSequence> read_units_jsonl(const std::string& path);
void write_units_jsonl(const std::string& path, const std::vector<UnitSequence>& units);

// ---------------------------------------------------------------- run manifest

// Written once per CLI command: config hash, seed, wall time, and an FNV-1a
// content hash per declared output, so reruns are comparable byte-for-byte.
void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const nlohmann::json& config, std::uint64_t seed, double wall_seconds,
                        const std::vector<std::string>& output_paths);

}  // namespace zrlab
