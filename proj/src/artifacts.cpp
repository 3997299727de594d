#include "zrlab/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "zrlab/util.hpp"

namespace zrlab {

// ---------------------------------------------------------------- csv

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    const auto append_row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out.push_back(',');
            const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
            if (!quote) {
                out += cells[i];
                continue;
            }
            out.push_back('"');
            for (char c : cells[i]) {
                if (c == '"') out.push_back('"');
                out.push_back(c);
            }
            out.push_back('"');
        }
        out.push_back('\n');
    };
    append_row(header);
    for (const auto& row : rows) append_row(row);
    atomic_write_file(path, out);
}

std::string csv_cell(double v) { return format_double(v); }
std::string csv_cell(std::int64_t v) { return std::to_string(v); }

void write_metric_csv(const std::string& path, const std::vector<metrics::MetricReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(reports.size());
    for (const auto& r : reports)
        rows.push_back({r.name, csv_cell(r.value), r.units, csv_cell(static_cast<std::int64_t>(r.n_items)),
                        r.config});
    write_csv(path, {"metric", "value", "units", "n_items", "config"}, rows);
}

// ---------------------------------------------------------------- svg

namespace {

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out.push_back(c);
    }
    return out;
}

std::string fmt_tick(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<SvgSeries>& series, bool log_x) {
    constexpr int W = 720, H = 440;
    constexpr int ML = 70, MR = 20, MT = 40, MB = 50;
    constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double xv = log_x ? std::log10(s.x[i]) : s.x[i];
            if (!std::isfinite(xv) || !std::isfinite(s.y[i])) continue;
            x_min = std::min(x_min, xv);
            x_max = std::max(x_max, xv);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (!std::isfinite(x_min)) {
        x_min = 0;
        x_max = 1;
        y_min = 0;
        y_max = 1;
    }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;

    const auto px = [&](double x) {
        const double v = log_x ? std::log10(x) : x;
        return ML + (v - x_min) / (x_max - x_min) * (W - ML - MR);
    };
    const auto py = [&](double y) { return H - MB - (y - y_min) / (y_max - y_min) * (H - MT - MB); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
        << svg_escape(title) << "</text>\n";

    // axes
    svg << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\"" << H - MB
        << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 5.0;
        const double gx = ML + (W - ML - MR) * i / 5.0;
        svg << "<line x1=\"" << gx << "\" y1=\"" << H - MB << "\" x2=\"" << gx << "\" y2=\"" << H - MB + 5
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << gx << "\" y=\"" << H - MB + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
            << (log_x ? "1e" + fmt_tick(fx) : fmt_tick(fx)) << "</text>\n";
        const double fy = y_min + (y_max - y_min) * i / 5.0;
        const double gy = H - MB - (H - MT - MB) * i / 5.0;
        svg << "<line x1=\"" << ML - 5 << "\" y1=\"" << gy << "\" x2=\"" << ML << "\" y2=\"" << gy
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << ML - 8 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
            << fmt_tick(fy) << "</text>\n";
    }
    svg << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << svg_escape(x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (MT + H - MB) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << (MT + H - MB) / 2 << ")\">" << svg_escape(y_label) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = colors[si % 6];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << W - MR - 6 << "\" y=\"" << MT + 16 * (si + 1)
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << svg_escape(s.label)
            << "</text>\n";
    }
    svg << "</svg>\n";
    atomic_write_file(path, svg.str());
}

// ---------------------------------------------------------------- jsonl

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out.push_back('\n');
    }
    atomic_write_file(path, out);
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<nlohmann::json> rows;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            rows.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::vector<ManifestEntry> out;
    for (const auto& row : read_jsonl(path)) {
        ManifestEntry e;
        try {
            e.id = row.at("id").get<std::string>();
            e.wav = row.at("wav").get<std::string>();
            e.speaker = row.at("speaker").get<std::string>();
            e.transcript = row.value("transcript", "");
            e.split = row.value("split", "train");
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(path + ": bad manifest row for id '" + e.id + "': " + ex.what());
        }
        out.push_back(std::move(e));
    }
    if (out.empty()) throw DataError(path + ": empty manifest");
    return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::vector<nlohmann::json> rows;
    rows.reserve(entries.size());
    for (const auto& e : entries) {
        nlohmann::json row = {{"id", e.id}, {"wav", e.wav}, {"speaker", e.speaker}, {"split", e.split}};
        if (!e.transcript.empty()) row["transcript"] = e.transcript;
        rows.push_back(std::move(row));
    }
    write_jsonl(path, rows);
}

std::vector<UnitSequence> read_units_jsonl(const std::string& path) {
    std::vector<UnitSequence> out;
    for (const auto& row : read_jsonl(path)) {
        UnitSequence u;
        try {
            u.id = row.at("id").get<std::string>();
            u.speaker = row.at("speaker").get<std::string>();
            u.indices = row.at("indices").get<std::vector<int>>();
            u.frame_rate = row.at("frame_rate").get<double>();
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(path + ": bad units row: " + std::string(ex.what()));
        }
        out.push_back(std::move(u));
    }
    if (out.empty()) throw DataError(path + ": empty units file");
    return out;
}

void write_units_jsonl(const std::string& path, const std::vector<UnitSequence>& units) {
    std::vector<nlohmann::json> rows;
    rows.reserve(units.size());
    for (const auto& u : units)
        rows.push_back({{"id", u.id},
                        {"speaker", u.speaker},
                        {"indices", u.indices},
                        {"frame_rate", u.frame_rate}});
    write_jsonl(path, rows);
}

// ---------------------------------------------------------------- run manifest

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const nlohmann::json& config, std::uint64_t seed, double wall_seconds,
                        const std::vector<std::string>& output_paths) {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& p : output_paths) {
        const std::string content = read_file(p);
        outputs.push_back({{"path", p}, {"bytes", content.size()}, {"fnv1a64", hash_hex(fnv1a64(content))}});
    }
    nlohmann::json manifest = {{"command", command},
                               {"config_hash", hash_hex(fnv1a64(config.dump()))},
                               {"seed", seed},
                               {"wall_seconds", wall_seconds},
                               {"outputs", outputs}};
    atomic_write_file(out_dir + "/run_manifest_" + command + ".json", manifest.dump(2) + "\n");
}

}  // namespace zrlab
