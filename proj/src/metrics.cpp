#include "zrlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "zrlab/rng.hpp"
#include "zrlab/util.hpp"

namespace zrlab {
namespace metrics {

// ---------------------------------------------------------------- text

namespace {

template <typename Seq>
long levenshtein(const Seq& ref, const Seq& hyp) {
    const std::size_t n = ref.size(), m = hyp.size();
    std::vector<long> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<long>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<long>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const long sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

}  // namespace

long edit_distance(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    return levenshtein(ref, hyp);
}

long edit_distance(const std::string& ref, const std::string& hyp) { return levenshtein(ref, hyp); }

ErrorUnit error_unit_from_string(const std::string& s) {
    if (s == "chars" || s == "char" || s == "cer") return ErrorUnit::chars;
    if (s == "words" || s == "word" || s == "wer") return ErrorUnit::words;
    if (s == "phonemes" || s == "phoneme" || s == "per") return ErrorUnit::phonemes;
    throw ConfigError("unknown error unit: " + s);
}

std::vector<std::string> tokenize(const std::string& text, ErrorUnit unit) {
    if (unit == ErrorUnit::chars) {
        std::vector<std::string> out;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) out.emplace_back(1, c);
        return out;
    }
    return split_ws(text);  // words and caller-provided phoneme symbols
}

double error_rate(const std::string& ref, const std::string& hyp, ErrorUnit unit) {
    const auto r = tokenize(ref, unit);
    if (r.empty()) throw DataError("error_rate: empty reference");
    return 100.0 * static_cast<double>(edit_distance(r, tokenize(hyp, unit))) / static_cast<double>(r.size());
}

double corpus_error_rate(const std::vector<std::pair<std::string, std::string>>& ref_hyp_pairs,
                         ErrorUnit unit) {
    long dist = 0, len = 0;
    for (const auto& [ref, hyp] : ref_hyp_pairs) {
        const auto r = tokenize(ref, unit);
        if (r.empty()) throw DataError("error_rate: empty reference");
        dist += edit_distance(r, tokenize(hyp, unit));
        len += static_cast<long>(r.size());
    }
    if (len == 0) throw DataError("error_rate: empty corpus");
    return 100.0 * static_cast<double>(dist) / static_cast<double>(len);
}

// ---------------------------------------------------------------- spectrogram quality

namespace {

int aligned_frames(const MelSpectrogram& a, const MelSpectrogram& b) {
    if (a.n_mels != b.n_mels) throw DataError("spectrogram metric: mel dimension mismatch");
    if (std::abs(a.n_frames - b.n_frames) > 1)
        throw DataError("spectrogram metric: frame counts differ by more than one");
    return std::min(a.n_frames, b.n_frames);
}

}  // namespace

double ls_mse(const MelSpectrogram& a, const MelSpectrogram& b) {
    const int frames = aligned_frames(a, b);
    double sum = 0.0;
    for (int m = 0; m < a.n_mels; ++m)
        for (int f = 0; f < frames; ++f) {
            const double d = a.at(m, f) - b.at(m, f);
            sum += d * d;
        }
    return sum / (static_cast<double>(a.n_mels) * frames);
}

double psnr(const MelSpectrogram& a, const MelSpectrogram& b, double peak) {
    const double mse = ls_mse(a, b);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const MelSpectrogram& a, const MelSpectrogram& b) {
    const int frames = aligned_frames(a, b);
    const int rows = a.n_mels;
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;

    const auto local = [&](const std::vector<std::pair<int, int>>& cells,
                           const std::vector<double>& weights) {
        double mu_a = 0.0, mu_b = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            mu_a += weights[i] * a.at(cells[i].first, cells[i].second);
            mu_b += weights[i] * b.at(cells[i].first, cells[i].second);
        }
        double va = 0.0, vb = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double da = a.at(cells[i].first, cells[i].second) - mu_a;
            const double db = b.at(cells[i].first, cells[i].second) - mu_b;
            va += weights[i] * da * da;
            vb += weights[i] * db * db;
            cov += weights[i] * da * db;
        }
        return ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) /
               ((mu_a * mu_a + mu_b * mu_b + C1) * (va + vb + C2));
    };

    if (rows < 7 || frames < 7) {
        // Degenerate sizes: one uniform window over the whole grid.
        std::vector<std::pair<int, int>> cells;
        for (int m = 0; m < rows; ++m)
            for (int f = 0; f < frames; ++f) cells.emplace_back(m, f);
        std::vector<double> weights(cells.size(), 1.0 / static_cast<double>(cells.size()));
        return local(cells, weights);
    }

    // 7x7 Gaussian taps, sigma 1.5, normalized to sum 1.
    double g[7];
    double gsum = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double x = i - 3;
        g[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
        gsum += g[i];
    }
    for (double& v : g) v /= gsum;

    std::vector<std::pair<int, int>> cells(49);
    std::vector<double> weights(49);
    double total = 0.0;
    long count = 0;
    for (int m0 = 0; m0 + 7 <= rows; ++m0)
        for (int f0 = 0; f0 + 7 <= frames; ++f0) {
            int idx = 0;
            for (int i = 0; i < 7; ++i)
                for (int j = 0; j < 7; ++j) {
                    cells[static_cast<std::size_t>(idx)] = {m0 + i, f0 + j};
                    weights[static_cast<std::size_t>(idx)] = g[i] * g[j];
                    ++idx;
                }
            total += local(cells, weights);
            ++count;
        }
    return total / static_cast<double>(count);
}

// ---------------------------------------------------------------- bitrate

double bitrate(const std::vector<UnitSequence>& sequences, double total_duration_s, bool collapse_runs) {
    if (total_duration_s <= 0.0) throw DataError("bitrate: duration must be positive");

    std::map<int, long> counts;
    long n = 0;
    for (const auto& seq : sequences) {
        int prev = -1;
        bool first = true;
        for (int s : seq.indices) {
            if (collapse_runs && !first && s == prev) continue;
            ++counts[s];
            ++n;
            prev = s;
            first = false;
        }
    }
    if (n == 0) throw DataError("bitrate: empty sequences");

    double entropy = 0.0;
    for (const auto& [sym, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(n);
        entropy -= p * std::log2(p);
    }
    return (static_cast<double>(n) / total_duration_s) * entropy;
}

// ---------------------------------------------------------------- dtw

FrameMetric frame_metric_from_string(const std::string& s) {
    if (s == "cosine") return FrameMetric::cosine;
    if (s == "euclidean") return FrameMetric::euclidean;
    if (s == "abs") return FrameMetric::abs;
    throw ConfigError("unknown frame metric: " + s);
}

std::string to_string(FrameMetric m) {
    switch (m) {
        case FrameMetric::cosine: return "cosine";
        case FrameMetric::euclidean: return "euclidean";
        case FrameMetric::abs: return "abs";
    }
    return "?";
}

double frame_distance(const std::vector<double>& u, const std::vector<double>& v, FrameMetric m) {
    if (u.size() != v.size()) throw DataError("frame_distance: dimension mismatch");
    switch (m) {
        case FrameMetric::abs: {
            double s = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) s += std::abs(u[i] - v[i]);
            return s;
        }
        case FrameMetric::euclidean: {
            double s = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
            return std::sqrt(s);
        }
        case FrameMetric::cosine: {
            double dot = 0.0, nu = 0.0, nv = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                dot += u[i] * v[i];
                nu += u[i] * u[i];
                nv += v[i] * v[i];
            }
            if (nu == 0.0 && nv == 0.0) return 0.0;
            if (nu == 0.0 || nv == 0.0) return 1.0;
            return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
        }
    }
    return 0.0;
}

double dtw_distance(const FrameSeq& x, const FrameSeq& y, FrameMetric m) {
    if (x.empty() || y.empty()) throw DataError("dtw: empty sequence");
    const std::size_t n = x.size(), nc = y.size();

    // cost = accumulated distance; len = cells on the optimal path. Ties on
    // cost prefer the shorter path, then diagonal > up > left, so the
    // normalized value is deterministic.
    std::vector<double> cost_prev(nc), cost_cur(nc);
    std::vector<long> len_prev(nc), len_cur(nc);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            const double d = frame_distance(x[i], y[j], m);
            if (i == 0 && j == 0) {
                cost_cur[j] = d;
                len_cur[j] = 1;
                continue;
            }
            double best_cost = std::numeric_limits<double>::infinity();
            long best_len = 0;
            const auto consider = [&](double c, long l) {
                if (c < best_cost || (c == best_cost && l < best_len)) {
                    best_cost = c;
                    best_len = l;
                }
            };
            if (i > 0 && j > 0) consider(cost_prev[j - 1], len_prev[j - 1]);  // diagonal
            if (i > 0) consider(cost_prev[j], len_prev[j]);                   // up
            if (j > 0) consider(cost_cur[j - 1], len_cur[j - 1]);             // left
            cost_cur[j] = best_cost + d;
            len_cur[j] = best_len + 1;
        }
        if (i + 1 < n) {
            std::swap(cost_prev, cost_cur);
            std::swap(len_prev, len_cur);
        }
    }
    return cost_cur[nc - 1] / static_cast<double>(len_cur[nc - 1]);
}

// ---------------------------------------------------------------- abx

AbxMode abx_mode_from_string(const std::string& s) {
    if (s == "within") return AbxMode::within;
    if (s == "across") return AbxMode::across;
    throw ConfigError("unknown abx mode: " + s);
}

namespace {

bool triplet_valid(const std::vector<AbxItem>& items, std::size_t a, std::size_t b, std::size_t x,
                   AbxMode mode) {
    if (a == x || a == b || b == x) return false;
    const AbxItem& A = items[a];
    const AbxItem& B = items[b];
    const AbxItem& X = items[x];
    if (A.category != X.category || B.category == X.category) return false;
    if (mode == AbxMode::within) return A.speaker == B.speaker && B.speaker == X.speaker;
    return A.speaker == B.speaker && X.speaker != A.speaker;
}

}  // namespace

AbxResult abx_error(const std::vector<AbxItem>& items, const AbxOptions& opt) {
    const std::size_t n = items.size();

    std::size_t total = 0;
    for (std::size_t x = 0; x < n && total <= opt.budget; ++x)
        for (std::size_t a = 0; a < n && total <= opt.budget; ++a) {
            if (a == x || items[a].category != items[x].category) continue;
            for (std::size_t b = 0; b < n; ++b) {
                if (triplet_valid(items, a, b, x, opt.mode)) {
                    if (++total > opt.budget) break;
                }
            }
        }
    if (total == 0) throw DataError("abx: no valid triplet for mode");

    // Pairwise DTW distances computed lazily and memoized.
    std::unordered_map<std::size_t, double> cache;
    const auto dist = [&](std::size_t i, std::size_t j) {
        const std::size_t key = i * n + j;
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const double d = dtw_distance(items[i].features, items[j].features, opt.metric);
        cache.emplace(key, d);
        cache.emplace(j * n + i, d);
        return d;
    };

    const auto score = [&](std::size_t a, std::size_t b, std::size_t x) {
        const double da = dist(a, x);
        const double db = dist(b, x);
        if (db < da) return 1.0;  // X judged closer to the wrong category
        if (db == da) return 0.5;
        return 0.0;
    };

    double sum = 0.0;
    std::size_t counted = 0;
    AbxResult r;

    if (total <= opt.budget) {
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    if (triplet_valid(items, a, b, x, opt.mode)) {
                        sum += score(a, b, x);
                        ++counted;
                    }
    } else {
        // Uniform over valid triplets by rejection; seeded and deterministic.
        Rng rng(opt.seed);
        r.subsampled = true;
        std::size_t attempts = 0;
        const std::size_t max_attempts = opt.budget * 1000;
        while (counted < opt.budget && attempts < max_attempts) {
            ++attempts;
            const std::size_t a = rng.below(n);
            const std::size_t b = rng.below(n);
            const std::size_t x = rng.below(n);
            if (!triplet_valid(items, a, b, x, opt.mode)) continue;
            sum += score(a, b, x);
            ++counted;
        }
        if (counted == 0) throw DataError("abx: no valid triplet sampled");
    }

    r.error_percent = 100.0 * sum / static_cast<double>(counted);
    r.triplets = counted;
    return r;
}

}  // namespace metrics
}  // namespace zrlab
