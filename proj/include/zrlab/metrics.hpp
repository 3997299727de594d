#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zrlab/features.hpp"
#include "zrlab/units.hpp"

namespace zrlab {
namespace metrics {

// One row of the CSV the eval-* commands emit.
struct MetricReport {
    std::string name;
    double value = 0.0;
    std::string units;
    long n_items = 0;
    std::string config;  // free-form snapshot: window sizes, distance kind, ...
};

// ---------------------------------------------------------------- text

// Levenshtein distance with unit insert/delete/substitute costs.
long edit_distance(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
long edit_distance(const std::string& ref, const std::string& hyp);  // per character

enum class ErrorUnit { chars, words, phonemes };
ErrorUnit error_unit_from_string(const std::string& s);

// chars: whitespace stripped, one token per character; words/phonemes:
// whitespace split.
std::vector<std::string> tokenize(const std::string& text, ErrorUnit unit);

// 100 * edit_distance / len(ref). Throws DataError on an empty reference.
double error_rate(const std::string& ref, const std::string& hyp, ErrorUnit unit);

// Corpus-pooled: 100 * sum(distances) / sum(ref lengths).
double corpus_error_rate(const std::vector<std::pair<std::string, std::string>>& ref_hyp_pairs,
                         ErrorUnit unit);

// ---------------------------------------------------------------- spectrogram quality

// All three trim to the shorter frame count and throw DataError when the
// difference exceeds one frame. Inputs are expected min-max normalized
// (dynamic range 1).
double ls_mse(const MelSpectrogram& a, const MelSpectrogram& b);
// +infinity sentinel when MSE is 0.
double psnr(const MelSpectrogram& a, const MelSpectrogram& b, double peak = 1.0);
// Mean local SSIM, 7x7 Gaussian window sigma 1.5, C1=(0.01)^2, C2=(0.03)^2,
// L=1; one uniform global window when either dimension is below 7.
double ssim(const MelSpectrogram& a, const MelSpectrogram& b);

// ---------------------------------------------------------------- bitrate

// B = (N/D) * H with H the empirical symbol entropy in bits; collapse_runs
// merges consecutive repeats within each sequence before counting.
double bitrate(const std::vector<UnitSequence>& sequences, double total_duration_s,
               bool collapse_runs = false);

// ---------------------------------------------------------------- dtw / abx

using FrameSeq = std::vector<std::vector<double>>;

enum class FrameMetric { cosine, euclidean, abs };
FrameMetric frame_metric_from_string(const std::string& s);
std::string to_string(FrameMetric m);

double frame_distance(const std::vector<double>& u, const std::vector<double>& v, FrameMetric m);

// Steps {(1,0),(0,1),(1,1)}, accumulated frame distance divided by the
// optimal path length.
double dtw_distance(const FrameSeq& x, const FrameSeq& y, FrameMetric m);

struct AbxItem {
    FrameSeq features;
    std::string category;
    std::string speaker;
};

enum class AbxMode { within, across };
AbxMode abx_mode_from_string(const std::string& s);

struct AbxOptions {
    AbxMode mode = AbxMode::within;
    FrameMetric metric = FrameMetric::cosine;
    std::size_t budget = 20000;  // exhaustive below, seeded subsample above
    std::uint64_t seed = 0;
};

struct AbxResult {
    double error_percent = 0.0;
    std::size_t triplets = 0;
    bool subsampled = false;
};

// Triplet (A, B, X): A shares X's category, B differs; within-mode all three
// share a speaker, across-mode X's speaker differs from A and B's shared one.
// A triplet scores 1 when d(B,X) < d(A,X) (an error), 0.5 on a tie.
AbxResult abx_error(const std::vector<AbxItem>& items, const AbxOptions& opt);

}  // namespace metrics
}  // namespace zrlab
