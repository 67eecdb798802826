#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tstar/core.hpp"
#include "tstar/image.hpp"

namespace tstar {

// ---------------------------------------------------------------------------
// Pairwise similarities.

// 1.0 when |t_pred - t_ref| <= threshold seconds, else 0.0.
double temporal_sim(double t_pred_s, double t_ref_s, double threshold_s);

struct SsimParams {
    std::int64_t window = 11;    // Gaussian window side
    double gaussian_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

// Mean structural similarity over all fully interior (valid-mode) windows,
// Gaussian-weighted moments. Result in [-1, 1]; DimensionError when shapes
// differ or the image is smaller than the window.
double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params = {});

// Cosine similarity. DimensionError on mismatch or empty; ZeroVectorError on
// zero-norm input.
double embedding_sim(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Set metrics.

struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t predicted_count = 0;
    std::int64_t reference_count = 0;
};

using SimFn = std::function<double(std::size_t pred_idx, std::size_t ref_idx)>;

// precision = mean over predictions of (max similarity against the reference
// set); recall = the transpose; f1 = harmonic mean. Per-pair similarity is
// clamped below at 0 so both stay in [0, 1]. EmptySetError on empty sets.
MetricReport set_metric(std::size_t predicted_count, std::size_t reference_count,
                        const SimFn& sim);

double f1_score(double precision, double recall);

// Column means of per-instance reports (macro aggregation). The aggregate f1
// is the mean of per-instance f1 values, not the harmonic mean of the
// aggregated columns.
MetricReport aggregate(const std::vector<MetricReport>& reports);

// ---------------------------------------------------------------------------
// Instance evaluation.

struct RefKeyframe {
    double timestamp = 0.0;
    FrameIndex index = 0;
};

struct SimilaritySpec {
    enum class Kind { temporal, visual, embedding };
    Kind kind = Kind::temporal;
    double temporal_threshold_s = 5.0;
    SsimParams ssim_params;
    // embedding kind: rows indexed by frame.
    const std::vector<std::vector<double>>* embeddings = nullptr;
};

SimilaritySpec::Kind parse_metric_kind(const std::string& name);

// visual kind loads frame images from video.frame_store.
MetricReport evaluate_instance(const KeyframeSet& predicted,
                               const std::vector<RefKeyframe>& references,
                               const SimilaritySpec& spec, const VideoSource& video);

// Text embedding table: header "rows dims", then one whitespace-separated row
// per line. Row r holds the embedding of frame r.
std::vector<std::vector<double>> load_embeddings(const std::string& path);
void save_embeddings(const std::vector<std::vector<double>>& rows, const std::string& path);

// Percentage with one decimal, Table-style presentation ("66.7").
std::string format_pct(double fraction);

} // namespace tstar
