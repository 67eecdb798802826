#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tstar/core.hpp"
#include "tstar/metrics.hpp"
#include "tstar/scoring.hpp"
#include "tstar/search.hpp"

namespace tstar {

// ---------------------------------------------------------------------------
// Dataset records (line-delimited JSON).

struct HaystackInstance {
    std::string instance_id; // synthesized as "<video_id>#<record>" when absent
    VideoSource video;
    GroundedQuery query;
    std::vector<double> keyframe_timestamps_s;
    std::string answer;
    std::string split; // train | test

    std::vector<RefKeyframe> references() const;
    // Reference positions per label the oracle can emit (targets at the
    // keyframes; cues at their planted offsets when present).
    std::map<std::string, std::vector<FrameIndex>> refs_by_label() const;
};

HaystackInstance parse_instance(const std::string& json_line, std::int64_t record_no);
std::string serialize_instance(const HaystackInstance& inst);

// ParseError carries the record number and reason.
std::vector<HaystackInstance> load_dataset(const std::string& path);
void save_dataset(const std::vector<HaystackInstance>& instances, const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic haystacks.

struct SynthParams {
    std::int64_t frame_count = 18000;
    double fps = 30.0;
    std::int64_t keyframes_per_instance = 1;
    std::int64_t targets_per_instance = 1; // labels round-robin over keyframes
    std::int64_t cues_per_instance = 0;    // cue refs planted near keyframes
    double oracle_sigma = 60.0;
    double oracle_noise = 0.0;
    double oracle_accuracy = 1.0;
    std::int64_t frame_image_size = 0; // side of square frames; 0 = no images
    std::string image_dir;             // parent dir for per-video frame stores
};

// Keyframes are pairwise at least 2 * ceil(2.5 * fps) frames apart so their
// score-propagation windows cannot merge. Deterministic in (params, seed).
std::vector<HaystackInstance> synth_haystack(const SynthParams& params,
                                             std::int64_t count, std::uint64_t seed);

// Deterministic per-frame image: noise everywhere, a bright disc on keyframes.
GrayImage synth_frame_image(std::int64_t size, bool is_keyframe, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Baseline strategies.

struct Strategy {
    enum class Kind { uniform, retrieval, tstar };
    Kind kind = Kind::tstar;
    std::int64_t n = 8; // frames kept by uniform / retrieval
    std::string name;   // "uniform8", "retrieval32", "tstar"
};

// Accepts "uniformN", "retrievalN", "tstar".
Strategy parse_strategy(const std::string& text);

// round(i * (L-1) / (n-1)) for n >= 2 (deduplicated, ascending); {0} for n=1.
std::vector<FrameIndex> uniform_indices(FrameIndex frame_count, std::int64_t n);

struct StrategyResult {
    KeyframeSet keyframes;
    EfficiencyReport efficiency;
    std::int64_t iterations = 0; // 0 for non-iterative strategies
    std::optional<TerminalReason> terminal_reason;
};

// scorer may be null for uniform (it examines no frames).
StrategyResult run_strategy(const Strategy& strategy, const HaystackInstance& inst,
                            Scorer* scorer, const SearchConfig& cfg);

// ---------------------------------------------------------------------------
// Benchmark harness.

// Unset fields fall back to default_config(video).
struct ConfigOverrides {
    std::optional<std::int64_t> grid_side, budget, k, window, max_iterations;
    std::optional<double> theta, prob_floor;
};

SearchConfig resolve_config(const VideoSource& video, const ConfigOverrides& overrides,
                            std::uint64_t seed);

struct BenchOptions {
    std::vector<Strategy> strategies;
    ScorerSpec scorer;
    std::vector<SimilaritySpec> metrics;
    std::vector<std::string> metric_names; // parallel to metrics
    ConfigOverrides overrides;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct InstanceResult {
    std::string strategy;
    std::string instance_id;
    bool failed = false;
    std::string error;
    std::map<std::string, MetricReport> metrics; // keyed by metric name
    EfficiencyReport efficiency;
    std::int64_t iterations = 0;
    std::optional<TerminalReason> terminal_reason;
};

struct StrategySummary {
    std::string strategy;
    std::map<std::string, MetricReport> aggregates;
    double mean_iterations = 0.0;
    double mean_frames_processed = 0.0;
    EfficiencyReport totals;
    std::int64_t failures = 0;
};

struct BenchReport {
    std::vector<InstanceResult> results; // strategy-major, dataset order
    std::vector<StrategySummary> summaries;
};

// Every strategy sees the same instances and the same per-instance seeds
// (derive_seed(seed, instance_id)), so comparisons are paired.
BenchReport run_benchmark(const std::vector<HaystackInstance>& instances,
                          const BenchOptions& options);

// ---------------------------------------------------------------------------
// Complexity harness.

struct ComplexityOptions {
    std::vector<std::int64_t> lengths{4096, 65536};
    std::vector<double> accuracies{1.0, 0.5, 0.25};
    std::int64_t trials = 50;
    std::int64_t grid_side = 8;
    double theta = 0.6;
    // Oracle decay scale in frames (~1 s at 30 fps). Fixed across lengths so
    // the detectable neighborhood around the needle stays constant and the
    // iteration/frame growth curves reflect L alone.
    double oracle_sigma = 30.0;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct ComplexityRow {
    std::int64_t frame_count = 0;
    double accuracy = 1.0;
    double mean_iterations = 0.0;
    double sd_iterations = 0.0;
    double mean_frames = 0.0;
};

// Single-needle trials; budget = L so the worst case can degrade to a full
// sweep. Rows ordered by (frame_count, accuracy) as given.
std::vector<ComplexityRow> complexity_experiment(const ComplexityOptions& options);

std::string complexity_to_csv(const std::vector<ComplexityRow>& rows);

} // namespace tstar
