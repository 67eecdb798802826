#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tstar/errors.hpp"

namespace tstar {

using FrameIndex = std::int64_t;

struct VideoSource {
    std::string video_id;
    FrameIndex frame_count = 0; // L
    double fps = 0.0;
    // Directory of per-frame images named by zero-padded index; empty when
    // the run is purely score-driven and no pixels exist.
    std::string frame_store;

    double duration_s() const { return static_cast<double>(frame_count) / fps; }
    double timestamp_of(FrameIndex f) const { return static_cast<double>(f) / fps; }
};

struct WeightedObject {
    std::string label;
    double weight = 1.0; // in (0, 1]
};

struct GroundedQuery {
    std::string question;
    std::vector<WeightedObject> targets; // weight defaults 1.0
    std::vector<WeightedObject> cues;    // weight defaults 0.5

    // 0.0 for labels the query knows nothing about.
    double weight_of(const std::string& label) const;
};

// Throws ConfigError naming the violated constraint.
void validate_query(const GroundedQuery& q);

struct SearchConfig {
    std::int64_t grid_side = 8;      // g; cells per iteration = g^2
    std::int64_t budget = 1024;      // total frames the scorer may examine
    double theta = 0.6;              // verification threshold, in (0, 1)
    std::int64_t k = 8;              // keyframes returned
    std::int64_t window = 75;        // score propagation half-width, >= 0
    double prob_floor = 0.0;         // eps added to every frame on rebuild
    std::int64_t max_iterations = 1; // hard iteration cap
    std::uint64_t seed = 0;
};

// Defaults derived from the video: budget = min(L, 1024),
// window = ceil(2.5s * fps), prob_floor = 0.1/L,
// max_iterations = ceil(4L / g^2).
SearchConfig default_config(const VideoSource& video, std::uint64_t seed = 0);

// Throws ConfigError naming the violated constraint; returns cfg unchanged
// when every invariant holds.
SearchConfig validate_config(const SearchConfig& cfg, const VideoSource& video);

struct ScoreState {
    std::vector<double> scores;        // S, each in [0, 1]
    std::vector<std::uint8_t> visited; // sampling mask: 1 = not yet sampled
    std::vector<double> prob;          // P, sums to 1 while any frame is unvisited

    FrameIndex frame_count() const { return static_cast<FrameIndex>(scores.size()); }
    std::int64_t unvisited_count() const;
};

ScoreState make_score_state(FrameIndex frame_count);

struct Keyframe {
    FrameIndex index = 0;
    double timestamp = 0.0;
    double score = 0.0;
};

// Sorted by score descending, index ascending on ties; indices distinct.
struct KeyframeSet {
    std::vector<Keyframe> entries;
};

struct IterationRecord {
    std::int64_t iteration = 0;                // 1-based
    std::vector<FrameIndex> sampled_indices;   // draw order
    std::vector<double> cell_confidences;      // per filled cell, grid order
    std::vector<std::vector<std::string>> detected_labels_per_cell;
    std::optional<std::vector<double>> prob_snapshot; // post-rebuild; opt-in
    std::vector<std::string> remaining_targets;       // after this iteration
    std::int64_t budget_remaining = 0;
};

struct SearchTrace {
    std::vector<IterationRecord> iterations;
};

struct EfficiencyReport {
    std::int64_t frames_processed = 0; // sampled frames + verify calls
    std::int64_t scorer_calls = 0;     // grid scoring calls (verifies counted separately)
    std::int64_t verify_calls = 0;
    std::int64_t grounding_calls = 0;  // queries come pre-grounded from the dataset
    double cost_units = 0.0;           // scorer-declared per-frame cost * frames_processed
    double wall_time_s = 0.0;
};

enum class TerminalReason {
    all_targets_found,
    all_frames_visited,
    budget_exhausted,
    max_iterations,
};

std::string to_string(TerminalReason r);

} // namespace tstar
