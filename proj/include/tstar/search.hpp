#pragma once

#include <string>
#include <vector>

#include "tstar/core.hpp"
#include "tstar/scoring.hpp"

namespace tstar {

struct SearchOutcome {
    KeyframeSet keyframes;
    ScoreState state;
    SearchTrace trace;
    EfficiencyReport efficiency;
    TerminalReason terminal_reason = TerminalReason::max_iterations;
    std::int64_t iterations = 0;
};

struct TraceOptions {
    // Per-iteration probability snapshots cost O(iterations * L) memory,
    // so they are opt-in.
    bool prob_snapshots = false;
};

// Iterative sample / score / reweight loop over the frame index space.
// Deterministic for a fixed (config, scorer, video) triple.
SearchOutcome run_search(const VideoSource& video, const GroundedQuery& query,
                         Scorer& scorer, const SearchConfig& cfg,
                         const TraceOptions& trace_opts = {});

// Up to k frames ranked by score (descending, index ascending on ties).
// When fewer than k frames carry positive scores the set is padded with the
// uniformly spaced unvisited indices floor(i*L/k), then by ascending scan.
KeyframeSet select_topk(const ScoreState& state, std::int64_t k, double fps);

// One row per (iteration, frame) pair: instance_id,iteration,frame_index,prob.
// Requires snapshots; rows for iterations without one are skipped.
std::string trace_to_csv(const SearchTrace& trace, const std::string& instance_id);

} // namespace tstar
