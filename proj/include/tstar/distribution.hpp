#pragma once

#include <utility>
#include <vector>

#include "tstar/core.hpp"

namespace tstar {

// Writes cell confidences into the state and clears the sampling mask for
// those frames. Indices must be in range, distinct, and not yet visited
// (StateError otherwise); confidences are clamped to [0, 1].
void apply_scores(ScoreState& state,
                  const std::vector<std::pair<FrameIndex, double>>& frame_scores);

// Spreads the score at f to neighbours: s[f+d] = max(s[f+d], s[f]/(|d|+1))
// for d in [-window, window], clipped at the sequence ends. Propagation
// reaches visited and unvisited frames alike; only the mask gates sampling.
void propagate_window(ScoreState& state, FrameIndex f, std::int64_t window);

// Rebuilds P: control points are every visited or positive-scored frame plus
// anchors at both ends, interpolated with a shape-preserving cubic (linear
// below 4 points, uniform below 2), clamped at 0, floored at eps, normalized.
// Total mass 0 falls back to uniform while any frame is unvisited and throws
// NumericalError once every frame has been seen.
void rebuild_probability(ScoreState& state, double eps);

} // namespace tstar
