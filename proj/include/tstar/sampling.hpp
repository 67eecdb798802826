#pragma once

#include <optional>
#include <vector>

#include "tstar/core.hpp"
#include "tstar/rng.hpp"

namespace tstar {

// g x g arrangement of sampled frames, row-major, ascending by frame index.
// Trailing cells are empty when fewer than g^2 frames were sampled.
struct GridLayout {
    std::int64_t side = 0;
    std::vector<std::optional<FrameIndex>> cells; // size side*side

    std::int64_t filled_count() const;
    // Frame indices of filled cells in cell order (ascending by construction).
    std::vector<FrameIndex> filled_frames() const;
};

// Draws up to n distinct indices with sequential draw-then-renormalize
// semantics: pick index i with probability w_i / sum(w), zero w_i, repeat.
// Stops early when the positive support is exhausted, so the result can be
// shorter than n. Zero-weight indices are never returned.
//
// Implemented with a Fenwick tree (one uniform deviate per draw, O(log n)
// descent), which realizes the same distribution as the naive scan.
std::vector<FrameIndex> weighted_sample_without_replacement(
    const std::vector<double>& weights, std::int64_t n, Rng& rng);

// Sorts the sampled indices ascending and fills a g x g grid row-major.
// Throws GridError on side < 1, duplicates, or more than side^2 indices.
GridLayout build_grid(std::vector<FrameIndex> sampled, std::int64_t side);

} // namespace tstar
