#include "tstar/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "tstar/interp.hpp"

namespace tstar {

void apply_scores(ScoreState& state,
                  const std::vector<std::pair<FrameIndex, double>>& frame_scores) {
    const FrameIndex L = state.frame_count();
    // Validate the whole batch before mutating anything.
    std::vector<FrameIndex> seen;
    seen.reserve(frame_scores.size());
    for (const auto& [f, c] : frame_scores) {
        if (f < 0 || f >= L) throw StateError("frame index out of range");
        if (!state.visited[static_cast<std::size_t>(f)])
            throw StateError("frame already visited: " + std::to_string(f));
        seen.push_back(f);
        (void)c;
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw StateError("duplicate frame index in score batch");

    for (const auto& [f, c] : frame_scores) {
        const auto i = static_cast<std::size_t>(f);
        state.scores[i] = std::clamp(c, 0.0, 1.0);
        state.visited[i] = 0;
    }
}

void propagate_window(ScoreState& state, FrameIndex f, std::int64_t window) {
    const FrameIndex L = state.frame_count();
    if (f < 0 || f >= L) throw StateError("frame index out of range");
    const double s = state.scores[static_cast<std::size_t>(f)];
    if (s <= 0.0 || window <= 0) return;
    const FrameIndex lo = std::max<FrameIndex>(0, f - window);
    const FrameIndex hi = std::min<FrameIndex>(L - 1, f + window);
    for (FrameIndex j = lo; j <= hi; ++j) {
        if (j == f) continue;
        const double spread = s / static_cast<double>(std::llabs(j - f) + 1);
        auto& slot = state.scores[static_cast<std::size_t>(j)];
        slot = std::max(slot, spread);
    }
}

void rebuild_probability(ScoreState& state, double eps) {
    const FrameIndex L = state.frame_count();
    const auto n = static_cast<std::size_t>(L);

    // Control points: everything the search has direct or propagated evidence
    // for, plus anchors at both ends so the curve covers [0, L-1].
    std::vector<double> xs, ys;
    xs.reserve(n);
    ys.reserve(n);
    bool have_first = false, have_last = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (state.visited[i] && !(state.scores[i] > 0.0)) continue;
        xs.push_back(static_cast<double>(i));
        ys.push_back(state.scores[i]);
        if (i == 0) have_first = true;
        if (i == n - 1) have_last = true;
    }
    if (!xs.empty() && !have_first) {
        xs.insert(xs.begin(), 0.0);
        ys.insert(ys.begin(), state.scores[0]);
    }
    if (!xs.empty() && !have_last && xs.back() < static_cast<double>(L - 1)) {
        xs.push_back(static_cast<double>(L - 1));
        ys.push_back(state.scores[n - 1]);
    }

    std::vector<double> curve;
    if (xs.empty()) {
        curve.assign(n, 1.0 / static_cast<double>(L));
    } else {
        curve = MonotoneCubic(std::move(xs), std::move(ys)).sample_integers(L);
    }

    double total = 0.0;
    for (auto& v : curve) {
        v = std::max(std::max(v, 0.0), eps);
        total += v;
    }
    if (!(total > 0.0)) {
        if (state.unvisited_count() == 0)
            throw NumericalError("probability mass vanished with all frames visited");
        curve.assign(n, 1.0 / static_cast<double>(L));
        total = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) state.prob[i] = curve[i] / total;
}

} // namespace tstar
