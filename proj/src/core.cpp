#include "tstar/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace tstar {

double GroundedQuery::weight_of(const std::string& label) const {
    for (const auto& t : targets)
        if (t.label == label) return t.weight;
    for (const auto& c : cues)
        if (c.label == label) return c.weight;
    return 0.0;
}

void validate_query(const GroundedQuery& q) {
    if (q.targets.empty()) throw ConfigError("query has no targets");
    std::set<std::string> target_labels;
    for (const auto& t : q.targets) {
        if (t.label.empty()) throw ConfigError("target label is empty");
        if (!(t.weight > 0.0 && t.weight <= 1.0))
            throw ConfigError("target weight outside (0, 1]: " + t.label);
        if (!target_labels.insert(t.label).second)
            throw ConfigError("duplicate target label: " + t.label);
    }
    std::set<std::string> cue_labels;
    for (const auto& c : q.cues) {
        if (c.label.empty()) throw ConfigError("cue label is empty");
        if (!(c.weight > 0.0 && c.weight <= 1.0))
            throw ConfigError("cue weight outside (0, 1]: " + c.label);
        if (!cue_labels.insert(c.label).second)
            throw ConfigError("duplicate cue label: " + c.label);
        if (target_labels.count(c.label))
            throw ConfigError("label is both target and cue: " + c.label);
    }
}

SearchConfig default_config(const VideoSource& video, std::uint64_t seed) {
    SearchConfig cfg;
    cfg.grid_side = 8;
    cfg.budget = std::min<std::int64_t>(video.frame_count, 1024);
    cfg.theta = 0.6;
    cfg.k = 8;
    cfg.window = static_cast<std::int64_t>(std::ceil(2.5 * video.fps));
    cfg.prob_floor = 0.1 / static_cast<double>(video.frame_count);
    cfg.max_iterations = (4 * video.frame_count + cfg.grid_side * cfg.grid_side - 1) /
                         (cfg.grid_side * cfg.grid_side);
    cfg.seed = seed;
    return cfg;
}

SearchConfig validate_config(const SearchConfig& cfg, const VideoSource& video) {
    if (video.frame_count < 1) throw ConfigError("frame_count < 1");
    if (!(video.fps > 0.0)) throw ConfigError("fps <= 0");
    if (cfg.grid_side < 1) throw ConfigError("grid_side < 1");
    if (cfg.budget < 1) throw ConfigError("budget < 1");
    if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) throw ConfigError("theta outside (0, 1)");
    if (cfg.k < 1) throw ConfigError("k < 1");
    if (cfg.window < 0) throw ConfigError("window < 0");
    if (cfg.prob_floor < 0.0) throw ConfigError("prob_floor < 0");
    if (cfg.max_iterations < 1) throw ConfigError("max_iterations < 1");
    if (cfg.grid_side * cfg.grid_side > cfg.budget) throw ConfigError("g^2 exceeds budget");
    if (cfg.grid_side * cfg.grid_side > video.frame_count)
        throw ConfigError("g^2 exceeds frame_count");
    if (cfg.k > cfg.budget) throw ConfigError("k exceeds budget");
    return cfg;
}

std::int64_t ScoreState::unvisited_count() const {
    return std::count(visited.begin(), visited.end(), std::uint8_t{1});
}

ScoreState make_score_state(FrameIndex frame_count) {
    ScoreState st;
    const auto n = static_cast<std::size_t>(frame_count);
    st.scores.assign(n, 0.0);
    st.visited.assign(n, 1);
    st.prob.assign(n, 1.0 / static_cast<double>(frame_count));
    return st;
}

std::string to_string(TerminalReason r) {
    switch (r) {
        case TerminalReason::all_targets_found: return "all_targets_found";
        case TerminalReason::all_frames_visited: return "all_frames_visited";
        case TerminalReason::budget_exhausted: return "budget_exhausted";
        case TerminalReason::max_iterations: return "max_iterations";
    }
    return "unknown";
}

} // namespace tstar
