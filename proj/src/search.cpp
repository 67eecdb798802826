#include "tstar/search.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

#include "tstar/distribution.hpp"
#include "tstar/sampling.hpp"

namespace tstar {

namespace {

std::vector<double> masked_weights(const ScoreState& state) {
    std::vector<double> w(state.prob.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = state.visited[i] ? state.prob[i] : 0.0;
    return w;
}

} // namespace

SearchOutcome run_search(const VideoSource& video, const GroundedQuery& query,
                         Scorer& scorer, const SearchConfig& cfg,
                         const TraceOptions& trace_opts) {
    validate_config(cfg, video);
    validate_query(query);

    const auto t0 = std::chrono::steady_clock::now();
    const FrameIndex L = video.frame_count;
    const std::int64_t cells = cfg.grid_side * cfg.grid_side;

    SearchOutcome out;
    out.state = make_score_state(L);
    ScoreState& state = out.state;

    std::set<std::string> remaining;
    for (const auto& t : query.targets) remaining.insert(t.label);

    // Verified finds, in discovery order: frame and its verify confidence.
    std::vector<std::pair<FrameIndex, double>> found;

    Rng rng(cfg.seed);
    std::int64_t budget = cfg.budget;
    std::int64_t unvisited = L;
    std::int64_t iteration = 0;
    const double cost = scorer.cost_units_per_frame();

    while (!remaining.empty() && budget > 0 && unvisited > 0 &&
           iteration < cfg.max_iterations) {
        const std::int64_t want = std::min({cells, budget, unvisited});

        std::vector<double> weights = masked_weights(state);
        std::vector<FrameIndex> sampled =
            weighted_sample_without_replacement(weights, want, rng);
        if (sampled.empty()) {
            // Possible only with prob_floor = 0: the curve left every
            // unvisited frame at zero mass. Explore uniformly instead.
            std::fill(weights.begin(), weights.end(), 0.0);
            for (std::size_t i = 0; i < weights.size(); ++i)
                if (state.visited[i]) weights[i] = 1.0;
            sampled = weighted_sample_without_replacement(weights, want, rng);
        }

        const GridLayout grid = build_grid(sampled, cfg.grid_side);
        budget -= static_cast<std::int64_t>(sampled.size());
        unvisited -= static_cast<std::int64_t>(sampled.size());

        const CellDetections detections = scorer.score_grid(grid, query);
        out.efficiency.scorer_calls += 1;
        out.efficiency.frames_processed += static_cast<std::int64_t>(sampled.size());
        out.efficiency.cost_units += cost * static_cast<double>(sampled.size());

        IterationRecord rec;
        rec.iteration = ++iteration;
        rec.sampled_indices = sampled;

        // Grid confidences + detected labels, filled-cell order.
        struct Candidate {
            FrameIndex frame;
            double confidence;
            std::vector<std::string> hits; // remaining targets cleared by theta
        };
        std::vector<Candidate> candidates;
        std::vector<std::pair<FrameIndex, double>> batch;
        for (std::size_t i = 0; i < grid.cells.size(); ++i) {
            if (!grid.cells[i]) continue;
            const DetectionList& dets = detections.per_cell[i];
            const double conf = cell_confidence(dets, query);
            rec.cell_confidences.push_back(conf);
            std::vector<std::string> labels;
            std::vector<std::string> hits;
            for (const auto& d : dets) {
                labels.push_back(d.label);
                if (remaining.count(d.label) &&
                    d.confidence * query.weight_of(d.label) > cfg.theta)
                    hits.push_back(d.label);
            }
            rec.detected_labels_per_cell.push_back(std::move(labels));
            batch.emplace_back(*grid.cells[i], conf);
            if (!hits.empty())
                candidates.push_back({*grid.cells[i], conf, std::move(hits)});
        }
        apply_scores(state, batch);

        // Verify the most confident candidates first; a target removed by an
        // earlier verify silences later candidates for the same label.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) {
                             if (a.confidence != b.confidence)
                                 return a.confidence > b.confidence;
                             return a.frame < b.frame;
                         });
        for (const auto& cand : candidates) {
            bool relevant = false;
            for (const auto& label : cand.hits)
                if (remaining.count(label)) { relevant = true; break; }
            if (!relevant) continue;
            if (budget <= 0) break; // verification examines a frame too
            budget -= 1;
            const double v = scorer.verify(cand.frame, query);
            out.efficiency.verify_calls += 1;
            out.efficiency.frames_processed += 1;
            out.efficiency.cost_units += cost;
            if (v > cfg.theta) {
                found.emplace_back(cand.frame, v);
                for (const auto& label : cand.hits) remaining.erase(label);
            }
        }

        for (FrameIndex f : grid.filled_frames())
            propagate_window(state, f, cfg.window);
        // With no frames left to sample the distribution is moot; rebuilding
        // could even fail (zero scores, zero floor), so keep the last one.
        if (unvisited > 0) rebuild_probability(state, cfg.prob_floor);

        if (trace_opts.prob_snapshots) rec.prob_snapshot = state.prob;
        rec.remaining_targets.assign(remaining.begin(), remaining.end());
        rec.budget_remaining = budget;
        out.trace.iterations.push_back(std::move(rec));
    }

    out.iterations = iteration;
    if (remaining.empty())
        out.terminal_reason = TerminalReason::all_targets_found;
    else if (unvisited == 0)
        out.terminal_reason = TerminalReason::all_frames_visited;
    else if (budget <= 0)
        out.terminal_reason = TerminalReason::budget_exhausted;
    else
        out.terminal_reason = TerminalReason::max_iterations;

    // Verified frames are committed results; TopK fills the rest of k.
    KeyframeSet keys;
    std::set<FrameIndex> taken;
    for (const auto& [frame, conf] : found) {
        if (static_cast<std::int64_t>(keys.entries.size()) >= cfg.k) break;
        if (!taken.insert(frame).second) continue;
        keys.entries.push_back({frame, video.timestamp_of(frame),
                                state.scores[static_cast<std::size_t>(frame)]});
    }
    const KeyframeSet ranked = select_topk(state, cfg.k, video.fps);
    for (const auto& kf : ranked.entries) {
        if (static_cast<std::int64_t>(keys.entries.size()) >= cfg.k) break;
        if (taken.insert(kf.index).second) keys.entries.push_back(kf);
    }
    std::stable_sort(keys.entries.begin(), keys.entries.end(),
                     [](const Keyframe& a, const Keyframe& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.index < b.index;
                     });
    out.keyframes = std::move(keys);

    out.efficiency.grounding_calls = 1; // the query was grounded once, upstream
    out.efficiency.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

KeyframeSet select_topk(const ScoreState& state, std::int64_t k, double fps) {
    const FrameIndex L = state.frame_count();
    std::vector<FrameIndex> order;
    order.reserve(static_cast<std::size_t>(L));
    for (FrameIndex i = 0; i < L; ++i)
        if (state.scores[static_cast<std::size_t>(i)] > 0.0) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](FrameIndex a, FrameIndex b) {
        const double sa = state.scores[static_cast<std::size_t>(a)];
        const double sb = state.scores[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    if (static_cast<std::int64_t>(order.size()) > k) order.resize(static_cast<std::size_t>(k));

    std::set<FrameIndex> taken(order.begin(), order.end());
    // Pad with uniformly spaced unvisited probes, then by ascending scan.
    for (std::int64_t i = 0; i < k && static_cast<std::int64_t>(order.size()) < k; ++i) {
        const FrameIndex cand = (i * L) / k;
        if (state.visited[static_cast<std::size_t>(cand)] && taken.insert(cand).second)
            order.push_back(cand);
    }
    for (FrameIndex i = 0; i < L && static_cast<std::int64_t>(order.size()) < k; ++i)
        if (state.visited[static_cast<std::size_t>(i)] && taken.insert(i).second)
            order.push_back(i);

    KeyframeSet out;
    for (FrameIndex f : order)
        out.entries.push_back({f, static_cast<double>(f) / fps,
                               state.scores[static_cast<std::size_t>(f)]});
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const Keyframe& a, const Keyframe& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.index < b.index;
                     });
    return out;
}

std::string trace_to_csv(const SearchTrace& trace, const std::string& instance_id) {
    std::ostringstream out;
    out << "instance_id,iteration,frame_index,prob\n";
    for (const auto& rec : trace.iterations) {
        if (!rec.prob_snapshot) continue;
        const auto& prob = *rec.prob_snapshot;
        for (std::size_t i = 0; i < prob.size(); ++i) {
            out << instance_id << ',' << rec.iteration << ',' << i << ','
                << prob[i] << '\n';
        }
    }
    return out.str();
}

} // namespace tstar
