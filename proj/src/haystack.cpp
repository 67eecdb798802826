#include "tstar/haystack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace tstar {

using nlohmann::json;

// --------------------------------------------------------------------------

std::vector<RefKeyframe> HaystackInstance::references() const {
    std::vector<RefKeyframe> refs;
    refs.reserve(keyframe_timestamps_s.size());
    for (double t : keyframe_timestamps_s) {
        auto idx = static_cast<FrameIndex>(std::llround(t * video.fps));
        idx = std::clamp<FrameIndex>(idx, 0, video.frame_count - 1);
        refs.push_back({t, idx});
    }
    return refs;
}

std::map<std::string, std::vector<FrameIndex>> HaystackInstance::refs_by_label() const {
    std::map<std::string, std::vector<FrameIndex>> refs;
    const auto kf = references();
    if (kf.empty()) return refs;
    // Round-robin when there are several targets, otherwise every keyframe
    // shows every target.
    const std::size_t t = query.targets.size();
    if (t >= 2 && kf.size() >= t) {
        for (std::size_t i = 0; i < kf.size(); ++i)
            refs[query.targets[i % t].label].push_back(kf[i].index);
    } else {
        for (const auto& target : query.targets)
            for (const auto& r : kf) refs[target.label].push_back(r.index);
    }
    // Cues sit ahead of the keyframes they foreshadow.
    const auto w = static_cast<FrameIndex>(std::ceil(2.5 * video.fps));
    for (std::size_t c = 0; c < query.cues.size(); ++c) {
        const auto& r = kf[c % kf.size()];
        const FrameIndex pos = std::clamp<FrameIndex>(
            r.index - 2 * w * static_cast<FrameIndex>(c / kf.size() + 1), 0,
            video.frame_count - 1);
        refs[query.cues[c].label].push_back(pos);
    }
    return refs;
}

namespace {

[[noreturn]] void record_error(std::int64_t record_no, const std::string& why) {
    throw ParseError("record " + std::to_string(record_no) + ": " + why);
}

std::vector<WeightedObject> parse_objects(const json& arr, double default_weight,
                                          std::int64_t record_no) {
    std::vector<WeightedObject> out;
    for (const auto& o : arr) {
        WeightedObject obj;
        obj.label = o.at("label").get<std::string>();
        obj.weight = o.contains("weight") ? o.at("weight").get<double>() : default_weight;
        if (!(obj.weight > 0.0 && obj.weight <= 1.0))
            record_error(record_no, "weight outside (0, 1] for label " + obj.label);
        out.push_back(std::move(obj));
    }
    return out;
}

} // namespace

HaystackInstance parse_instance(const std::string& json_line, std::int64_t record_no) {
    json rec;
    try {
        rec = json::parse(json_line);
    } catch (const json::exception& e) {
        record_error(record_no, std::string("invalid JSON: ") + e.what());
    }

    HaystackInstance inst;
    try {
        inst.video.video_id = rec.at("video_id").get<std::string>();
        inst.video.frame_count = rec.at("frame_count").get<FrameIndex>();
        inst.video.fps = rec.at("fps").get<double>();
        if (rec.contains("frame_store"))
            inst.video.frame_store = rec.at("frame_store").get<std::string>();
        inst.query.question = rec.at("question").get<std::string>();
        inst.query.targets = parse_objects(rec.at("targets"), 1.0, record_no);
        if (rec.contains("cues"))
            inst.query.cues = parse_objects(rec.at("cues"), 0.5, record_no);
        inst.keyframe_timestamps_s =
            rec.at("keyframe_timestamps_s").get<std::vector<double>>();
        inst.answer = rec.at("answer").get<std::string>();
        inst.split = rec.at("split").get<std::string>();
        inst.instance_id = rec.contains("instance_id")
                               ? rec.at("instance_id").get<std::string>()
                               : inst.video.video_id + "#" + std::to_string(record_no);
    } catch (const ParseError&) {
        throw;
    } catch (const json::exception& e) {
        record_error(record_no, std::string("schema violation: ") + e.what());
    }

    if (inst.video.frame_count < 1) record_error(record_no, "frame_count < 1");
    if (!(inst.video.fps > 0.0)) record_error(record_no, "fps <= 0");
    if (inst.split != "train" && inst.split != "test")
        record_error(record_no, "split must be train or test");
    if (inst.keyframe_timestamps_s.empty())
        record_error(record_no, "no keyframe timestamps");
    const double duration = inst.video.duration_s();
    for (double t : inst.keyframe_timestamps_s)
        if (t < 0.0 || t > duration)
            record_error(record_no, "keyframe timestamp outside video: " + std::to_string(t));
    try {
        validate_query(inst.query);
    } catch (const ConfigError& e) {
        record_error(record_no, e.what());
    }
    return inst;
}

std::string serialize_instance(const HaystackInstance& inst) {
    json targets = json::array();
    for (const auto& t : inst.query.targets)
        targets.push_back({{"label", t.label}, {"weight", t.weight}});
    json cues = json::array();
    for (const auto& c : inst.query.cues)
        cues.push_back({{"label", c.label}, {"weight", c.weight}});
    json rec{{"instance_id", inst.instance_id},
             {"video_id", inst.video.video_id},
             {"frame_count", inst.video.frame_count},
             {"fps", inst.video.fps},
             {"question", inst.query.question},
             {"targets", std::move(targets)},
             {"cues", std::move(cues)},
             {"keyframe_timestamps_s", inst.keyframe_timestamps_s},
             {"answer", inst.answer},
             {"split", inst.split}};
    if (!inst.video.frame_store.empty()) rec["frame_store"] = inst.video.frame_store;
    return rec.dump();
}

std::vector<HaystackInstance> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset: " + path);
    std::vector<HaystackInstance> out;
    std::string line;
    std::int64_t record_no = 0;
    while (std::getline(in, line)) {
        ++record_no;
        if (line.empty()) continue;
        // Generated datasets open with a reproducibility header record.
        if (line.find("\"type\"") != std::string::npos) {
            try {
                const json probe = json::parse(line);
                if (probe.is_object() && probe.contains("type")) continue;
            } catch (const json::exception&) {
                // fall through; parse_instance reports the record number
            }
        }
        out.push_back(parse_instance(line, record_no));
    }
    return out;
}

void save_dataset(const std::vector<HaystackInstance>& instances, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write dataset: " + path);
    for (const auto& inst : instances) out << serialize_instance(inst) << '\n';
}

// --------------------------------------------------------------------------

GrayImage synth_frame_image(std::int64_t size, bool is_keyframe, std::uint64_t seed) {
    GrayImage img;
    img.width = size;
    img.height = size;
    img.pixels.resize(static_cast<std::size_t>(size * size));
    Rng rng(seed);
    for (auto& px : img.pixels)
        px = static_cast<std::uint8_t>(rng.next_below(256));
    if (is_keyframe) {
        const double c = static_cast<double>(size - 1) / 2.0;
        const double radius = static_cast<double>(size) / 4.0;
        for (std::int64_t y = 0; y < size; ++y)
            for (std::int64_t x = 0; x < size; ++x) {
                const double dy = static_cast<double>(y) - c;
                const double dx = static_cast<double>(x) - c;
                if (dy * dy + dx * dx <= radius * radius)
                    img.pixels[static_cast<std::size_t>(y * size + x)] = 255;
            }
    }
    return img;
}

std::vector<HaystackInstance> synth_haystack(const SynthParams& params,
                                             std::int64_t count, std::uint64_t seed) {
    if (params.frame_count < 1) throw ConfigError("frame_count < 1");
    if (!(params.fps > 0.0)) throw ConfigError("fps <= 0");
    if (params.keyframes_per_instance < 1) throw ConfigError("keyframes_per_instance < 1");
    if (params.keyframes_per_instance > params.frame_count)
        throw ConfigError("keyframes_per_instance exceeds frame_count");
    if (params.targets_per_instance < 1) throw ConfigError("targets_per_instance < 1");

    const auto w = static_cast<FrameIndex>(std::ceil(2.5 * params.fps));
    const FrameIndex min_gap = 2 * w;
    if ((params.keyframes_per_instance - 1) * min_gap >= params.frame_count)
        throw ConfigError("frame_count too small for spaced keyframes");

    std::vector<HaystackInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    Rng rng(seed);

    for (std::int64_t i = 0; i < count; ++i) {
        HaystackInstance inst;
        {
            std::ostringstream id;
            id << "synth-";
            std::string digits = std::to_string(i);
            if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
            id << digits;
            inst.video.video_id = id.str();
        }
        inst.instance_id = inst.video.video_id;
        inst.video.frame_count = params.frame_count;
        inst.video.fps = params.fps;

        // Rejection-sample keyframe positions with the minimum gap.
        std::vector<FrameIndex> positions;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            positions.clear();
            for (std::int64_t k = 0; k < params.keyframes_per_instance; ++k)
                positions.push_back(static_cast<FrameIndex>(
                    rng.next_below(static_cast<std::uint64_t>(params.frame_count))));
            std::sort(positions.begin(), positions.end());
            bool ok = true;
            for (std::size_t k = 1; k < positions.size(); ++k)
                if (positions[k] - positions[k - 1] < min_gap) { ok = false; break; }
            if (ok) break;
            positions.clear();
        }
        if (positions.empty())
            throw ConfigError("could not place spaced keyframes");

        for (FrameIndex p : positions)
            inst.keyframe_timestamps_s.push_back(static_cast<double>(p) / params.fps);

        for (std::int64_t t = 0; t < params.targets_per_instance; ++t) {
            std::ostringstream label;
            label << "object-" << t;
            inst.query.targets.push_back({label.str(), 1.0});
        }
        for (std::int64_t c = 0; c < params.cues_per_instance; ++c) {
            std::ostringstream label;
            label << "cue-" << c;
            inst.query.cues.push_back({label.str(), 0.5});
        }
        inst.query.question = "Where does " + inst.query.targets[0].label + " appear?";
        inst.answer = "frame " + std::to_string(positions[0]);
        inst.split = "test";

        if (params.frame_image_size > 0 && !params.image_dir.empty()) {
            const std::string store = params.image_dir + "/" + inst.video.video_id;
            std::filesystem::create_directories(store);
            std::vector<bool> is_key(static_cast<std::size_t>(params.frame_count), false);
            for (FrameIndex p : positions) is_key[static_cast<std::size_t>(p)] = true;
            for (FrameIndex f = 0; f < params.frame_count; ++f) {
                const auto frame_seed =
                    derive_seed(seed, inst.video.video_id + "/" + std::to_string(f));
                write_pgm(synth_frame_image(params.frame_image_size,
                                            is_key[static_cast<std::size_t>(f)], frame_seed),
                          frame_image_path(store, f));
            }
            inst.video.frame_store = store;
        }
        out.push_back(std::move(inst));
    }
    return out;
}

// --------------------------------------------------------------------------

Strategy parse_strategy(const std::string& text) {
    Strategy s;
    s.name = text;
    auto parse_n = [&](std::size_t prefix_len, const char* what) {
        const std::string num = text.substr(prefix_len);
        try {
            std::size_t pos = 0;
            s.n = std::stoll(num, &pos);
            if (pos != num.size() || s.n < 1) throw std::invalid_argument("n");
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + " needs a positive count: " + text);
        }
    };
    if (text == "tstar") {
        s.kind = Strategy::Kind::tstar;
    } else if (text.rfind("uniform", 0) == 0) {
        s.kind = Strategy::Kind::uniform;
        parse_n(7, "uniform");
    } else if (text.rfind("retrieval", 0) == 0) {
        s.kind = Strategy::Kind::retrieval;
        parse_n(9, "retrieval");
    } else {
        throw ConfigError("unknown strategy: " + text);
    }
    return s;
}

std::vector<FrameIndex> uniform_indices(FrameIndex frame_count, std::int64_t n) {
    std::vector<FrameIndex> out;
    if (frame_count < 1 || n < 1) return out;
    if (n == 1) return {0};
    for (std::int64_t i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) *
                           static_cast<double>(frame_count - 1) /
                           static_cast<double>(n - 1);
        const auto idx = static_cast<FrameIndex>(std::llround(pos));
        if (out.empty() || out.back() != idx) out.push_back(idx);
    }
    return out;
}

StrategyResult run_strategy(const Strategy& strategy, const HaystackInstance& inst,
                            Scorer* scorer, const SearchConfig& cfg) {
    StrategyResult res;
    switch (strategy.kind) {
        case Strategy::Kind::uniform: {
            for (FrameIndex f : uniform_indices(inst.video.frame_count, strategy.n))
                res.keyframes.entries.push_back({f, inst.video.timestamp_of(f), 0.0});
            // Examines nothing: indices come from arithmetic alone.
            return res;
        }
        case Strategy::Kind::retrieval: {
            if (scorer == nullptr) throw ConfigError("retrieval strategy needs a scorer");
            std::vector<Keyframe> all;
            all.reserve(static_cast<std::size_t>(inst.video.frame_count));
            for (FrameIndex f = 0; f < inst.video.frame_count; ++f) {
                const GridLayout grid = build_grid({f}, 1);
                const CellDetections dets = scorer->score_grid(grid, inst.query);
                const double conf = cell_confidence(dets.per_cell.at(0), inst.query);
                all.push_back({f, inst.video.timestamp_of(f), conf});
            }
            res.efficiency.frames_processed = inst.video.frame_count;
            res.efficiency.scorer_calls = inst.video.frame_count;
            res.efficiency.grounding_calls = 1;
            res.efficiency.cost_units = scorer->cost_units_per_frame() *
                                        static_cast<double>(inst.video.frame_count);
            std::stable_sort(all.begin(), all.end(), [](const Keyframe& a, const Keyframe& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.index < b.index;
            });
            if (static_cast<std::int64_t>(all.size()) > strategy.n)
                all.resize(static_cast<std::size_t>(strategy.n));
            res.keyframes.entries = std::move(all);
            return res;
        }
        case Strategy::Kind::tstar: {
            if (scorer == nullptr) throw ConfigError("tstar strategy needs a scorer");
            SearchOutcome outcome = run_search(inst.video, inst.query, *scorer, cfg);
            res.keyframes = std::move(outcome.keyframes);
            res.efficiency = outcome.efficiency;
            res.iterations = outcome.iterations;
            res.terminal_reason = outcome.terminal_reason;
            return res;
        }
    }
    throw ConfigError("unknown strategy kind");
}

// --------------------------------------------------------------------------

SearchConfig resolve_config(const VideoSource& video, const ConfigOverrides& o,
                            std::uint64_t seed) {
    SearchConfig cfg = default_config(video, seed);
    if (o.grid_side) cfg.grid_side = *o.grid_side;
    if (o.budget) cfg.budget = *o.budget;
    if (o.k) cfg.k = *o.k;
    if (o.window) cfg.window = *o.window;
    if (o.max_iterations) cfg.max_iterations = *o.max_iterations;
    if (o.theta) cfg.theta = *o.theta;
    if (o.prob_floor) cfg.prob_floor = *o.prob_floor;
    // Derived caps keep derived defaults consistent with an overridden grid.
    if (o.grid_side && !o.max_iterations) {
        const std::int64_t cells = cfg.grid_side * cfg.grid_side;
        cfg.max_iterations = (4 * video.frame_count + cells - 1) / cells;
    }
    return cfg;
}

namespace {

// Bounded pool; slot i of the output belongs to task i, so results are
// deterministic regardless of scheduling.
template <typename Fn>
void parallel_for(std::int64_t count, int jobs, Fn&& fn) {
    const int workers = std::max(1, jobs);
    if (workers == 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::int64_t>(workers, count));
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

InstanceResult bench_one(const Strategy& strategy, const HaystackInstance& inst,
                         const BenchOptions& options) {
    InstanceResult res;
    res.strategy = strategy.name;
    res.instance_id = inst.instance_id;
    try {
        // One per-instance seed shared by every strategy; the scorer stream
        // is salted so its draws never mirror the sampler's.
        const std::uint64_t seed = derive_seed(options.seed, inst.instance_id);
        std::unique_ptr<Scorer> scorer;
        if (strategy.kind != Strategy::Kind::uniform)
            scorer = make_scorer(options.scorer, inst.refs_by_label(),
                                 derive_seed(seed, "scorer"));
        const SearchConfig cfg = resolve_config(inst.video, options.overrides, seed);
        StrategyResult run = run_strategy(strategy, inst, scorer.get(), cfg);
        res.efficiency = run.efficiency;
        res.iterations = run.iterations;
        res.terminal_reason = run.terminal_reason;
        const auto refs = inst.references();
        for (std::size_t m = 0; m < options.metrics.size(); ++m)
            res.metrics[options.metric_names[m]] =
                evaluate_instance(run.keyframes, refs, options.metrics[m], inst.video);
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
    }
    return res;
}

} // namespace

BenchReport run_benchmark(const std::vector<HaystackInstance>& instances,
                          const BenchOptions& options) {
    BenchReport report;
    const auto n = static_cast<std::int64_t>(instances.size());

    for (const auto& strategy : options.strategies) {
        std::vector<InstanceResult> results(static_cast<std::size_t>(n));
        parallel_for(n, options.jobs, [&](std::int64_t i) {
            results[static_cast<std::size_t>(i)] =
                bench_one(strategy, instances[static_cast<std::size_t>(i)], options);
        });

        StrategySummary summary;
        summary.strategy = strategy.name;
        std::map<std::string, std::vector<MetricReport>> by_metric;
        std::int64_t ok = 0;
        for (const auto& r : results) {
            if (r.failed) {
                ++summary.failures;
                continue;
            }
            ++ok;
            for (const auto& [name, rep] : r.metrics) by_metric[name].push_back(rep);
            summary.totals.frames_processed += r.efficiency.frames_processed;
            summary.totals.scorer_calls += r.efficiency.scorer_calls;
            summary.totals.verify_calls += r.efficiency.verify_calls;
            summary.totals.grounding_calls += r.efficiency.grounding_calls;
            summary.totals.cost_units += r.efficiency.cost_units;
            summary.totals.wall_time_s += r.efficiency.wall_time_s;
            summary.mean_iterations += static_cast<double>(r.iterations);
            summary.mean_frames_processed += static_cast<double>(r.efficiency.frames_processed);
        }
        if (ok > 0) {
            summary.mean_iterations /= static_cast<double>(ok);
            summary.mean_frames_processed /= static_cast<double>(ok);
        }
        for (auto& [name, reps] : by_metric) summary.aggregates[name] = aggregate(reps);

        report.summaries.push_back(std::move(summary));
        for (auto& r : results) report.results.push_back(std::move(r));
    }
    return report;
}

// --------------------------------------------------------------------------

std::vector<ComplexityRow> complexity_experiment(const ComplexityOptions& options) {
    std::vector<ComplexityRow> rows;
    for (const std::int64_t length : options.lengths) {
        for (const double accuracy : options.accuracies) {
            SynthParams sp;
            sp.frame_count = length;
            sp.fps = 30.0;
            sp.keyframes_per_instance = 1;
            sp.oracle_sigma = options.oracle_sigma;
            sp.oracle_noise = 0.0;
            sp.oracle_accuracy = accuracy;
            const auto label_seed = derive_seed(
                options.seed, "complexity/" + std::to_string(length) + "/" +
                                  std::to_string(accuracy));
            const auto instances = synth_haystack(sp, options.trials, label_seed);

            std::vector<double> iterations(instances.size(), 0.0);
            std::vector<double> frames(instances.size(), 0.0);
            parallel_for(static_cast<std::int64_t>(instances.size()), options.jobs,
                         [&](std::int64_t i) {
                const auto& inst = instances[static_cast<std::size_t>(i)];
                const std::uint64_t seed = derive_seed(options.seed, inst.instance_id);
                ScorerSpec spec;
                spec.kind = ScorerSpec::Kind::oracle;
                spec.oracle.sigma = sp.oracle_sigma;
                spec.oracle.accuracy = accuracy;
                auto scorer = make_scorer(spec, inst.refs_by_label(),
                                          derive_seed(seed, "scorer"));
                ConfigOverrides overrides;
                overrides.grid_side = options.grid_side;
                overrides.theta = options.theta;
                overrides.budget = length; // allow a full sweep
                const SearchConfig cfg = resolve_config(inst.video, overrides, seed);
                const SearchOutcome outcome = run_search(inst.video, inst.query, *scorer, cfg);
                iterations[static_cast<std::size_t>(i)] = static_cast<double>(outcome.iterations);
                frames[static_cast<std::size_t>(i)] =
                    static_cast<double>(outcome.efficiency.frames_processed);
            });

            ComplexityRow row;
            row.frame_count = length;
            row.accuracy = accuracy;
            const auto trials = static_cast<double>(instances.size());
            for (double v : iterations) row.mean_iterations += v;
            for (double v : frames) row.mean_frames += v;
            row.mean_iterations /= trials;
            row.mean_frames /= trials;
            double var = 0.0;
            for (double v : iterations) {
                const double d = v - row.mean_iterations;
                var += d * d;
            }
            row.sd_iterations = trials > 1 ? std::sqrt(var / (trials - 1.0)) : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string complexity_to_csv(const std::vector<ComplexityRow>& rows) {
    std::ostringstream out;
    out << "L,p,mean_iterations,sd_iterations,mean_frames\n";
    for (const auto& r : rows) {
        out << r.frame_count << ',' << r.accuracy << ',' << r.mean_iterations << ','
            << r.sd_iterations << ',' << r.mean_frames << '\n';
    }
    return out.str();
}

} // namespace tstar
