// tstar: budgeted temporal search over long videos, plus the evaluation and
// benchmark tooling around it. All subcommands are deterministic for a fixed
// seed; wall-clock timings are zeroed unless --timings is passed so reruns
// are byte-identical.

#include <atomic>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "tstar/haystack.hpp"

using nlohmann::json;
using namespace tstar;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 config/spec/IO error, 2 partial per-instance failures.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct CommonFlags {
    std::uint64_t seed = 0;
    int jobs = 1;
    bool timings = false;
    std::string out;
};

struct CfgFlags {
    std::int64_t grid_side = -1;
    std::int64_t budget = -1;
    std::int64_t k = -1;
    std::int64_t window = -1;
    std::int64_t max_iterations = -1;
    double theta = -1.0;
    double prob_floor = -1.0;

    ConfigOverrides overrides() const {
        ConfigOverrides o;
        if (grid_side >= 0) o.grid_side = grid_side;
        if (budget >= 0) o.budget = budget;
        if (k >= 0) o.k = k;
        if (window >= 0) o.window = window;
        if (max_iterations >= 0) o.max_iterations = max_iterations;
        if (theta >= 0.0) o.theta = theta;
        if (prob_floor >= 0.0) o.prob_floor = prob_floor;
        return o;
    }

    json echo() const {
        json j = json::object();
        if (grid_side >= 0) j["grid"] = grid_side;
        if (budget >= 0) j["budget"] = budget;
        if (k >= 0) j["k"] = k;
        if (window >= 0) j["window"] = window;
        if (max_iterations >= 0) j["max_iterations"] = max_iterations;
        if (theta >= 0.0) j["theta"] = theta;
        if (prob_floor >= 0.0) j["prob_floor"] = prob_floor;
        return j;
    }
};

// Every option is overridable from the environment as TSTAR_<NAME>.
CLI::Option* env(CLI::Option* opt, const std::string& name) {
    return opt->envname("TSTAR_" + name);
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw ConfigError("cannot open output file: " + path);
    return file;
}

json header_record(const std::string& command, const json& flags) {
    return json{{"type", "header"},
                {"tool", "tstar"},
                {"version", kVersion},
                {"command", command},
                {"flags", flags}};
}

json keyframes_json(const KeyframeSet& keys) {
    json arr = json::array();
    for (const auto& kf : keys.entries)
        arr.push_back({{"index", kf.index},
                       {"timestamp", kf.timestamp},
                       {"score", kf.score}});
    return arr;
}

json efficiency_json(const EfficiencyReport& e, bool timings) {
    return json{{"frames_processed", e.frames_processed},
                {"scorer_calls", e.scorer_calls},
                {"verify_calls", e.verify_calls},
                {"grounding_calls", e.grounding_calls},
                {"cost_units", e.cost_units},
                {"wall_time_s", timings ? e.wall_time_s : 0.0}};
}

json metric_json(const MetricReport& r) {
    return json{{"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"predicted_count", r.predicted_count},
                {"reference_count", r.reference_count}};
}

json metric_pct_json(const MetricReport& r) {
    return json{{"precision_pct", format_pct(r.precision)},
                {"recall_pct", format_pct(r.recall)},
                {"f1_pct", format_pct(r.f1)}};
}

// --------------------------------------------------------------------------

struct SearchArgs {
    std::string dataset;
    std::string scorer_spec;
    std::string trace_path;
    CommonFlags common;
    CfgFlags cfg;
};

int cmd_search(const SearchArgs& args) {
    const auto instances = load_dataset(args.dataset);
    const ScorerSpec spec = parse_scorer_spec(args.scorer_spec);

    struct Row {
        json record;
        std::string trace_csv;
        bool failed = false;
    };
    std::vector<Row> rows(instances.size());
    const bool want_trace = !args.trace_path.empty();

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= instances.size()) return;
            const auto& inst = instances[i];
            Row& row = rows[i];
            try {
                const std::uint64_t seed = derive_seed(args.common.seed, inst.instance_id);
                auto scorer = make_scorer(spec, inst.refs_by_label(),
                                          derive_seed(seed, "scorer"));
                const SearchConfig cfg =
                    resolve_config(inst.video, args.cfg.overrides(), seed);
                TraceOptions topts;
                topts.prob_snapshots = want_trace;
                const SearchOutcome outcome =
                    run_search(inst.video, inst.query, *scorer, cfg, topts);
                row.record = json{
                    {"type", "result"},
                    {"instance_id", inst.instance_id},
                    {"keyframes", keyframes_json(outcome.keyframes)},
                    {"terminal_reason", to_string(outcome.terminal_reason)},
                    {"iterations", outcome.iterations},
                    {"frames_processed", outcome.efficiency.frames_processed},
                    {"wall_time_s",
                     args.common.timings ? outcome.efficiency.wall_time_s : 0.0},
                    {"efficiency", efficiency_json(outcome.efficiency, args.common.timings)}};
                if (want_trace)
                    row.trace_csv = trace_to_csv(outcome.trace, inst.instance_id);
            } catch (const std::exception& e) {
                row.failed = true;
                row.record = json{{"type", "result"},
                                  {"instance_id", inst.instance_id},
                                  {"error", e.what()}};
            }
        }
    };
    const int jobs = std::max(1, args.common.jobs);
    if (jobs == 1 || instances.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    json flags{{"dataset", args.dataset},
               {"scorer", args.scorer_spec},
               {"seed", args.common.seed},
               {"cfg", args.cfg.echo()}};
    std::ofstream file;
    std::ostream& out = open_out(args.common.out, file);
    out << header_record("search", flags).dump() << '\n';
    bool any_failed = false;
    for (const auto& row : rows) {
        out << row.record.dump() << '\n';
        out.flush();
        any_failed = any_failed || row.failed;
    }

    if (want_trace) {
        std::ofstream trace(args.trace_path);
        if (!trace) throw ConfigError("cannot open trace file: " + args.trace_path);
        bool first = true;
        for (const auto& row : rows) {
            if (row.trace_csv.empty()) continue;
            if (!first) {
                // Drop the per-instance header after the first block.
                const auto nl = row.trace_csv.find('\n');
                trace << row.trace_csv.substr(nl + 1);
            } else {
                trace << row.trace_csv;
                first = false;
            }
        }
    }
    return any_failed ? kExitPartial : kExitOk;
}

// --------------------------------------------------------------------------

struct EvalArgs {
    std::string pred;
    std::string dataset;
    std::vector<std::string> metrics{"temporal"};
    double threshold = 5.0;
    std::string embeddings_dir;
    CommonFlags common;
};

int cmd_eval(const EvalArgs& args) {
    const auto instances = load_dataset(args.dataset);
    std::map<std::string, const HaystackInstance*> by_id;
    for (const auto& inst : instances) by_id[inst.instance_id] = &inst;

    // Predictions: "result" records from cmd_search (or compatible).
    std::ifstream in(args.pred);
    if (!in) throw ConfigError("cannot open predictions: " + args.pred);
    struct Pred {
        std::string instance_id;
        KeyframeSet keys;
    };
    std::vector<Pred> preds;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("predictions line " + std::to_string(line_no) + ": " + e.what());
        }
        if (rec.value("type", "") != "result") continue;
        if (rec.contains("error")) continue; // failed upstream; skip here
        Pred p;
        p.instance_id = rec.at("instance_id").get<std::string>();
        for (const auto& kf : rec.at("keyframes"))
            p.keys.entries.push_back({kf.at("index").get<FrameIndex>(),
                                      kf.at("timestamp").get<double>(),
                                      kf.at("score").get<double>()});
        preds.push_back(std::move(p));
    }

    std::ofstream file;
    std::ostream& out = open_out(args.common.out, file);
    json flags{{"pred", args.pred},
               {"dataset", args.dataset},
               {"metric", args.metrics},
               {"threshold", args.threshold}};
    out << header_record("eval", flags).dump() << '\n';

    bool any_failed = false;
    std::map<std::string, std::vector<MetricReport>> per_metric;
    std::map<std::string, std::vector<std::vector<double>>> embedding_cache;
    for (const auto& p : preds) {
        const auto it = by_id.find(p.instance_id);
        if (it == by_id.end()) {
            any_failed = true;
            out << json{{"type", "instance"},
                        {"instance_id", p.instance_id},
                        {"error", "instance not in dataset"}}
                       .dump()
                << '\n';
            continue;
        }
        const HaystackInstance& inst = *it->second;
        for (const auto& name : args.metrics) {
            try {
                SimilaritySpec spec;
                spec.kind = parse_metric_kind(name);
                spec.temporal_threshold_s = args.threshold;
                if (spec.kind == SimilaritySpec::Kind::embedding) {
                    if (args.embeddings_dir.empty())
                        throw ConfigError("embedding metric needs --embeddings");
                    auto& table = embedding_cache[inst.video.video_id];
                    if (table.empty())
                        table = load_embeddings(args.embeddings_dir + "/" +
                                                inst.video.video_id + ".emb");
                    spec.embeddings = &table;
                }
                const MetricReport rep =
                    evaluate_instance(p.keys, inst.references(), spec, inst.video);
                per_metric[name].push_back(rep);
                json rec{{"type", "instance"},
                         {"instance_id", p.instance_id},
                         {"metric", name}};
                rec.update(metric_json(rep));
                out << rec.dump() << '\n';
            } catch (const std::exception& e) {
                any_failed = true;
                out << json{{"type", "instance"},
                            {"instance_id", p.instance_id},
                            {"metric", name},
                            {"error", e.what()}}
                           .dump()
                    << '\n';
            }
        }
    }
    for (const auto& name : args.metrics) {
        const auto it = per_metric.find(name);
        if (it == per_metric.end()) continue;
        const MetricReport agg = aggregate(it->second);
        json rec{{"type", "aggregate"},
                 {"metric", name},
                 {"instances", static_cast<std::int64_t>(it->second.size())}};
        rec.update(metric_json(agg));
        rec.update(metric_pct_json(agg));
        out << rec.dump() << '\n';
    }
    return any_failed ? kExitPartial : kExitOk;
}

// --------------------------------------------------------------------------

struct SimulateArgs {
    std::int64_t count = 1;
    SynthParams params;
    CommonFlags common;
};

int cmd_simulate(const SimulateArgs& args) {
    const auto instances = synth_haystack(args.params, args.count, args.common.seed);
    std::ofstream file;
    std::ostream& out = open_out(args.common.out, file);
    json flags{{"count", args.count},
               {"frames", args.params.frame_count},
               {"fps", args.params.fps},
               {"keyframes", args.params.keyframes_per_instance},
               {"targets", args.params.targets_per_instance},
               {"cues", args.params.cues_per_instance},
               {"sigma", args.params.oracle_sigma},
               {"noise", args.params.oracle_noise},
               {"accuracy", args.params.oracle_accuracy},
               {"seed", args.common.seed}};
    out << header_record("simulate", flags).dump() << '\n';
    for (const auto& inst : instances) out << serialize_instance(inst) << '\n';
    return kExitOk;
}

// --------------------------------------------------------------------------

struct BenchArgs {
    std::string dataset;
    std::string scorer_spec;
    std::string strategies = "uniform8,uniform32,tstar";
    std::vector<std::string> metrics{"temporal"};
    double threshold = 5.0;
    CommonFlags common;
    CfgFlags cfg;
};

int cmd_bench(const BenchArgs& args) {
    const auto instances = load_dataset(args.dataset);

    BenchOptions options;
    options.scorer = parse_scorer_spec(args.scorer_spec);
    options.seed = args.common.seed;
    options.jobs = std::max(1, args.common.jobs);
    options.overrides = args.cfg.overrides();
    {
        std::istringstream ss(args.strategies);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) options.strategies.push_back(parse_strategy(item));
    }
    if (options.strategies.empty()) throw ConfigError("no strategies given");
    for (const auto& name : args.metrics) {
        SimilaritySpec spec;
        spec.kind = parse_metric_kind(name);
        spec.temporal_threshold_s = args.threshold;
        if (spec.kind == SimilaritySpec::Kind::embedding)
            throw ConfigError("bench does not support the embedding metric");
        options.metrics.push_back(spec);
        options.metric_names.push_back(name);
    }

    const BenchReport report = run_benchmark(instances, options);

    std::ofstream file;
    std::ostream& out = open_out(args.common.out, file);
    json flags{{"dataset", args.dataset},
               {"scorer", args.scorer_spec},
               {"strategies", args.strategies},
               {"metric", args.metrics},
               {"threshold", args.threshold},
               {"seed", args.common.seed},
               {"cfg", args.cfg.echo()}};
    out << header_record("bench", flags).dump() << '\n';

    bool any_failed = false;
    for (const auto& r : report.results) {
        json rec{{"type", "result"},
                 {"strategy", r.strategy},
                 {"instance_id", r.instance_id}};
        if (r.failed) {
            any_failed = true;
            rec["error"] = r.error;
        } else {
            json metrics = json::object();
            for (const auto& [name, rep] : r.metrics) metrics[name] = metric_json(rep);
            rec["metrics"] = std::move(metrics);
            rec["efficiency"] = efficiency_json(r.efficiency, args.common.timings);
            rec["iterations"] = r.iterations;
            if (r.terminal_reason) rec["terminal_reason"] = to_string(*r.terminal_reason);
        }
        out << rec.dump() << '\n';
        out.flush();
    }
    for (const auto& s : report.summaries) {
        json aggs = json::object();
        for (const auto& [name, rep] : s.aggregates) {
            aggs[name] = metric_json(rep);
            aggs[name].update(metric_pct_json(rep));
        }
        out << json{{"type", "summary"},
                    {"strategy", s.strategy},
                    {"metrics", std::move(aggs)},
                    {"mean_iterations", s.mean_iterations},
                    {"mean_frames_processed", s.mean_frames_processed},
                    {"totals", efficiency_json(s.totals, args.common.timings)},
                    {"failures", s.failures}}
                   .dump()
            << '\n';
    }
    return any_failed ? kExitPartial : kExitOk;
}

// --------------------------------------------------------------------------

struct ComplexityArgs {
    std::string lengths = "4096,65536";
    std::string accuracies = "1.0,0.5,0.25";
    ComplexityOptions options;
    CommonFlags common;
};

int cmd_complexity(const ComplexityArgs& args) {
    ComplexityOptions options = args.options;
    options.seed = args.common.seed;
    options.jobs = std::max(1, args.common.jobs);
    options.lengths.clear();
    options.accuracies.clear();
    {
        std::istringstream ss(args.lengths);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) options.lengths.push_back(std::stoll(item));
    }
    {
        std::istringstream ss(args.accuracies);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) options.accuracies.push_back(std::stod(item));
    }
    if (options.lengths.empty()) throw ConfigError("no lengths given");
    if (options.accuracies.empty()) throw ConfigError("no accuracies given");
    for (double p : options.accuracies)
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("accuracy outside (0, 1]");

    const auto rows = complexity_experiment(options);

    std::ofstream file;
    std::ostream& out = open_out(args.common.out, file);
    json flags{{"lengths", args.lengths},
               {"accuracies", args.accuracies},
               {"trials", options.trials},
               {"grid", options.grid_side},
               {"theta", options.theta},
               {"sigma", options.oracle_sigma},
               {"seed", options.seed}};
    out << "# " << header_record("complexity", flags).dump() << '\n';
    out << complexity_to_csv(rows);
    return kExitOk;
}

// --------------------------------------------------------------------------

void add_common(CLI::App* cmd, CommonFlags& flags) {
    env(cmd->add_option("--seed", flags.seed, "Base RNG seed"), "SEED");
    env(cmd->add_option("--jobs", flags.jobs, "Worker threads"), "JOBS");
    env(cmd->add_option("--out", flags.out, "Output file ('-' = stdout)"), "OUT");
    cmd->add_flag("--timings", flags.timings,
                  "Emit real wall times (off by default so reruns are byte-identical)");
}

void add_cfg(CLI::App* cmd, CfgFlags& cfg) {
    env(cmd->add_option("--grid", cfg.grid_side, "Grid side g (g^2 frames per iteration)"),
        "GRID");
    env(cmd->add_option("--budget", cfg.budget, "Frame budget (default min(L, 1024))"),
        "BUDGET");
    env(cmd->add_option("--theta", cfg.theta, "Verification threshold"), "THETA");
    env(cmd->add_option("--k", cfg.k, "Keyframes returned"), "K");
    env(cmd->add_option("--window", cfg.window,
                        "Score propagation half-width (default ceil(2.5s * fps))"),
        "WINDOW");
    env(cmd->add_option("--prob-floor", cfg.prob_floor,
                        "Probability floor (default 0.1/L)"),
        "PROB_FLOOR");
    env(cmd->add_option("--max-iterations", cfg.max_iterations,
                        "Iteration cap (default ceil(4L/g^2))"),
        "MAX_ITERATIONS");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Budgeted temporal search over long videos"};
    app.set_version_flag("--version", std::string("tstar ") + kVersion);
    app.require_subcommand(1);

    SearchArgs search;
    auto* cmd_s = app.add_subcommand("search", "Run the search over a dataset");
    env(cmd_s->add_option("--dataset", search.dataset, "Dataset (line-delimited JSON)")
            ->required(),
        "DATASET");
    env(cmd_s->add_option("--scorer", search.scorer_spec,
                          "Scorer spec: oracle:...|file:...|external:...")
            ->required(),
        "SCORER");
    cmd_s->add_option("--trace", search.trace_path,
                      "Write per-iteration probability CSV here");
    add_common(cmd_s, search.common);
    add_cfg(cmd_s, search.cfg);

    EvalArgs eval;
    auto* cmd_e = app.add_subcommand("eval", "Score predictions against references");
    env(cmd_e->add_option("--pred", eval.pred, "Predictions from 'search'")->required(),
        "PRED");
    env(cmd_e->add_option("--dataset", eval.dataset, "Dataset with references")->required(),
        "DATASET");
    env(cmd_e->add_option("--metric", eval.metrics,
                          "temporal|visual|embedding (repeatable)")
            ->delimiter(','),
        "METRIC");
    env(cmd_e->add_option("--threshold", eval.threshold, "Temporal threshold seconds"),
        "THRESHOLD");
    cmd_e->add_option("--embeddings", eval.embeddings_dir,
                      "Directory of <video_id>.emb tables");
    add_common(cmd_e, eval.common);

    SimulateArgs sim;
    auto* cmd_m = app.add_subcommand("simulate", "Generate a synthetic dataset");
    cmd_m->add_option("--count", sim.count, "Instances to generate")->required();
    cmd_m->add_option("--frames", sim.params.frame_count, "Frames per video");
    cmd_m->add_option("--fps", sim.params.fps, "Frames per second");
    cmd_m->add_option("--keyframes", sim.params.keyframes_per_instance,
                      "Keyframes per instance");
    cmd_m->add_option("--targets", sim.params.targets_per_instance, "Target labels");
    cmd_m->add_option("--cues", sim.params.cues_per_instance, "Cue labels");
    cmd_m->add_option("--sigma", sim.params.oracle_sigma, "Suggested oracle sigma");
    cmd_m->add_option("--noise", sim.params.oracle_noise, "Suggested oracle noise");
    cmd_m->add_option("--accuracy", sim.params.oracle_accuracy,
                      "Suggested oracle accuracy");
    cmd_m->add_option("--images", sim.params.image_dir,
                      "Write frame images under this directory");
    cmd_m->add_option("--image-size", sim.params.frame_image_size,
                      "Frame image side in pixels");
    add_common(cmd_m, sim.common);

    BenchArgs bench;
    auto* cmd_b = app.add_subcommand("bench", "Compare strategies on a dataset");
    env(cmd_b->add_option("--dataset", bench.dataset, "Dataset")->required(), "DATASET");
    env(cmd_b->add_option("--scorer", bench.scorer_spec, "Scorer spec")->required(),
        "SCORER");
    env(cmd_b->add_option("--strategies", bench.strategies,
                          "Comma list: uniformN,retrievalN,tstar"),
        "STRATEGIES");
    env(cmd_b->add_option("--metric", bench.metrics, "temporal|visual (repeatable)")
            ->delimiter(','),
        "METRIC");
    env(cmd_b->add_option("--threshold", bench.threshold, "Temporal threshold seconds"),
        "THRESHOLD");
    add_common(cmd_b, bench.common);
    add_cfg(cmd_b, bench.cfg);

    ComplexityArgs cx;
    auto* cmd_c = app.add_subcommand("complexity", "Iteration scaling experiment");
    cmd_c->add_option("--lengths", cx.lengths, "Comma list of frame counts");
    cmd_c->add_option("--accuracies", cx.accuracies, "Comma list of oracle accuracies");
    cmd_c->add_option("--trials", cx.options.trials, "Trials per cell");
    cmd_c->add_option("--grid", cx.options.grid_side, "Grid side g");
    cmd_c->add_option("--theta", cx.options.theta, "Verification threshold");
    cmd_c->add_option("--sigma", cx.options.oracle_sigma,
                      "Oracle confidence decay scale in frames");
    add_common(cmd_c, cx.common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_s->parsed()) return cmd_search(search);
        if (cmd_e->parsed()) return cmd_eval(eval);
        if (cmd_m->parsed()) return cmd_simulate(sim);
        if (cmd_b->parsed()) return cmd_bench(bench);
        if (cmd_c->parsed()) return cmd_complexity(cx);
    } catch (const std::exception& e) {
        std::cerr << "tstar: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
