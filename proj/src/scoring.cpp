#include "tstar/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "tstar/errors.hpp"

namespace tstar {

using nlohmann::json;

double cell_confidence(const DetectionList& detections, const GroundedQuery& query) {
    double best = 0.0;
    for (const auto& det : detections)
        best = std::max(best, det.confidence * query.weight_of(det.label));
    return best;
}

double Scorer::verify(FrameIndex frame, const GroundedQuery& query) {
    const GridLayout grid = build_grid({frame}, 1);
    const CellDetections dets = score_grid(grid, query);
    return cell_confidence(dets.per_cell.at(0), query);
}

double verify_frame(Scorer& scorer, FrameIndex frame, const GroundedQuery& query) {
    return scorer.verify(frame, query);
}

// --------------------------------------------------------------------------

OracleScorer::OracleScorer(OracleParams params,
                           std::map<std::string, std::vector<FrameIndex>> refs,
                           std::uint64_t seed)
    : params_(params), refs_(std::move(refs)), rng_(seed) {
    for (auto& [label, frames] : refs_) std::sort(frames.begin(), frames.end());
}

double OracleScorer::base_confidence(FrameIndex frame, const std::string& label) const {
    const auto it = refs_.find(label);
    if (it == refs_.end() || it->second.empty()) return 0.0;
    const auto& frames = it->second;
    auto lo = std::lower_bound(frames.begin(), frames.end(), frame);
    std::int64_t d = std::numeric_limits<std::int64_t>::max();
    if (lo != frames.end()) d = std::min(d, *lo - frame);
    if (lo != frames.begin()) d = std::min(d, frame - *(lo - 1));
    if (params_.sigma == 0.0) return d == 0 ? 1.0 : 0.0;
    return std::exp(-static_cast<double>(d) / params_.sigma);
}

CellDetections OracleScorer::score_grid(const GridLayout& grid, const GroundedQuery& query) {
    CellDetections out;
    out.per_cell.assign(grid.cells.size(), {});

    std::vector<std::size_t> filled;
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        if (!grid.cells[i]) continue;
        filled.push_back(i);
        const FrameIndex frame = *grid.cells[i];
        DetectionList dets;
        auto emit = [&](const WeightedObject& obj) {
            double conf = base_confidence(frame, obj.label);
            if (params_.noise_sigma > 0.0) conf += params_.noise_sigma * rng_.next_normal();
            conf = std::clamp(conf, 0.0, 1.0);
            if (conf > 0.0) dets.push_back({obj.label, conf});
        };
        for (const auto& t : query.targets) emit(t);
        for (const auto& c : query.cues) emit(c);
        out.per_cell[i] = std::move(dets);
    }

    // Misleading reply: rotate the detection lists across the filled cells so
    // real evidence shows up attached to the wrong frames. A 1x1 verify grid
    // has a single filled cell and is therefore always honest.
    if (params_.accuracy < 1.0 && filled.size() >= 2 &&
        rng_.next_double() >= params_.accuracy) {
        const std::uint64_t offset = 1 + rng_.next_below(filled.size() - 1);
        std::vector<DetectionList> rotated(filled.size());
        for (std::size_t i = 0; i < filled.size(); ++i)
            rotated[(i + offset) % filled.size()] = std::move(out.per_cell[filled[i]]);
        for (std::size_t i = 0; i < filled.size(); ++i)
            out.per_cell[filled[i]] = std::move(rotated[i]);
    }
    return out;
}

// --------------------------------------------------------------------------

FileScorer::FileScorer(const std::string& path, double cost_per_frame)
    : cost_per_frame_(cost_per_frame) {
    std::ifstream in(path);
    if (!in) throw ScorerError("cannot open scores file: " + path);
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string frame_field, label, conf_field;
        if (!std::getline(ss, frame_field, '\t') || !std::getline(ss, label, '\t') ||
            !std::getline(ss, conf_field, '\t')) {
            throw ParseError("scores file line " + std::to_string(line_no) +
                             ": expected frame<TAB>label<TAB>confidence");
        }
        try {
            const FrameIndex frame = std::stoll(frame_field);
            const double conf = std::stod(conf_field);
            if (frame < 0) throw std::invalid_argument("negative frame");
            if (!(conf >= 0.0 && conf <= 1.0)) throw std::invalid_argument("confidence range");
            table_[frame].push_back({label, conf});
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError("scores file line " + std::to_string(line_no) + ": " +
                             e.what());
        }
    }
}

CellDetections FileScorer::score_grid(const GridLayout& grid, const GroundedQuery&) {
    CellDetections out;
    out.per_cell.assign(grid.cells.size(), {});
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        if (!grid.cells[i]) continue;
        const auto it = table_.find(*grid.cells[i]);
        if (it != table_.end()) out.per_cell[i] = it->second;
    }
    return out;
}

// --------------------------------------------------------------------------

namespace {

json query_to_json(const GroundedQuery& query) {
    json targets = json::array();
    for (const auto& t : query.targets) targets.push_back({{"label", t.label}, {"weight", t.weight}});
    json cues = json::array();
    for (const auto& c : query.cues) cues.push_back({{"label", c.label}, {"weight", c.weight}});
    return {{"targets", targets}, {"cues", cues}};
}

} // namespace

std::string serialize_request(const char* type, const GridLayout& grid,
                              const GroundedQuery& query) {
    json cells = json::array();
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        if (!grid.cells[i]) continue;
        cells.push_back({{"cell", static_cast<std::int64_t>(i)},
                         {"frame", *grid.cells[i]}});
    }
    json req = query_to_json(query);
    req["type"] = type;
    req["cells"] = std::move(cells);
    return req.dump();
}

ProtocolRequest parse_request(const std::string& line) {
    ProtocolRequest out;
    try {
        const json req = json::parse(line);
        out.type = req.at("type").get<std::string>();
        for (const auto& c : req.at("cells"))
            out.cells.emplace_back(c.at("cell").get<std::int64_t>(),
                                   c.at("frame").get<FrameIndex>());
        for (const auto& t : req.at("targets"))
            out.query.targets.push_back(
                {t.at("label").get<std::string>(), t.at("weight").get<double>()});
        for (const auto& c : req.at("cues"))
            out.query.cues.push_back(
                {c.at("label").get<std::string>(), c.at("weight").get<double>()});
    } catch (const json::exception& e) {
        throw ScorerError(std::string("malformed scorer request: ") + e.what());
    }
    return out;
}

CellDetections parse_reply(const std::string& line, const GridLayout& grid) {
    CellDetections out;
    out.per_cell.assign(grid.cells.size(), {});
    try {
        const json reply = json::parse(line);
        for (const auto& c : reply.at("cells")) {
            const auto cell = c.at("cell").get<std::int64_t>();
            if (cell < 0 || cell >= static_cast<std::int64_t>(grid.cells.size()))
                throw ScorerError("scorer reply cell out of range");
            if (!grid.cells[static_cast<std::size_t>(cell)])
                throw ScorerError("scorer reply addresses an empty cell");
            DetectionList dets;
            for (const auto& d : c.at("detections"))
                dets.push_back({d.at("label").get<std::string>(),
                                d.at("confidence").get<double>()});
            out.per_cell[static_cast<std::size_t>(cell)] = std::move(dets);
        }
    } catch (const json::exception& e) {
        throw ScorerError(std::string("malformed scorer reply: ") + e.what());
    }
    return out;
}

ExternalScorer::ExternalScorer(const std::string& command, double cost_per_frame)
    : process_(command), cost_per_frame_(cost_per_frame) {}

CellDetections ExternalScorer::exchange(const char* type, const GridLayout& grid,
                                        const GroundedQuery& query) {
    process_.send_line(serialize_request(type, grid, query));
    const auto reply = process_.read_line();
    if (!reply) throw ScorerError("scorer process closed its pipe");
    return parse_reply(*reply, grid);
}

CellDetections ExternalScorer::score_grid(const GridLayout& grid, const GroundedQuery& query) {
    return exchange("grid", grid, query);
}

double ExternalScorer::verify(FrameIndex frame, const GroundedQuery& query) {
    const GridLayout grid = build_grid({frame}, 1);
    const CellDetections dets = exchange("verify", grid, query);
    return cell_confidence(dets.per_cell.at(0), query);
}

// --------------------------------------------------------------------------

namespace {

double parse_num(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad scorer option " + key + "=" + value);
    }
}

} // namespace

ScorerSpec parse_scorer_spec(const std::string& text) {
    ScorerSpec spec;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);

    if (kind == "oracle") {
        spec.kind = ScorerSpec::Kind::oracle;
        std::istringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("bad scorer option: " + item);
            const std::string key = item.substr(0, eq);
            const std::string value = item.substr(eq + 1);
            if (key == "sigma") spec.oracle.sigma = parse_num(key, value);
            else if (key == "noise") spec.oracle.noise_sigma = parse_num(key, value);
            else if (key == "accuracy") spec.oracle.accuracy = parse_num(key, value);
            else if (key == "cost") spec.oracle.cost_per_frame = parse_num(key, value);
            else throw ConfigError("unknown oracle option: " + key);
        }
        if (spec.oracle.sigma < 0.0) throw ConfigError("oracle sigma < 0");
        if (spec.oracle.noise_sigma < 0.0) throw ConfigError("oracle noise < 0");
        if (!(spec.oracle.accuracy > 0.0 && spec.oracle.accuracy <= 1.0))
            throw ConfigError("oracle accuracy outside (0, 1]");
        spec.cost_per_frame = spec.oracle.cost_per_frame;
    } else if (kind == "file") {
        spec.kind = ScorerSpec::Kind::file;
        spec.path = rest.rfind("path=", 0) == 0 ? rest.substr(5) : rest;
        if (spec.path.empty()) throw ConfigError("file scorer needs a path");
    } else if (kind == "external") {
        spec.kind = ScorerSpec::Kind::external;
        spec.command = rest;
        if (spec.command.empty()) throw ConfigError("external scorer needs a command");
    } else {
        throw ConfigError("unknown scorer kind: " + kind);
    }
    return spec;
}

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec,
                                    const std::map<std::string, std::vector<FrameIndex>>& refs,
                                    std::uint64_t seed) {
    switch (spec.kind) {
        case ScorerSpec::Kind::oracle:
            return std::make_unique<OracleScorer>(spec.oracle, refs, seed);
        case ScorerSpec::Kind::file:
            return std::make_unique<FileScorer>(spec.path, spec.cost_per_frame);
        case ScorerSpec::Kind::external:
            return std::make_unique<ExternalScorer>(spec.command, spec.cost_per_frame);
    }
    throw ConfigError("unknown scorer kind");
}

} // namespace tstar
