#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tstar/core.hpp"
#include "tstar/rng.hpp"
#include "tstar/sampling.hpp"
#include "tstar/subprocess.hpp"

namespace tstar {

struct Detection {
    std::string label;
    double confidence = 0.0; // in [0, 1]
};

using DetectionList = std::vector<Detection>;

// One detection list per grid cell (empty list for empty cells).
struct CellDetections {
    std::vector<DetectionList> per_cell;
};

// max over detections of confidence * query weight; 0 for an empty list.
// Labels the query does not mention carry weight 0.
double cell_confidence(const DetectionList& detections, const GroundedQuery& query);

class Scorer {
public:
    virtual ~Scorer() = default;

    // per_cell.size() == grid.cells.size(); empty cells get empty lists.
    virtual CellDetections score_grid(const GridLayout& grid, const GroundedQuery& query) = 0;

    // Independent confidence for one frame; default re-scores it as a 1x1
    // grid. Backends with a dedicated verify path override this.
    virtual double verify(FrameIndex frame, const GroundedQuery& query);

    virtual double cost_units_per_frame() const { return 1.0; }
};

// Convenience wrapper around Scorer::verify.
double verify_frame(Scorer& scorer, FrameIndex frame, const GroundedQuery& query);

// ---------------------------------------------------------------------------
// Oracle scorer: synthetic detector driven by planted keyframe positions.

struct OracleParams {
    double sigma = 0.0;       // confidence decay scale; 0 = exact-match indicator
    double noise_sigma = 0.0; // gaussian noise added to each confidence
    double accuracy = 1.0;    // p; with probability 1-p a grid reply is shuffled
    double cost_per_frame = 1.0;
};

class OracleScorer : public Scorer {
public:
    // refs: reference frame positions per label the oracle can "see"
    // (targets and cues alike).
    OracleScorer(OracleParams params,
                 std::map<std::string, std::vector<FrameIndex>> refs,
                 std::uint64_t seed);

    CellDetections score_grid(const GridLayout& grid, const GroundedQuery& query) override;
    double cost_units_per_frame() const override { return params_.cost_per_frame; }

    // exp(-d/sigma) to the nearest reference; indicator when sigma == 0.
    double base_confidence(FrameIndex frame, const std::string& label) const;

private:
    OracleParams params_;
    std::map<std::string, std::vector<FrameIndex>> refs_;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// File scorer: precomputed sparse table, frame_index <TAB> label <TAB> confidence.

class FileScorer : public Scorer {
public:
    explicit FileScorer(const std::string& path, double cost_per_frame = 1.0);

    CellDetections score_grid(const GridLayout& grid, const GroundedQuery& query) override;
    double cost_units_per_frame() const override { return cost_per_frame_; }

private:
    std::map<FrameIndex, DetectionList> table_;
    double cost_per_frame_ = 1.0;
};

// ---------------------------------------------------------------------------
// External scorer: child process speaking line-delimited JSON.
//
// Request:  {"type":"grid"|"verify","cells":[{"cell":c,"frame":f},...],
//            "targets":[{"label":l,"weight":w},...],"cues":[...]}
// Reply:    {"cells":[{"cell":c,"detections":[{"label":l,"confidence":x},...]},...]}
// Replies must arrive in request order.

class ExternalScorer : public Scorer {
public:
    explicit ExternalScorer(const std::string& command, double cost_per_frame = 1.0);

    CellDetections score_grid(const GridLayout& grid, const GroundedQuery& query) override;
    double verify(FrameIndex frame, const GroundedQuery& query) override;
    double cost_units_per_frame() const override { return cost_per_frame_; }

private:
    CellDetections exchange(const char* type, const GridLayout& grid,
                            const GroundedQuery& query);

    LineProcess process_;
    double cost_per_frame_ = 1.0;
};

// Protocol helpers, shared by the scorer and its tests.
std::string serialize_request(const char* type, const GridLayout& grid,
                              const GroundedQuery& query);
struct ProtocolRequest {
    std::string type;
    std::vector<std::pair<std::int64_t, FrameIndex>> cells; // (cell, frame)
    GroundedQuery query;
};
ProtocolRequest parse_request(const std::string& line);
CellDetections parse_reply(const std::string& line, const GridLayout& grid);

// ---------------------------------------------------------------------------
// Scorer specs: "oracle:sigma=60,noise=0.05,accuracy=0.9,cost=1",
// "file:scores.tsv" (or file:path=...), "external:command line".

struct ScorerSpec {
    enum class Kind { oracle, file, external };
    Kind kind = Kind::oracle;
    OracleParams oracle;
    std::string path;    // file kind
    std::string command; // external kind
    double cost_per_frame = 1.0;
};

ScorerSpec parse_scorer_spec(const std::string& text);

// refs/seed only drive the oracle kind; file and external ignore them.
std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec,
                                    const std::map<std::string, std::vector<FrameIndex>>& refs,
                                    std::uint64_t seed);

} // namespace tstar
