#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "tstar/errors.hpp"
#include "tstar/sampling.hpp"
#include "tstar/scoring.hpp"

using namespace tstar;

namespace {

GroundedQuery cat_query() {
    GroundedQuery q;
    q.question = "where is the cat?";
    q.targets = {{"cat", 1.0}};
    q.cues = {{"sofa", 0.5}};
    return q;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::trunc);
    out << body;
    return path;
}

// Canonical form of a detection list, order-insensitive.
std::multiset<std::pair<std::string, double>> canon(const DetectionList& dets) {
    std::multiset<std::pair<std::string, double>> out;
    for (const auto& d : dets) out.insert({d.label, d.confidence});
    return out;
}

} // namespace

TEST_SUITE("scoring") {

TEST_CASE("cell confidence is the best weighted detection") {
    const auto q = cat_query();
    CHECK(cell_confidence({}, q) == 0.0);
    CHECK(cell_confidence({{"cat", 0.8}}, q) == doctest::Approx(0.8));
    // The cue detection is stronger raw but weaker after weighting.
    CHECK(cell_confidence({{"cat", 0.8}, {"sofa", 0.9}}, q) == doctest::Approx(0.8));
    CHECK(cell_confidence({{"sofa", 0.9}}, q) == doctest::Approx(0.45));
    // Labels the query never mentioned contribute nothing.
    CHECK(cell_confidence({{"zebra", 1.0}}, q) == 0.0);
}

TEST_CASE("oracle confidence decays exponentially with frame distance") {
    OracleScorer scorer({/*sigma=*/30.0}, {{"cat", {300}}}, 1);
    CHECK(scorer.base_confidence(300, "cat") == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(scorer.base_confidence(270, "cat") ==
          doctest::Approx(0.36787944117144233).epsilon(1e-14)); // exp(-1)
    CHECK(scorer.base_confidence(330, "cat") ==
          doctest::Approx(0.36787944117144233).epsilon(1e-14));
    CHECK(scorer.base_confidence(0, "cat") ==
          doctest::Approx(4.5399929762484854e-05).epsilon(1e-12)); // exp(-10)
    CHECK(scorer.base_confidence(300, "dog") == 0.0);
}

TEST_CASE("oracle uses the nearest reference of a label") {
    OracleScorer scorer({/*sigma=*/10.0}, {{"cat", {100, 200}}}, 1);
    CHECK(scorer.base_confidence(160, "cat") ==
          doctest::Approx(std::exp(-4.0)).epsilon(1e-14)); // 200 is closer than 100
    CHECK(scorer.base_confidence(120, "cat") ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("zero sigma is an exact-match indicator") {
    OracleScorer scorer({/*sigma=*/0.0}, {{"cat", {42}}}, 1);
    CHECK(scorer.base_confidence(42, "cat") == 1.0);
    CHECK(scorer.base_confidence(41, "cat") == 0.0);
    CHECK(scorer.base_confidence(43, "cat") == 0.0);
}

TEST_CASE("an accurate noiseless oracle reports plain base confidences") {
    OracleParams p;
    p.sigma = 30.0;
    OracleScorer scorer(p, {{"cat", {300}}}, 7);
    const auto grid = build_grid({270, 300, 500}, 2);
    const auto dets = scorer.score_grid(grid, cat_query());
    REQUIRE(dets.per_cell.size() == 4);
    CHECK(cell_confidence(dets.per_cell[0], cat_query()) ==
          doctest::Approx(0.36787944117144233).epsilon(1e-14));
    CHECK(cell_confidence(dets.per_cell[1], cat_query()) == doctest::Approx(1.0));
    CHECK(dets.per_cell[3].empty()); // unfilled cell
}

TEST_CASE("noise is clamped into the unit interval and is seed-deterministic") {
    OracleParams p;
    p.sigma = 30.0;
    p.noise_sigma = 0.8;
    const auto grid = build_grid({250, 280, 300, 320}, 2);

    OracleScorer a(p, {{"cat", {300}}}, 99);
    OracleScorer b(p, {{"cat", {300}}}, 99);
    OracleScorer c(p, {{"cat", {300}}}, 100);

    bool any_difference_from_c = false;
    for (int round = 0; round < 20; ++round) {
        const auto da = a.score_grid(grid, cat_query());
        const auto db = b.score_grid(grid, cat_query());
        const auto dc = c.score_grid(grid, cat_query());
        for (std::size_t cell = 0; cell < da.per_cell.size(); ++cell) {
            REQUIRE(canon(da.per_cell[cell]) == canon(db.per_cell[cell]));
            if (canon(da.per_cell[cell]) != canon(dc.per_cell[cell]))
                any_difference_from_c = true;
            for (const auto& d : da.per_cell[cell]) {
                REQUIRE(d.confidence >= 0.0);
                REQUIRE(d.confidence <= 1.0);
            }
        }
    }
    CHECK(any_difference_from_c);
}

TEST_CASE("misleading replies permute evidence without inventing it") {
    OracleParams p;
    p.sigma = 30.0;
    p.accuracy = 0.0; // adversarial on every grid call
    const auto grid = build_grid({100, 270, 300, 330, 600, 900}, 3);
    const auto q = cat_query();

    OracleParams honest_p;
    honest_p.sigma = 30.0;
    OracleScorer honest(honest_p, {{"cat", {300}}}, 5);
    const auto want = honest.score_grid(grid, q);

    OracleScorer lying(p, {{"cat", {300}}}, 5);
    const auto got = lying.score_grid(grid, q);

    std::multiset<std::multiset<std::pair<std::string, double>>> want_lists, got_lists;
    bool moved = false;
    for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
        if (!grid.cells[cell]) continue;
        want_lists.insert(canon(want.per_cell[cell]));
        got_lists.insert(canon(got.per_cell[cell]));
        if (canon(want.per_cell[cell]) != canon(got.per_cell[cell])) moved = true;
    }
    CHECK(want_lists == got_lists); // same evidence, wrong cells
    CHECK(moved);                   // a rotation by >= 1 always displaces something

    // Verification stays honest even for a fully adversarial scorer.
    CHECK(lying.verify(300, q) == doctest::Approx(1.0));
    CHECK(lying.verify(270, q) == doctest::Approx(0.36787944117144233).epsilon(1e-14));
}

TEST_CASE("full accuracy never shuffles") {
    OracleParams p;
    p.sigma = 30.0;
    p.accuracy = 1.0;
    OracleScorer scorer(p, {{"cat", {300}}}, 11);
    const auto grid = build_grid({270, 300}, 2);
    for (int round = 0; round < 50; ++round) {
        const auto dets = scorer.score_grid(grid, cat_query());
        REQUIRE(cell_confidence(dets.per_cell[1], cat_query()) == doctest::Approx(1.0));
    }
}

TEST_CASE("file scorer replays a sparse confidence table") {
    const auto path = write_temp("tstar_scoring_table.tsv",
                                 "10\tcat\t0.9\n"
                                 "10\tsofa\t0.4\n"
                                 "250\tcat\t0.35\n");
    FileScorer scorer(path.string(), 2.5);
    CHECK(scorer.cost_units_per_frame() == doctest::Approx(2.5));

    const auto grid = build_grid({10, 77, 250}, 2);
    const auto dets = scorer.score_grid(grid, cat_query());
    CHECK(cell_confidence(dets.per_cell[0], cat_query()) == doctest::Approx(0.9));
    CHECK(dets.per_cell[1].empty()); // frame 77 has no table entry
    CHECK(cell_confidence(dets.per_cell[2], cat_query()) == doctest::Approx(0.35));
    CHECK(scorer.verify(10, cat_query()) == doctest::Approx(0.9));
    std::filesystem::remove(path);
}

TEST_CASE("file scorer reports the offending line") {
    const auto path = write_temp("tstar_scoring_bad.tsv",
                                 "10\tcat\t0.9\n"
                                 "11\tcat\n");
    CHECK_THROWS_WITH_AS(FileScorer(path.string()),
                         doctest::Contains("line 2"), ParseError);
    std::filesystem::remove(path);

    const auto bad_conf = write_temp("tstar_scoring_badconf.tsv", "10\tcat\t1.5\n");
    CHECK_THROWS_AS(FileScorer(bad_conf.string()), ParseError);
    std::filesystem::remove(bad_conf);

    const auto bad_frame = write_temp("tstar_scoring_badframe.tsv", "-3\tcat\t0.5\n");
    CHECK_THROWS_AS(FileScorer(bad_frame.string()), ParseError);
    std::filesystem::remove(bad_frame);

    CHECK_THROWS_AS(FileScorer("/nonexistent/scores.tsv"), ScorerError);
}

TEST_CASE("scorer specs parse and validate") {
    const auto oracle = parse_scorer_spec("oracle:sigma=60,noise=0.05,accuracy=0.9,cost=2");
    CHECK(oracle.kind == ScorerSpec::Kind::oracle);
    CHECK(oracle.oracle.sigma == doctest::Approx(60.0));
    CHECK(oracle.oracle.noise_sigma == doctest::Approx(0.05));
    CHECK(oracle.oracle.accuracy == doctest::Approx(0.9));
    CHECK(oracle.cost_per_frame == doctest::Approx(2.0));

    const auto bare = parse_scorer_spec("oracle");
    CHECK(bare.oracle.sigma == 0.0);
    CHECK(bare.oracle.accuracy == 1.0);

    const auto file = parse_scorer_spec("file:scores.tsv");
    CHECK(file.kind == ScorerSpec::Kind::file);
    CHECK(file.path == "scores.tsv");
    CHECK(parse_scorer_spec("file:path=/tmp/x.tsv").path == "/tmp/x.tsv");

    const auto ext = parse_scorer_spec("external:python3 scorer.py --flag");
    CHECK(ext.kind == ScorerSpec::Kind::external);
    CHECK(ext.command == "python3 scorer.py --flag");

    CHECK_THROWS_AS(parse_scorer_spec("oracle:sigma=sixty"), ConfigError);
    CHECK_THROWS_AS(parse_scorer_spec("oracle:volume=11"), ConfigError);
    CHECK_THROWS_AS(parse_scorer_spec("oracle:accuracy=0"), ConfigError);
    CHECK_THROWS_AS(parse_scorer_spec("oracle:accuracy=1.5"), ConfigError);
    CHECK_THROWS_AS(parse_scorer_spec("oracle:sigma=-1"), ConfigError);
    CHECK_THROWS_AS(parse_scorer_spec("file:"), ConfigError);
    CHECK_THROWS_AS(parse_scorer_spec("external:"), ConfigError);
    CHECK_THROWS_AS(parse_scorer_spec("magic:whatever"), ConfigError);
}

TEST_CASE("the factory builds the requested backend") {
    const std::map<std::string, std::vector<FrameIndex>> refs{{"cat", {42}}};
    auto oracle = make_scorer(parse_scorer_spec("oracle:sigma=0"), refs, 3);
    CHECK(oracle->verify(42, cat_query()) == doctest::Approx(1.0));
    CHECK(oracle->verify(41, cat_query()) == 0.0);

    const auto path = write_temp("tstar_scoring_factory.tsv", "7\tcat\t0.6\n");
    auto file = make_scorer(parse_scorer_spec("file:" + path.string()), refs, 3);
    CHECK(file->verify(7, cat_query()) == doctest::Approx(0.6));
    std::filesystem::remove(path);
}

} // TEST_SUITE
