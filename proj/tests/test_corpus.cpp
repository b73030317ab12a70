#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "xq/corpus.hpp"
#include "xq/errors.hpp"
#include "xq/selfplay.hpp"

using namespace xq;

namespace {

std::string fixture(const char* name) {
    return std::string(XQ_FIXTURE_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("record reader splits concatenated records") {
    std::istringstream in(slurp(fixture("games_ok.pgn")));
    RecordReader reader(in);
    int records = 0;
    while (auto raw = reader.next()) {
        GameRecord record = parse_game_record(raw->text);
        CHECK(record.moves.size() == 4);
        ++records;
    }
    CHECK(records == 3);
}

TEST_CASE("record reader handles movetext-only records and stray blanks") {
    std::istringstream in("\n\n1. b2-e2 h9-g7 *\n\n[Result \"1-0\"]\n\n1. h2-e2 1-0\n");
    RecordReader reader(in);
    auto first = reader.next();
    REQUIRE(first);
    CHECK(parse_game_record(first->text).moves.size() == 2);
    auto second = reader.next();
    REQUIRE(second);
    CHECK(parse_game_record(second->text).result == GameResult::RedWin);
    CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("scan_corpus tallies results") {
    std::vector<std::string> paths = {fixture("games_ok.pgn")};
    CorpusStats stats = scan_corpus(paths);
    CHECK(stats.games == 3);
    CHECK(stats.total_moves == 12);
    CHECK(stats.red_wins == 1);
    CHECK(stats.black_wins == 1);
    CHECK(stats.draws == 1);
    CHECK(stats.unknown_results == 0);
    CHECK(stats.parse_errors == 0);
    CHECK(stats.red_wins + stats.black_wins + stats.draws + stats.unknown_results == stats.games);
}

TEST_CASE("scan_corpus on an empty file") {
    std::vector<std::string> paths = {fixture("empty.pgn")};
    CorpusStats stats = scan_corpus(paths);
    CHECK(stats.games == 0);
    CHECK(stats.parse_errors == 0);
}

TEST_CASE("scan_corpus counts malformed records and keeps the rest") {
    std::vector<std::string> paths = {fixture("games_bad.pgn")};
    CorpusStats stats = scan_corpus(paths);
    // The record with the bad Result tag fails to parse; the two
    // illegal-but-well-formed games still scan.
    CHECK(stats.parse_errors == 1);
    CHECK(stats.games == 3);
    CHECK(stats.red_wins == 1);
    CHECK(stats.black_wins == 1);
    CHECK(stats.unknown_results == 1);
    REQUIRE(stats.first_errors.size() == 1);
    CHECK(stats.first_errors[0].file == paths[0]);
    CHECK(stats.red_wins + stats.black_wins + stats.draws + stats.unknown_results == stats.games);
}

TEST_CASE("scan_corpus merges multiple files") {
    std::vector<std::string> paths = {fixture("games_ok.pgn"), fixture("empty.pgn"),
                                      fixture("games_bad.pgn")};
    CorpusStats stats = scan_corpus(paths);
    CHECK(stats.games == 6);
    CHECK(stats.parse_errors == 1);
}

TEST_CASE("unreadable paths raise IoError") {
    std::vector<std::string> paths = {fixture("does_not_exist.pgn")};
    CHECK_THROWS_AS(scan_corpus(paths), IoError);
    CHECK_THROWS_AS(validate_corpus(paths), IoError);
}

TEST_CASE("validate_corpus reports legality") {
    SUBCASE("clean corpus has rate 1.0") {
        std::vector<std::string> paths = {fixture("games_ok.pgn")};
        ValidationReport report = validate_corpus(paths);
        CHECK(report.records == 3);
        CHECK(report.legal_records == 3);
        CHECK(report.legality_rate() == 1.0);
        CHECK(report.issues.empty());
    }
    SUBCASE("bad corpus pinpoints failures") {
        std::vector<std::string> paths = {fixture("games_bad.pgn")};
        ValidationReport report = validate_corpus(paths);
        CHECK(report.records == 4);
        CHECK(report.legal_records == 1);
        REQUIRE(report.issues.size() == 3);
        // Record 1: syntax (bad result tag). Record 2: screenless cannon
        // capture at ply 0. Record 3: blocked rook at ply 2.
        CHECK(report.issues[0].syntax);
        CHECK_FALSE(report.issues[1].syntax);
        CHECK(report.issues[1].ply == 0);
        CHECK(report.issues[2].ply == 2);
    }
}

TEST_CASE("export_training_set writes one example per legal ply") {
    std::vector<std::string> paths = {fixture("games_ok.pgn")};
    std::string out = "corpus_test_export.jsonl";
    std::uint64_t n = export_training_set(paths, out);
    CHECK(n == 12);

    std::vector<TrainingExample> examples = load_training_set(out);
    REQUIRE(examples.size() == 12);
    CHECK(examples[0].fen == emit_fen(initial_position()));
    CHECK(examples[0].side == Color::Red);
    CHECK(examples[0].target_action.has_value());
    CHECK(examples[0].z == 1.0);   // first fixture is a red win
    CHECK(examples[1].z == -1.0);  // black-to-move perspective

    SUBCASE("limit keeps a deterministic prefix") {
        std::string limited = "corpus_test_limited.jsonl";
        CHECK(export_training_set(paths, limited, 5) == 5);
        std::vector<TrainingExample> prefix = load_training_set(limited);
        REQUIRE(prefix.size() == 5);
        for (int i = 0; i < 5; ++i) {
            CHECK(prefix[i].fen == examples[i].fen);
            CHECK(prefix[i].target_action == examples[i].target_action);
        }
        std::remove(limited.c_str());
        std::remove((limited + ".manifest.json").c_str());
    }
    SUBCASE("byte-identical re-export") {
        std::string again = "corpus_test_export2.jsonl";
        export_training_set(paths, again);
        CHECK(slurp(out) == slurp(again));
        std::remove(again.c_str());
        std::remove((again + ".manifest.json").c_str());
    }
    SUBCASE("round-trip preserves planes and targets") {
        for (const TrainingExample& e : examples) {
            TrainingExample back = example_from_json(example_to_json(e));
            CHECK(back.fen == e.fen);
            CHECK(back.planes == e.planes);
            CHECK(back.target_action == e.target_action);
            CHECK(back.z == e.z);
        }
    }
    SUBCASE("manifest records counts and a digest") {
        std::string manifest = slurp(out + ".manifest.json");
        CHECK(manifest.find("\"examples\": 12") != std::string::npos);
        CHECK(manifest.find("fnv1a64:") != std::string::npos);
    }
    std::remove(out.c_str());
    std::remove((out + ".manifest.json").c_str());
}

TEST_CASE("illegal records are excluded whole from exports") {
    std::vector<std::string> paths = {fixture("games_bad.pgn")};
    std::string out = "corpus_test_bad_export.jsonl";
    // Only the first record survives: 2 plies.
    CHECK(export_training_set(paths, out) == 2);
    std::remove(out.c_str());
    std::remove((out + ".manifest.json").c_str());
}

TEST_CASE("self-play policy examples serialize and reload") {
    UniformEvaluator uniform;
    SelfPlayConfig config;
    config.search.simulations = 8;
    config.move_cap = 10;
    config.rng_seed = 2;
    std::mt19937_64 rng(2);
    SelfPlayGame game = play_game(uniform, config, rng);
    REQUIRE(!game.examples.empty());

    std::string path = "corpus_test_pi.jsonl";
    save_training_set(path, game.examples);
    std::vector<TrainingExample> back = load_training_set(path);
    REQUIRE(back.size() == game.examples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].fen == game.examples[i].fen);
        CHECK(back[i].has_policy_target());
        CHECK(back[i].target_policy == game.examples[i].target_policy);
        CHECK(back[i].planes == game.examples[i].planes);
        CHECK(back[i].z == game.examples[i].z);
    }
    std::remove(path.c_str());
}
