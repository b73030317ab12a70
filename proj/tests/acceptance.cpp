// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run via `ctest -R acceptance` or directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mate_fixtures.hpp"
#include "oracle.hpp"
#include "test_util.hpp"
#include "xq/corpus.hpp"
#include "xq/encoding.hpp"
#include "xq/evaluator.hpp"
#include "xq/mcts.hpp"
#include "xq/notation.hpp"
#include "xq/rules.hpp"
#include "xq/selfplay.hpp"

using namespace xq;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

bool check(Outcome& out, bool condition, const std::string& message) {
    if (!condition) {
        out.pass = false;
        if (!out.detail.empty()) out.detail += "; ";
        out.detail += message;
    }
    return condition;
}

// 1. legal_moves matches the naive oracle on >= 1000 random-walk positions.
Outcome criterion_movegen() {
    Outcome out{true, ""};
    auto states = testutil::random_walk_states(1001, 1000);
    std::size_t discrepancies = 0;
    for (const GameState& s : states) {
        std::vector<Move> got = legal_moves(s);
        std::vector<Move> want = oracle::oracle_legal_moves(s);
        std::set<Move> got_set(got.begin(), got.end());
        std::set<Move> want_set(want.begin(), want.end());
        if (got_set != want_set) ++discrepancies;
    }
    check(out, discrepancies == 0,
          "discrepancies on " + std::to_string(discrepancies) + " positions");
    out.detail = std::to_string(states.size()) + " positions, " +
                 std::to_string(discrepancies) + " discrepancies";
    return out;
}

// 2. perft anchors and oracle agreement through depth 3, depth 3 < 30 s.
Outcome criterion_perft() {
    Outcome out{true, ""};
    GameState start = initial_position();
    check(out, perft(start, 1) == 44, "perft(1) != 44");
    std::uint64_t oracle2 = oracle::oracle_perft(start, 2);
    std::uint64_t oracle3 = oracle::oracle_perft(start, 3);
    check(out, perft(start, 2) == oracle2, "perft(2) disagrees with the oracle");
    auto t0 = Clock::now();
    std::uint64_t impl3 = perft(start, 3);
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    check(out, impl3 == oracle3, "perft(3) disagrees with the oracle");
    check(out, secs < 30.0, "perft(3) too slow");
    if (out.pass) {
        std::ostringstream d;
        d << "perft(1)=44, perft(2)=" << oracle2 << ", perft(3)=" << oracle3 << " (impl "
          << secs << "s)";
        out.detail = d.str();
    }
    return out;
}

// 3. Action bijection over 8010 pairs; plane invariants on 1000 states.
Outcome criterion_encoding() {
    Outcome out{true, ""};
    int pairs = 0;
    for (int from = 0; from < kNumSquares && out.pass; ++from)
        for (int to = 0; to < kNumSquares; ++to) {
            if (from == to) continue;
            Move m{Square::from_index(from), Square::from_index(to)};
            if (!check(out, decode_action(encode_action(m)) == m, "bijection broken")) break;
            ++pairs;
        }

    auto states = testutil::random_walk_states(77, 1000);
    for (const GameState& s : states) {
        PlaneTensor t = encode_state(s);
        int pieces = 0;
        for (int i = 0; i < kNumSquares; ++i)
            if (s.piece_at(Square::from_index(i))) ++pieces;
        double total = 0.0;
        bool one_hot = true;
        for (int r = 0; r < kNumRanks; ++r)
            for (int f = 0; f < kNumFiles; ++f) {
                double cell = 0.0;
                for (int c = 0; c < 14; ++c) cell += t.at(r, f, c);
                if (cell > 1.0) one_hot = false;
                total += cell;
            }
        if (!check(out, one_hot, "square with two hot piece channels")) break;
        if (!check(out, total == static_cast<double>(pieces), "piece count mismatch")) break;
    }
    if (out.pass)
        out.detail = std::to_string(pairs) + " action pairs, " + std::to_string(states.size()) +
                     " states";
    return out;
}

// 4. FEN and ICCS round-trips; canonical start FEN.
Outcome criterion_notation() {
    Outcome out{true, ""};
    check(out,
          same_position(parse_fen("rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR w"),
                        initial_position()),
          "start FEN does not parse to the initial position");
    auto states = testutil::random_walk_states(99, 1000);
    for (const GameState& s : states) {
        if (!check(out, same_position(parse_fen(emit_fen(s)), s), "FEN round-trip failed")) break;
    }
    int moves = 0;
    for (int from = 0; from < kNumSquares && out.pass; ++from)
        for (int to = 0; to < kNumSquares; ++to) {
            if (from == to) continue;
            Move m{Square::from_index(from), Square::from_index(to)};
            if (!check(out, parse_iccs_move(emit_iccs_move(m)) == m, "ICCS round-trip failed"))
                break;
            ++moves;
        }
    if (out.pass)
        out.detail = std::to_string(states.size()) + " states, " + std::to_string(moves) +
                     " moves round-tripped";
    return out;
}

// 5. Analytic gradient vs central finite differences, rel. error < 1e-4.
Outcome criterion_gradcheck() {
    Outcome out{true, ""};
    ModelConfig config;
    config.backbone = {30, 8};
    config.value_hidden = 6;
    config.policy_out = 12;
    ModelParams params = ModelParams::init(config, 2024);

    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd X(1, 30);
    for (int i = 0; i < 30; ++i) X(0, i) = dist(rng);
    TrainingExample example;
    example.target_action = 7;
    example.z = 0.3;

    auto loss_at = [&](const ModelParams& p) {
        ActivationCache cache;
        model_forward_batch(p, X, cache);
        Evaluation eval;
        eval.policy.resize(config.policy_out);
        for (int i = 0; i < config.policy_out; ++i) eval.policy[i] = cache.policy(0, i);
        eval.value = cache.value(0);
        return loss(eval, example).total;
    };

    ActivationCache cache;
    model_forward_batch(params, X, cache);
    Gradients analytic =
        model_backward_batch(params, cache, std::span<const TrainingExample>(&example, 1));

    const double h = 1e-5;
    double max_rel = 0.0;
    for (Eigen::Index i = 0; i < params.flat.size(); ++i) {
        ModelParams plus = params, minus = params;
        plus.flat[i] += h;
        minus.flat[i] -= h;
        double numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        double rel = std::abs(analytic[i] - numeric) /
                     std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, rel);
    }
    check(out, max_rel < 1e-4, "max relative error " + std::to_string(max_rel));
    if (out.pass) {
        std::ostringstream d;
        d << params.flat.size() << " parameters, max rel err " << max_rel;
        out.detail = d.str();
    }
    return out;
}

// 6. Loss anchors: zero at perfection, ln 8100 for uniform vs one-hot.
Outcome criterion_loss_anchors() {
    Outcome out{true, ""};
    Evaluation perfect;
    perfect.policy.assign(kPolicySize, 0.0);
    perfect.policy[42] = 1.0;
    perfect.value = -1.0;
    TrainingExample e;
    e.target_action = 42;
    e.z = -1.0;
    check(out, std::abs(loss(perfect, e).total) <= 1e-12, "perfect prediction loss not 0");

    Evaluation uniform;
    uniform.policy.assign(kPolicySize, 1.0 / kPolicySize);
    uniform.value = 0.0;
    TrainingExample u;
    u.target_action = 99;
    u.z = 0.0;
    double diff = std::abs(loss(uniform, u).policy_loss - std::log(8100.0));
    check(out, diff < 1e-9, "uniform CE differs from ln 8100 by " + std::to_string(diff));
    if (out.pass) out.detail = "0 at perfection; ln(8100) uniform";
    return out;
}

// 7. Overfit a 64-example batch within 2000 Adam steps at lr 1e-3.
Outcome criterion_overfit() {
    Outcome out{true, ""};
    std::mt19937_64 rng(2025);
    auto states = testutil::random_walk_states(2025, 64);
    std::vector<TrainingExample> batch;
    for (const GameState& s : states) {
        std::vector<Move> moves = legal_moves(s);
        std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
        std::uniform_int_distribution<int> z_pick(-1, 1);
        batch.push_back(make_cloning_example(s, moves[pick(rng)],
                                             static_cast<double>(z_pick(rng))));
    }

    ModelParams params = ModelParams::init(ModelConfig{}, 2025);
    AdamState opt = AdamState::init(params, 1e-3);
    int steps = 0;
    double accuracy = 0.0, mae = 2.0;
    while (steps < 2000) {
        EpochMetrics m = train_epoch(params, opt, batch, 64);
        ++steps;
        accuracy = m.policy_accuracy;
        mae = m.value_mae;
        if (accuracy == 1.0 && mae < 0.1) break;
    }
    check(out, accuracy == 1.0, "final batch accuracy " + std::to_string(accuracy));
    check(out, mae < 0.1, "final value MAE " + std::to_string(mae));
    if (out.pass) {
        std::ostringstream d;
        d << "100% accuracy, MAE " << mae << " after " << steps << " steps";
        out.detail = d.str();
    }
    return out;
}

// 8. Search solves verified mate-in-1 fixtures and conserves visits.
Outcome criterion_search() {
    Outcome out{true, ""};
    UniformEvaluator uniform;
    auto fens = testutil::mate_in_one_fens();
    check(out, fens.size() >= 20, "need at least 20 fixtures");

    std::function<bool(const SearchNode&)> conserved = [&](const SearchNode& node) -> bool {
        if (!node.expanded()) return true;
        int total = 0;
        for (const Edge& e : node.edges()) {
            total += e.visit_count;
            if (e.child && !conserved(*e.child)) return false;
        }
        return node.visit_count() == total;
    };

    int solved = 0;
    for (const std::string& fen : fens) {
        GameState s = parse_fen(fen);
        auto winning = testutil::unique_winning_move(s);
        if (!check(out, winning.has_value(), "fixture is not a unique mate-in-1: " + fen))
            continue;
        SearchConfig config;
        config.simulations = 400;
        config.temperature = 0.0;
        config.dirichlet_epsilon = 0.0;
        Search search_obj(s, uniform, config);
        SearchResult result = search_obj.run();
        check(out, search_obj.root().visit_count() == 400, "N(root) != simulations");
        check(out, conserved(search_obj.root()), "visit conservation violated");
        ActionIndex want = encode_action(*winning);
        bool hit = false;
        for (const auto& [action, p] : result.pi)
            if (p == 1.0 && action == want) hit = true;
        if (hit) ++solved;
    }
    double rate = static_cast<double>(solved) / static_cast<double>(fens.size());
    check(out, rate >= 0.95, "solve rate " + std::to_string(rate));
    if (out.pass) {
        std::ostringstream d;
        d << solved << "/" << fens.size() << " mates found";
        out.detail = d.str();
    }
    return out;
}

// 9. Self-play games replay legally; z-signs alternate; runs are bitwise
// deterministic.
Outcome criterion_selfplay() {
    Outcome out{true, ""};
    UniformEvaluator uniform;
    SelfPlayConfig config;
    config.search.simulations = 16;
    config.move_cap = 120;
    config.games = 50;
    config.rng_seed = 404;

    std::vector<SelfPlayGame> games = generate_games(uniform, config);
    int decisive = 0;
    for (const SelfPlayGame& game : games) {
        CloningResult replay = cloning_examples(game.record);  // throws if illegal
        if (!check(out, replay.examples.size() == game.record.moves.size(), "replay length"))
            break;
        bool draw = !game.final_status.winner().has_value();
        if (!draw) ++decisive;
        for (std::size_t t = 0; t < game.examples.size(); ++t) {
            double z = game.examples[t].z;
            if (draw) {
                if (!check(out, z == 0.0, "draw example with nonzero z")) break;
            } else {
                if (!check(out, z == 1.0 || z == -1.0, "decisive z not in {-1,1}")) break;
                if (t > 0 &&
                    !check(out, game.examples[t - 1].z == -z, "z signs fail to alternate"))
                    break;
            }
        }
    }

    // Determinism: regenerate a prefix and compare byte-for-byte.
    SelfPlayConfig again = config;
    again.games = 5;
    std::vector<SelfPlayGame> rerun = generate_games(uniform, again);
    for (int g = 0; g < 5; ++g) {
        std::string a = emit_game_record(games[g].record);
        std::string b = emit_game_record(rerun[g].record);
        if (!check(out, a == b, "rerun diverged on game " + std::to_string(g))) break;
        for (std::size_t t = 0; t < rerun[g].examples.size(); ++t) {
            if (!check(out,
                       example_to_json(rerun[g].examples[t]) ==
                           example_to_json(games[g].examples[t]),
                       "rerun example diverged"))
                break;
        }
    }
    if (out.pass) {
        std::ostringstream d;
        d << games.size() << " games, " << decisive << " decisive, deterministic rerun";
        out.detail = d.str();
    }
    return out;
}

// 10. Material evaluator scores >= 50% match points vs uniform.
Outcome criterion_strength() {
    Outcome out{true, ""};
    MaterialEvaluator material;
    UniformEvaluator uniform;
    SelfPlayConfig config;
    config.search.simulations = 100;
    config.search.dirichlet_epsilon = 0.1;  // light noise: varied games, little blunder tax
    config.move_cap = 200;
    config.rng_seed = 7;
    MatchReport report = evaluate_match(material, uniform, 10, config);
    double points = report.wins + 0.5 * report.draws;
    check(out, report.wins + report.losses + report.draws == 10, "match games not conserved");
    check(out, points >= 5.0, "material scored " + std::to_string(points) + "/10");
    std::ostringstream d;
    d << report.wins << "W/" << report.losses << "L/" << report.draws
      << "D, points " << points << "/10";
    if (out.pass) out.detail = d.str();
    else out.detail += " (" + d.str() + ")";
    return out;
}

// 11. Corpus stats exact on the fixture corpus; export round-trip stable.
Outcome criterion_corpus() {
    Outcome out{true, ""};
    std::vector<std::string> paths = {std::string(XQ_FIXTURE_DIR) + "/games_ok.pgn"};
    CorpusStats stats = scan_corpus(paths);
    check(out, stats.games == 3, "games != 3");
    check(out, stats.total_moves == 12, "moves != 12");
    check(out, stats.red_wins == 1 && stats.black_wins == 1 && stats.draws == 1,
          "result tally wrong");
    check(out,
          stats.red_wins + stats.black_wins + stats.draws + stats.unknown_results == stats.games,
          "result conservation violated");

    std::string out_a = "acceptance_export_a.jsonl";
    std::string out_b = "acceptance_export_b.jsonl";
    std::uint64_t na = export_training_set(paths, out_a);
    std::uint64_t nb = export_training_set(paths, out_b);
    check(out, na == 12 && nb == 12, "export example counts wrong");
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    check(out, slurp(out_a) == slurp(out_b), "exports not byte-identical");
    std::vector<TrainingExample> reloaded = load_training_set(out_a);
    check(out, reloaded.size() == 12, "reload count wrong");
    bool roundtrip = true;
    for (const TrainingExample& e : reloaded)
        if (example_to_json(example_from_json(example_to_json(e))) != example_to_json(e))
            roundtrip = false;
    check(out, roundtrip, "example round-trip unstable");
    for (const std::string& p : {out_a, out_b}) {
        std::remove(p.c_str());
        std::remove((p + ".manifest.json").c_str());
    }
    if (out.pass) out.detail = "stats exact, conservation holds, export byte-stable";
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "move generator matches the naive oracle", 60, criterion_movegen},
        {2, "perft anchors and oracle agreement", 30, criterion_perft},
        {3, "action/plane encoding invariants", 0, criterion_encoding},
        {4, "FEN and ICCS round-trips", 0, criterion_notation},
        {5, "gradient check vs finite differences", 10, criterion_gradcheck},
        {6, "loss anchors", 0, criterion_loss_anchors},
        {7, "overfit-a-batch trainability", 120, criterion_overfit},
        {8, "mate-in-1 search with conservation", 120, criterion_search},
        {9, "self-play legality, outcomes, determinism", 0, criterion_selfplay},
        {10, "material beats uniform at match points", 300, criterion_strength},
        {11, "corpus stats and export stability", 0, criterion_corpus},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        auto t0 = Clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
            out.pass = false;
            out.detail += " [over time budget]";
        }
        std::printf("[%2d] %s  %-45s %s (%.2fs)\n", c.id, out.pass ? "PASS" : "FAIL", c.name,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
