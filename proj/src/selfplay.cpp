#include "xq/selfplay.hpp"

#include <algorithm>
#include <thread>

#include "xq/errors.hpp"

namespace xq {

namespace {

// Disjoint deterministic stream per game index.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Move sample_from_pi(const std::vector<std::pair<ActionIndex, double>>& pi,
                    std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double u = dist(rng);
    double cum = 0.0;
    const std::pair<ActionIndex, double>* last_positive = nullptr;
    for (const auto& entry : pi) {
        if (entry.second <= 0.0) continue;
        last_positive = &entry;
        cum += entry.second;
        if (u < cum) return decode_action(entry.first);
    }
    if (last_positive) return decode_action(last_positive->first);
    throw NoLegalActionError("search policy has no positive entry");
}

GameResult result_from_status(GameStatus st) {
    if (auto winner = st.winner())
        return *winner == Color::Red ? GameResult::RedWin : GameResult::BlackWin;
    return st.terminal() ? GameResult::Draw : GameResult::Unknown;
}

const char* reason_name(TerminalReason r) {
    switch (r) {
        case TerminalReason::Checkmate: return "Checkmate";
        case TerminalReason::Stalemate: return "Stalemate";
        case TerminalReason::Repetition: return "Repetition";
        case TerminalReason::MoveCap: return "MoveCap";
        case TerminalReason::PerpetualCheck: return "PerpetualCheck";
    }
    return "Unknown";
}

double red_outcome(GameStatus st) {
    if (auto winner = st.winner()) return *winner == Color::Red ? 1.0 : -1.0;
    return 0.0;
}

}  // namespace

SelfPlayGame play_game(const Evaluator& evaluator, const SelfPlayConfig& config,
                       std::mt19937_64& rng) {
    GameState state = config.start_fen ? parse_fen(*config.start_fen) : initial_position();
    SelfPlayGame game;

    while (true) {
        GameStatus st = status(state, config.move_cap);
        if (st.terminal()) {
            game.final_status = st;
            break;
        }
        SearchConfig sc = config.search;
        sc.move_cap = config.move_cap;
        sc.temperature = state.ply() < config.greedy_after ? 1.0 : 0.0;
        sc.rng_seed = rng();
        SearchResult result = search(state, evaluator, sc);

        std::vector<std::pair<ActionIndex, double>> pi;
        for (const auto& entry : result.pi)
            if (entry.second > 0.0) pi.push_back(entry);
        game.examples.push_back(make_selfplay_example(state, pi, 0.0));

        Move move = sample_from_pi(result.pi, rng);
        game.record.moves.push_back(move);
        state = apply_move(state, move);
    }

    assign_outcomes(game.examples, game.final_status);
    if (config.start_fen) game.record.tags.emplace_back("FEN", *config.start_fen);
    game.record.tags.emplace_back("Format", "ICCS");
    game.record.result = result_from_status(game.final_status);
    game.record.tags.emplace_back("Result", result_token(game.record.result));
    game.record.tags.emplace_back("Termination", reason_name(game.final_status.reason));
    return game;
}

void assign_outcomes(std::vector<TrainingExample>& examples, GameStatus final_status) {
    double z_red = red_outcome(final_status);
    for (TrainingExample& e : examples) e.z = e.side == Color::Red ? z_red : -z_red;
}

CloningResult cloning_examples(const GameRecord& record) {
    CloningResult result;
    GameState state = record.start_state();
    double z_red = 0.0;
    switch (record.result) {
        case GameResult::RedWin: z_red = 1.0; break;
        case GameResult::BlackWin: z_red = -1.0; break;
        case GameResult::Draw: z_red = 0.0; break;
        case GameResult::Unknown:
            z_red = 0.0;
            result.unknown_result = true;
            break;
    }
    for (std::size_t ply = 0; ply < record.moves.size(); ++ply) {
        Move m = record.moves[ply];
        if (!is_legal_move(state, m))
            throw IllegalRecordMoveError(
                "record move " + emit_iccs_move(m) + " is illegal", static_cast<int>(ply));
        double z = state.side_to_move() == Color::Red ? z_red : -z_red;
        result.examples.push_back(make_cloning_example(state, m, z));
        state = apply_move(state, m);
    }
    return result;
}

std::vector<SelfPlayGame> generate_games(const Evaluator& evaluator,
                                         const SelfPlayConfig& config) {
    const int n_games = std::max(0, config.games);
    std::vector<SelfPlayGame> games(n_games);
    const int jobs = std::max(1, config.jobs);
    auto worker = [&](int first) {
        for (int g = first; g < n_games; g += jobs) {
            std::mt19937_64 rng(mix_seed(config.rng_seed, g));
            games[g] = play_game(evaluator, config, rng);
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int j = 0; j < jobs && j < std::max(1, n_games); ++j)
            threads.emplace_back(worker, j);
        for (auto& t : threads) t.join();
    }
    return games;
}

IterationReport run_iteration(ModelParams& params, AdamState& opt, ReplayBuffer& buffer,
                              const IterationConfig& config) {
    IterationReport report;
    const int n_games = config.selfplay.games;
    if (n_games <= 0) return report;

    ModelEvaluator evaluator(params);
    std::vector<SelfPlayGame> games = generate_games(evaluator, config.selfplay);

    double total_plies = 0.0;
    double total_reward = 0.0;
    for (SelfPlayGame& g : games) {
        total_plies += static_cast<double>(g.record.moves.size());
        total_reward += red_outcome(g.final_status);
        for (TrainingExample& e : g.examples) buffer.push(std::move(e));
        g.examples.clear();
    }
    report.games = n_games;
    report.avg_length = total_plies / n_games;
    report.avg_reward = total_reward / n_games;
    report.game_log = std::move(games);

    if (buffer.size() > 0 && config.epochs > 0) {
        std::vector<TrainingExample> snapshot = buffer.snapshot();
        std::mt19937_64 shuffle_rng(mix_seed(config.selfplay.rng_seed, 0x7261696e));
        for (int e = 0; e < config.epochs; ++e)
            report.epochs.push_back(
                train_epoch(params, opt, snapshot, config.batch_size, &shuffle_rng));
    }
    return report;
}

MatchReport evaluate_match(const Evaluator& a, const Evaluator& b, int games,
                           const SelfPlayConfig& config) {
    MatchReport report;
    double total_plies = 0.0;
    for (int g = 0; g < games; ++g) {
        const Evaluator* red = g % 2 == 0 ? &a : &b;
        const Evaluator* black = g % 2 == 0 ? &b : &a;
        std::mt19937_64 rng(mix_seed(config.rng_seed, g));
        GameState state = config.start_fen ? parse_fen(*config.start_fen) : initial_position();
        GameStatus st = status(state, config.move_cap);
        while (!st.terminal()) {
            SearchConfig sc = config.search;
            sc.move_cap = config.move_cap;
            sc.temperature = 0.0;
            sc.rng_seed = rng();
            const Evaluator* mover = state.side_to_move() == Color::Red ? red : black;
            SearchResult result = search(state, *mover, sc);
            state = apply_move(state, sample_from_pi(result.pi, rng));
            st = status(state, config.move_cap);
        }
        total_plies += static_cast<double>(state.ply());
        if (auto winner = st.winner()) {
            bool a_is_red = g % 2 == 0;
            bool a_won = (*winner == Color::Red) == a_is_red;
            if (a_won)
                ++report.wins;
            else
                ++report.losses;
        } else {
            ++report.draws;
        }
    }
    report.avg_length = games > 0 ? total_plies / games : 0.0;
    return report;
}

}  // namespace xq
