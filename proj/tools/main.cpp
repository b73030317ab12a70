#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xq/corpus.hpp"
#include "xq/encoding.hpp"
#include "xq/errors.hpp"
#include "xq/evaluator.hpp"
#include "xq/mcts.hpp"
#include "xq/notation.hpp"
#include "xq/rules.hpp"
#include "xq/selfplay.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

xq::IccsRankBase rank_base_from_flag(const std::string& value) {
    if (value == "0-9") return xq::IccsRankBase::Zero;
    if (value == "1-10") return xq::IccsRankBase::One;
    throw CLI::ValidationError("--iccs-ranks", "must be 0-9 or 1-10");
}

xq::GameState state_from_fen_flag(const std::string& fen) {
    return fen.empty() ? xq::initial_position() : xq::parse_fen(fen);
}

std::unique_ptr<xq::Evaluator> make_evaluator(const std::string& spec) {
    if (spec.empty() || spec == "uniform") return std::make_unique<xq::UniformEvaluator>();
    if (spec == "material") return std::make_unique<xq::MaterialEvaluator>();
    return std::make_unique<xq::ModelEvaluator>(xq::load_model(spec).params);
}

void print_epoch_line(int epoch, int total, const xq::EpochMetrics& m) {
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(4);
    line << "Epoch " << epoch << "/" << total << ", Loss: " << m.mean_loss.total
         << ", Policy Loss: " << m.mean_loss.policy_loss
         << ", Value Loss: " << m.mean_loss.value_loss
         << ", Policy Accuracy: " << m.policy_accuracy << ", Value MAE: " << m.value_mae;
    std::cerr << line.str() << "\n";
}

ordered_json epoch_json(int epoch, const xq::EpochMetrics& m) {
    ordered_json j;
    j["epoch"] = epoch;
    j["loss"] = m.mean_loss.total;
    j["policy_loss"] = m.mean_loss.policy_loss;
    j["value_loss"] = m.mean_loss.value_loss;
    j["policy_accuracy"] = m.policy_accuracy;
    j["value_mae"] = m.value_mae;
    j["examples"] = m.examples;
    return j;
}

struct TrainFlags {
    std::string layers = "256,256";
    int epochs = 5;
    int batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

xq::ModelConfig config_from_layers(const std::string& layers) {
    xq::ModelConfig config;
    config.backbone = {xq::kPlaneInputSize};
    std::stringstream ss(layers);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int n = std::stoi(item);
        if (n <= 0) throw xq::Error("layer sizes must be positive");
        config.backbone.push_back(n);
    }
    if (config.backbone.size() < 2) throw xq::Error("at least one hidden layer is required");
    return config;
}

void train_and_save(std::vector<xq::TrainingExample> examples, const TrainFlags& flags,
                    const std::optional<std::string>& model_in, const std::string& model_out) {
    if (examples.empty()) throw xq::EmptyDatasetError("no training examples");
    xq::ModelParams params = model_in ? xq::load_model(*model_in).params
                                      : xq::ModelParams::init(config_from_layers(flags.layers),
                                                              flags.seed);
    xq::AdamState opt = xq::AdamState::init(params, flags.lr);
    std::mt19937_64 shuffle_rng(flags.seed);
    for (int e = 1; e <= flags.epochs; ++e) {
        xq::EpochMetrics m =
            xq::train_epoch(params, opt, examples, flags.batch_size, &shuffle_rng);
        print_epoch_line(e, flags.epochs, m);
        std::cout << epoch_json(e, m).dump() << "\n";
    }
    xq::save_model(params, flags.seed, model_out);
    std::cerr << "saved model to " << model_out << "\n";
}

int cmd_perft(const std::string& fen, int depth) {
    xq::GameState state = state_from_fen_flag(fen);
    auto start = std::chrono::steady_clock::now();
    std::uint64_t total = 0;
    for (xq::Move m : xq::legal_moves(state)) {
        std::uint64_t count = xq::perft(xq::apply_move(state, m), depth - 1);
        total += count;
        ordered_json j;
        j["move"] = xq::emit_iccs_move(m);
        j["count"] = count;
        std::cout << j.dump() << "\n";
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    ordered_json j;
    j["depth"] = depth;
    j["total"] = total;
    std::cout << j.dump() << "\n";
    std::cerr << "perft(" << depth << ") = " << total << " in " << elapsed.count() << "s\n";
    return kExitOk;
}

int cmd_show(const std::string& fen) {
    xq::GameState state = state_from_fen_flag(fen);
    std::cout << xq::render_board(state);
    std::cerr << (state.side_to_move() == xq::Color::Red ? "Red" : "Black") << " to move\n";
    return kExitOk;
}

int cmd_stats(const std::vector<std::string>& files, const std::string& ranks) {
    xq::CorpusStats stats = xq::scan_corpus(files, rank_base_from_flag(ranks));
    ordered_json j;
    j["games"] = stats.games;
    j["total_moves"] = stats.total_moves;
    j["red_wins"] = stats.red_wins;
    j["black_wins"] = stats.black_wins;
    j["draws"] = stats.draws;
    j["unknown_results"] = stats.unknown_results;
    j["parse_errors"] = stats.parse_errors;
    std::cout << j.dump() << "\n";
    std::cerr << "games " << stats.games << ", moves " << stats.total_moves << ", red wins "
              << stats.red_wins << ", black wins " << stats.black_wins << ", draws "
              << stats.draws << ", unknown " << stats.unknown_results << ", parse errors "
              << stats.parse_errors << "\n";
    for (const auto& e : stats.first_errors)
        std::cerr << "  " << e.file << ": record " << e.record_index << " (line " << e.line
                  << "): " << e.message << "\n";
    return kExitOk;
}

int cmd_selfplay(const std::string& model, const xq::SelfPlayConfig& config,
                 const std::string& out_dir) {
    std::unique_ptr<xq::Evaluator> evaluator = make_evaluator(model);
    fs::create_directories(out_dir);

    std::vector<xq::SelfPlayGame> games = xq::generate_games(*evaluator, config);
    std::vector<xq::TrainingExample> all_examples;
    double total_plies = 0.0;
    double total_reward = 0.0;
    for (std::size_t g = 0; g < games.size(); ++g) {
        char name[32];
        std::snprintf(name, sizeof(name), "game_%04zu.pgn", g);
        std::ofstream rec(fs::path(out_dir) / name, std::ios::binary);
        if (!rec) throw xq::IoError("cannot write game record");
        rec << xq::emit_game_record(games[g].record);
        total_plies += static_cast<double>(games[g].record.moves.size());
        if (auto winner = games[g].final_status.winner())
            total_reward += *winner == xq::Color::Red ? 1.0 : -1.0;
        for (auto& e : games[g].examples) all_examples.push_back(std::move(e));
    }
    xq::save_training_set((fs::path(out_dir) / "examples.jsonl").string(), all_examples);

    ordered_json j;
    j["games"] = games.size();
    j["avg_length"] = games.empty() ? 0.0 : total_plies / static_cast<double>(games.size());
    j["avg_reward"] = games.empty() ? 0.0 : total_reward / static_cast<double>(games.size());
    j["examples"] = all_examples.size();
    std::cout << j.dump() << "\n";
    std::cerr << "games " << games.size() << ", average game length " << j["avg_length"]
              << ", average reward " << j["avg_reward"] << "\n";
    return kExitOk;
}

int cmd_loop(const std::string& model_in, const std::string& model_out, int iterations,
             const xq::IterationConfig& base_config, std::size_t buffer_cap,
             const TrainFlags& flags) {
    xq::ModelParams params =
        model_in.empty() ? xq::ModelParams::init(config_from_layers(flags.layers), flags.seed)
                         : xq::load_model(model_in).params;
    xq::AdamState opt = xq::AdamState::init(params, flags.lr);
    xq::ReplayBuffer buffer(buffer_cap);

    for (int i = 1; i <= iterations; ++i) {
        xq::IterationConfig config = base_config;
        // disjoint seed stream per iteration
        config.selfplay.rng_seed = base_config.selfplay.rng_seed + 0x10001ULL * i;
        xq::IterationReport report = xq::run_iteration(params, opt, buffer, config);

        ordered_json j;
        j["iteration"] = i;
        j["games"] = report.games;
        j["avg_length"] = report.avg_length;
        j["avg_reward"] = report.avg_reward;
        j["buffer"] = buffer.size();
        ordered_json epochs = ordered_json::array();
        for (std::size_t e = 0; e < report.epochs.size(); ++e)
            epochs.push_back(epoch_json(static_cast<int>(e + 1), report.epochs[e]));
        j["epochs"] = std::move(epochs);
        std::cout << j.dump() << "\n";
        std::cerr << "iteration " << i << ": games " << report.games << ", average game length "
                  << report.avg_length << ", average reward " << report.avg_reward << "\n";
        for (std::size_t e = 0; e < report.epochs.size(); ++e)
            print_epoch_line(static_cast<int>(e + 1), static_cast<int>(report.epochs.size()),
                             report.epochs[e]);
    }
    xq::save_model(params, flags.seed, model_out);
    std::cerr << "saved model to " << model_out << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& a, const std::string& b, int games,
             const xq::SelfPlayConfig& config) {
    std::unique_ptr<xq::Evaluator> ea = make_evaluator(a);
    std::unique_ptr<xq::Evaluator> eb = make_evaluator(b);
    xq::MatchReport report = xq::evaluate_match(*ea, *eb, games, config);
    ordered_json j;
    j["games"] = games;
    j["wins"] = report.wins;
    j["losses"] = report.losses;
    j["draws"] = report.draws;
    j["avg_length"] = report.avg_length;
    std::cout << j.dump() << "\n";
    std::cerr << a << " vs " << b << ": " << report.wins << " wins, " << report.losses
              << " losses, " << report.draws << " draws, average game length "
              << report.avg_length << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Xiangqi engine and training pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file; flags take precedence");

    // perft
    std::string perft_fen;
    int perft_depth = 1;
    auto* perft = app.add_subcommand("perft", "count legal move sequences per move");
    perft->add_option("--fen", perft_fen, "start position (default: initial)");
    perft->add_option("--depth", perft_depth, "search depth")
        ->required()
        ->check(CLI::Range(1, 16));

    // show
    std::string show_fen;
    auto* show = app.add_subcommand("show", "render a position");
    show->add_option("fen", show_fen, "FEN to render (default: initial)");

    // stats
    std::vector<std::string> stats_files;
    std::string stats_ranks = "0-9";
    auto* stats = app.add_subcommand("stats", "scan game-record files");
    stats->add_option("files", stats_files, "record files")->required()->expected(-1);
    stats->add_option("--iccs-ranks", stats_ranks, "0-9 (default) or 1-10");

    // common search/selfplay flags
    auto add_search_flags = [](CLI::App* cmd, xq::SelfPlayConfig& cfg) {
        cmd->add_option("--sims", cfg.search.simulations, "simulations per move")
            ->check(CLI::Range(1, 1000000));
        cmd->add_option("--cpuct", cfg.search.c_puct, "exploration constant")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--dirichlet-eps", cfg.search.dirichlet_epsilon, "root noise weight")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--dirichlet-alpha", cfg.search.dirichlet_alpha, "root noise alpha")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--move-cap", cfg.move_cap, "draw adjudication ply cap")
            ->check(CLI::Range(1, 100000));
        cmd->add_option("--seed", cfg.rng_seed, "random seed");
        cmd->add_option("--fen", cfg.start_fen, "start position (default: initial)");
    };

    // selfplay
    std::string sp_model;
    std::string sp_out = "selfplay_out";
    xq::SelfPlayConfig sp_cfg;
    sp_cfg.search.simulations = 64;
    auto* selfplay = app.add_subcommand("selfplay", "generate self-play games and examples");
    selfplay->add_option("--model", sp_model, "model checkpoint (default: uniform evaluator)");
    selfplay->add_option("--games", sp_cfg.games, "number of games")->check(CLI::Range(1, 1000000));
    selfplay->add_option("--greedy-after", sp_cfg.greedy_after, "ply to switch to greedy play")
        ->check(CLI::Range(0, 100000));
    selfplay->add_option("--jobs", sp_cfg.jobs, "games generated concurrently")
        ->check(CLI::Range(1, 256));
    selfplay->add_option("--out", sp_out, "output directory");
    add_search_flags(selfplay, sp_cfg);

    // pretrain
    std::vector<std::string> pre_corpus;
    std::string pre_model_out = "model.ckpt";
    std::string pre_examples_out;
    std::string pre_ranks = "0-9";
    std::uint64_t pre_limit = 0;
    TrainFlags pre_flags;
    auto* pretrain = app.add_subcommand("pretrain", "behavior-clone a model from game records");
    pretrain->add_option("--corpus", pre_corpus, "record files")->required()->expected(-1);
    pretrain->add_option("--model-out", pre_model_out, "checkpoint to write");
    pretrain->add_option("--examples-out", pre_examples_out,
                         "where to write the exported examples (default: <model-out>.examples.jsonl)");
    pretrain->add_option("--limit", pre_limit, "cap on exported examples (0 = no cap)");
    pretrain->add_option("--iccs-ranks", pre_ranks, "0-9 (default) or 1-10");
    pretrain->add_option("--epochs", pre_flags.epochs, "training epochs")->check(CLI::Range(1, 100000));
    pretrain->add_option("--batch", pre_flags.batch_size, "batch size")->check(CLI::Range(1, 65536));
    pretrain->add_option("--lr", pre_flags.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    pretrain->add_option("--seed", pre_flags.seed, "random seed");
    pretrain->add_option("--layers", pre_flags.layers, "hidden layer sizes, comma separated");

    // train
    std::string train_data;
    std::string train_model_out = "model.ckpt";
    std::string train_model_in;
    TrainFlags train_flags;
    auto* train = app.add_subcommand("train", "train a model on an example file");
    train->add_option("--data", train_data, "examples JSONL file")->required();
    train->add_option("--model-out", train_model_out, "checkpoint to write");
    train->add_option("--model-in", train_model_in, "checkpoint to continue from");
    train->add_option("--epochs", train_flags.epochs, "training epochs")->check(CLI::Range(1, 100000));
    train->add_option("--batch", train_flags.batch_size, "batch size")->check(CLI::Range(1, 65536));
    train->add_option("--lr", train_flags.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    train->add_option("--seed", train_flags.seed, "random seed");
    train->add_option("--layers", train_flags.layers, "hidden layer sizes, comma separated");

    // loop
    std::string loop_model_in;
    std::string loop_model_out = "model.ckpt";
    int loop_iterations = 1;
    std::size_t loop_buffer_cap = 50000;
    xq::IterationConfig loop_cfg;
    loop_cfg.selfplay.games = 4;
    loop_cfg.selfplay.search.simulations = 64;
    TrainFlags loop_flags;
    auto* loop = app.add_subcommand("loop",
                                    "self-play / train iterations with a replay buffer");
    loop->add_option("--iterations", loop_iterations, "iterations to run")
        ->check(CLI::Range(1, 100000));
    loop->add_option("--games", loop_cfg.selfplay.games, "games per iteration")
        ->check(CLI::Range(1, 1000000));
    loop->add_option("--epochs", loop_cfg.epochs, "training epochs per iteration")
        ->check(CLI::Range(1, 100000));
    loop->add_option("--batch", loop_cfg.batch_size, "batch size")->check(CLI::Range(1, 65536));
    loop->add_option("--buffer-cap", loop_buffer_cap, "replay buffer capacity")
        ->check(CLI::Range(1, 100000000));
    loop->add_option("--greedy-after", loop_cfg.selfplay.greedy_after,
                     "ply to switch to greedy play")
        ->check(CLI::Range(0, 100000));
    loop->add_option("--jobs", loop_cfg.selfplay.jobs, "games generated concurrently")
        ->check(CLI::Range(1, 256));
    loop->add_option("--model-in", loop_model_in, "checkpoint to continue from");
    loop->add_option("--model-out", loop_model_out, "checkpoint to write");
    loop->add_option("--lr", loop_flags.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    loop->add_option("--layers", loop_flags.layers, "hidden layer sizes, comma separated");
    {
        // reuse the search flag set on the selfplay config inside
        auto& cfg = loop_cfg.selfplay;
        loop->add_option("--sims", cfg.search.simulations, "simulations per move")
            ->check(CLI::Range(1, 1000000));
        loop->add_option("--cpuct", cfg.search.c_puct, "exploration constant")
            ->check(CLI::PositiveNumber);
        loop->add_option("--dirichlet-eps", cfg.search.dirichlet_epsilon, "root noise weight")
            ->check(CLI::Range(0.0, 1.0));
        loop->add_option("--dirichlet-alpha", cfg.search.dirichlet_alpha, "root noise alpha")
            ->check(CLI::PositiveNumber);
        loop->add_option("--move-cap", cfg.move_cap, "draw adjudication ply cap")
            ->check(CLI::Range(1, 100000));
        loop->add_option("--seed", cfg.rng_seed, "random seed");
        loop->add_option("--fen", cfg.start_fen, "start position (default: initial)");
    }

    // eval
    std::string eval_a = "uniform";
    std::string eval_b = "material";
    int eval_games = 2;
    xq::SelfPlayConfig eval_cfg;
    eval_cfg.search.simulations = 64;
    auto* eval = app.add_subcommand("eval", "play a match between two evaluators");
    eval->add_option("--a", eval_a, "uniform | material | checkpoint path");
    eval->add_option("--b", eval_b, "uniform | material | checkpoint path");
    eval->add_option("--games", eval_games, "games to play")->check(CLI::Range(1, 100000));
    add_search_flags(eval, eval_cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (perft->parsed()) return cmd_perft(perft_fen, perft_depth);
        if (show->parsed()) return cmd_show(show_fen);
        if (stats->parsed()) return cmd_stats(stats_files, stats_ranks);
        if (selfplay->parsed()) return cmd_selfplay(sp_model, sp_cfg, sp_out);
        if (eval->parsed()) return cmd_eval(eval_a, eval_b, eval_games, eval_cfg);
        if (loop->parsed()) {
            loop_flags.seed = loop_cfg.selfplay.rng_seed;
            return cmd_loop(loop_model_in, loop_model_out, loop_iterations, loop_cfg,
                            loop_buffer_cap, loop_flags);
        }
        if (pretrain->parsed()) {
            xq::IccsRankBase base = rank_base_from_flag(pre_ranks);
            if (pre_examples_out.empty()) pre_examples_out = pre_model_out + ".examples.jsonl";
            xq::ValidationReport report = xq::validate_corpus(pre_corpus, base);
            std::cerr << "corpus: " << report.records << " records, legality rate "
                      << report.legality_rate() << "\n";
            for (const auto& issue : report.issues)
                std::cerr << "  skipping " << issue.file << " record " << issue.record_index
                          << ": " << issue.message << "\n";
            std::optional<std::uint64_t> limit;
            if (pre_limit > 0) limit = pre_limit;
            std::uint64_t n = xq::export_training_set(pre_corpus, pre_examples_out, limit, base);
            std::cerr << "exported " << n << " examples to " << pre_examples_out << "\n";
            train_and_save(xq::load_training_set(pre_examples_out), pre_flags, std::nullopt,
                           pre_model_out);
            return kExitOk;
        }
        if (train->parsed()) {
            std::optional<std::string> model_in;
            if (!train_model_in.empty()) model_in = train_model_in;
            train_and_save(xq::load_training_set(train_data), train_flags, model_in,
                           train_model_out);
            return kExitOk;
        }
    } catch (const xq::SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const xq::InvalidPositionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
