#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xq/evaluator.hpp"
#include "xq/mcts.hpp"
#include "xq/notation.hpp"
#include "xq/rules.hpp"

namespace xq {

struct SelfPlayConfig {
    SearchConfig search;
    int greedy_after = 12;  // tau = 1 before this ply, tau = 0 from it on
    int move_cap = kDefaultMoveCap;
    int games = 1;
    std::uint64_t rng_seed = 0;
    int jobs = 1;
    std::optional<std::string> start_fen;
};

struct SelfPlayGame {
    GameRecord record;
    std::vector<TrainingExample> examples;  // one per ply, outcomes assigned
    GameStatus final_status;
};

// One full self-play game: per ply a search, an example (state, pi,
// placeholder), and a move sampled from pi at the scheduled temperature.
// Outcomes are filled in before returning.
SelfPlayGame play_game(const Evaluator& evaluator, const SelfPlayConfig& config,
                       std::mt19937_64& rng);

// z for the example at ply t is the Red outcome (+1/-1/0) when Red was to
// move at t, negated otherwise.
void assign_outcomes(std::vector<TrainingExample>& examples, GameStatus final_status);

// config.games games with disjoint per-game seed streams, generated with up
// to config.jobs games in flight. Output order is by game index regardless
// of job count.
std::vector<SelfPlayGame> generate_games(const Evaluator& evaluator,
                                         const SelfPlayConfig& config);

struct CloningResult {
    std::vector<TrainingExample> examples;
    bool unknown_result = false;  // record had result '*'; z defaulted to 0
};

// Replays a record and emits one behavior-cloning example per ply. Throws
// IllegalRecordMoveError at the first non-replayable ply.
CloningResult cloning_examples(const GameRecord& record);

// Bounded FIFO store of training examples.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(TrainingExample example) {
        items_.push_back(std::move(example));
        while (items_.size() > capacity_) items_.pop_front();
    }
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::vector<TrainingExample> snapshot() const { return {items_.begin(), items_.end()}; }

  private:
    std::size_t capacity_;
    std::deque<TrainingExample> items_;
};

struct IterationConfig {
    SelfPlayConfig selfplay;
    int epochs = 1;
    int batch_size = 32;
};

struct IterationReport {
    int games = 0;
    double avg_length = 0.0;  // plies
    double avg_reward = 0.0;  // Red's mean outcome
    std::vector<EpochMetrics> epochs;
    std::vector<SelfPlayGame> game_log;
};

// Generates games with the current model, pushes their examples into the
// buffer, then trains for the configured number of epochs over the buffer.
IterationReport run_iteration(ModelParams& params, AdamState& opt, ReplayBuffer& buffer,
                              const IterationConfig& config);

struct MatchReport {
    int wins = 0;    // from A's perspective
    int losses = 0;
    int draws = 0;
    double avg_length = 0.0;
};

// A plays Red in even-indexed games; both sides pick moves greedily
// (tau = 0) from their own searches.
MatchReport evaluate_match(const Evaluator& a, const Evaluator& b, int games,
                           const SelfPlayConfig& config);

}  // namespace xq
