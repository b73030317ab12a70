#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "xq/encoding.hpp"
#include "xq/evaluator.hpp"
#include "xq/rules.hpp"

namespace xq {

struct SearchConfig {
    int simulations = 100;
    double c_puct = 1.5;
    double dirichlet_epsilon = 0.25;
    double dirichlet_alpha = 0.3;
    double temperature = 1.0;
    std::uint64_t rng_seed = 0;
    int move_cap = kDefaultMoveCap;  // terminal adjudication inside the tree
};

class SearchNode;

// Per-action edge statistics. Q is the mean value from the perspective of
// the player choosing at the parent node.
struct Edge {
    ActionIndex action = 0;
    Move move;
    double prior = 0.0;
    int visit_count = 0;
    double total_value = 0.0;
    double mean_value = 0.0;
    std::unique_ptr<SearchNode> child;
};

class SearchNode {
  public:
    explicit SearchNode(GameState state) : state_(std::move(state)) {}

    const GameState& state() const { return state_; }
    bool expanded() const { return expanded_; }
    bool terminal() const { return terminal_; }
    double terminal_value() const { return terminal_value_; }
    int visit_count() const { return visit_count_; }

    std::vector<Edge>& edges() { return edges_; }
    const std::vector<Edge>& edges() const { return edges_; }

    friend double expand_and_evaluate(SearchNode& node, const Evaluator& evaluator, int move_cap);
    friend void backpropagate(std::span<const std::pair<SearchNode*, std::size_t>> path,
                              double leaf_value);

  private:
    GameState state_;
    std::vector<Edge> edges_;
    bool expanded_ = false;
    bool terminal_ = false;
    double terminal_value_ = 0.0;
    int visit_count_ = 0;
};

// Q(s,a) + c * P(s,a) * sqrt(N(s)) / (1 + N(s,a)).
double ucb_score(double q, double prior, int parent_visits, int edge_visits, double c);

// Index of the edge maximizing the UCB; ties broken by higher prior, then
// lower action index. Throws NoChildrenError on an empty edge list.
std::size_t select_edge(std::span<const Edge> edges, int parent_visits, double c);

inline std::size_t select_child(const SearchNode& node, double c) {
    return select_edge(node.edges(), node.visit_count(), c);
}

// Expands a non-terminal node: one evaluator call, one edge per legal move
// with masked-renormalized priors. Terminal nodes get no edges and return the
// exact outcome from the side-to-move perspective. Returns the leaf value
// from the side-to-move perspective.
double expand_and_evaluate(SearchNode& node, const Evaluator& evaluator,
                           int move_cap = kDefaultMoveCap);

// Walks root->leaf path entries (node, edge index), adding one visit per edge
// and the leaf value with alternating sign: the edge into the leaf receives
// the value from its chooser's perspective, i.e. -leaf_value.
void backpropagate(std::span<const std::pair<SearchNode*, std::size_t>> path, double leaf_value);

// P'(s,a) = (1 - epsilon) * P(s,a) + epsilon * d_a with d ~ Dirichlet(alpha).
void add_root_noise(SearchNode& node, double epsilon, double alpha, std::mt19937_64& rng);

// pi(a) = N(s,a)^(1/tau), normalized; tau = 0 is the one-hot argmax (ties to
// the lowest action index). Throws NoVisitsError when nothing was visited.
std::vector<std::pair<ActionIndex, double>> policy_from_visits(const SearchNode& node, double tau);

struct SearchResult {
    std::vector<std::pair<ActionIndex, double>> pi;           // sorted by action
    double root_value = 0.0;                                  // visit-weighted mean Q
    std::vector<std::pair<ActionIndex, int>> visit_counts;    // sorted by action
    std::vector<Move> principal_variation;
};

// Owns one tree; run() executes the configured number of simulations.
class Search {
  public:
    Search(GameState root_state, const Evaluator& evaluator, SearchConfig config);

    SearchResult run();
    const SearchNode& root() const { return *root_; }

  private:
    std::unique_ptr<SearchNode> root_;
    const Evaluator& evaluator_;
    SearchConfig config_;
    std::mt19937_64 rng_;
};

// Throws TerminalRootError on terminal positions.
SearchResult search(const GameState& state, const Evaluator& evaluator,
                    const SearchConfig& config);

}  // namespace xq
