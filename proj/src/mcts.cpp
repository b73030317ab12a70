#include "xq/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xq/errors.hpp"

namespace xq {

double ucb_score(double q, double prior, int parent_visits, int edge_visits, double c) {
    return q + c * prior * std::sqrt(static_cast<double>(parent_visits)) /
                   (1.0 + static_cast<double>(edge_visits));
}

std::size_t select_edge(std::span<const Edge> edges, int parent_visits, double c) {
    if (edges.empty()) throw NoChildrenError("node has no edges to select");
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        double score = ucb_score(edges[i].mean_value, edges[i].prior, parent_visits,
                                 edges[i].visit_count, c);
        bool better = score > best_score;
        if (score == best_score) {
            better = edges[i].prior > edges[best].prior ||
                     (edges[i].prior == edges[best].prior && edges[i].action < edges[best].action);
        }
        if (better) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

double expand_and_evaluate(SearchNode& node, const Evaluator& evaluator, int move_cap) {
    GameStatus st = status(node.state_, move_cap);
    if (st.terminal()) {
        node.terminal_ = true;
        if (auto winner = st.winner())
            node.terminal_value_ = *winner == node.state_.side_to_move() ? 1.0 : -1.0;
        else
            node.terminal_value_ = 0.0;
        return node.terminal_value_;
    }

    Evaluation eval = evaluator.evaluate(node.state_);
    PolicyVector priors = mask_and_normalize(eval.policy, legal_mask(node.state_));
    std::vector<Move> moves = legal_moves(node.state_);
    std::vector<Edge>& edges = node.edges_;
    edges.clear();
    edges.reserve(moves.size());
    for (Move m : moves) {
        Edge e;
        e.action = encode_action(m);
        e.move = m;
        e.prior = priors[e.action];
        edges.push_back(std::move(e));
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.action < b.action; });
    node.expanded_ = true;
    return eval.value;
}

void backpropagate(std::span<const std::pair<SearchNode*, std::size_t>> path, double leaf_value) {
    double value = -leaf_value;  // chooser of the leafmost edge is the leaf's opponent
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        SearchNode* node = it->first;
        Edge& edge = node->edges_[it->second];
        edge.visit_count += 1;
        edge.total_value += value;
        edge.mean_value = edge.total_value / edge.visit_count;
        node->visit_count_ += 1;
        value = -value;
    }
}

void add_root_noise(SearchNode& node, double epsilon, double alpha, std::mt19937_64& rng) {
    if (epsilon <= 0.0 || node.edges().empty()) return;
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> noise(node.edges().size());
    double total = 0.0;
    for (double& n : noise) {
        n = gamma(rng);
        total += n;
    }
    if (total <= 0.0) return;
    for (std::size_t i = 0; i < noise.size(); ++i) {
        Edge& e = node.edges()[i];
        e.prior = (1.0 - epsilon) * e.prior + epsilon * noise[i] / total;
    }
}

std::vector<std::pair<ActionIndex, double>> policy_from_visits(const SearchNode& node, double tau) {
    const auto& edges = node.edges();
    long total = 0;
    for (const Edge& e : edges) total += e.visit_count;
    if (total <= 0) throw NoVisitsError("no visits to derive a policy from");

    std::vector<std::pair<ActionIndex, double>> pi;
    pi.reserve(edges.size());
    if (tau <= 0.0) {
        const Edge* best = nullptr;
        for (const Edge& e : edges)
            if (!best || e.visit_count > best->visit_count ||
                (e.visit_count == best->visit_count && e.action < best->action))
                best = &e;
        for (const Edge& e : edges) pi.emplace_back(e.action, &e == best ? 1.0 : 0.0);
        return pi;
    }

    // Normalize by the max count so N^(1/tau) cannot overflow for small tau.
    int max_n = 0;
    for (const Edge& e : edges) max_n = std::max(max_n, e.visit_count);
    double sum = 0.0;
    std::vector<double> weights(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        weights[i] = edges[i].visit_count == 0
                         ? 0.0
                         : std::pow(static_cast<double>(edges[i].visit_count) / max_n, 1.0 / tau);
        sum += weights[i];
    }
    for (std::size_t i = 0; i < edges.size(); ++i)
        pi.emplace_back(edges[i].action, weights[i] / sum);
    return pi;
}

Search::Search(GameState root_state, const Evaluator& evaluator, SearchConfig config)
    : root_(std::make_unique<SearchNode>(std::move(root_state))),
      evaluator_(evaluator),
      config_(config),
      rng_(config.rng_seed) {}

SearchResult Search::run() {
    if (status(root_->state(), config_.move_cap).terminal())
        throw TerminalRootError("search called on a terminal position");

    // The root expansion does not count as a simulation.
    expand_and_evaluate(*root_, evaluator_, config_.move_cap);
    add_root_noise(*root_, config_.dirichlet_epsilon, config_.dirichlet_alpha, rng_);

    std::vector<std::pair<SearchNode*, std::size_t>> path;
    for (int sim = 0; sim < config_.simulations; ++sim) {
        path.clear();
        SearchNode* node = root_.get();
        while (node->expanded() && !node->terminal()) {
            std::size_t idx = select_child(*node, config_.c_puct);
            path.emplace_back(node, idx);
            Edge& edge = node->edges()[idx];
            if (!edge.child)
                edge.child = std::make_unique<SearchNode>(apply_move(node->state(), edge.move));
            node = edge.child.get();
        }
        double v = node->terminal() ? node->terminal_value()
                                    : expand_and_evaluate(*node, evaluator_, config_.move_cap);
        backpropagate(path, v);
    }

    SearchResult result;
    result.pi = policy_from_visits(*root_, config_.temperature);
    long total = 0;
    double weighted_q = 0.0;
    for (const Edge& e : root_->edges()) {
        result.visit_counts.emplace_back(e.action, e.visit_count);
        total += e.visit_count;
        weighted_q += e.visit_count * e.mean_value;
    }
    result.root_value = total > 0 ? weighted_q / total : 0.0;

    const SearchNode* node = root_.get();
    while (node && node->expanded() && !node->edges().empty()) {
        const Edge* best = nullptr;
        for (const Edge& e : node->edges())
            if (!best || e.visit_count > best->visit_count ||
                (e.visit_count == best->visit_count && e.action < best->action))
                best = &e;
        if (!best || best->visit_count == 0) break;
        result.principal_variation.push_back(best->move);
        node = best->child.get();
    }
    return result;
}

SearchResult search(const GameState& state, const Evaluator& evaluator,
                    const SearchConfig& config) {
    Search s(state, evaluator, config);
    return s.run();
}

}  // namespace xq
