#include "xq/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "xq/errors.hpp"
#include "xq/notation.hpp"

namespace xq {

namespace {

constexpr double kLogClamp = 1e-12;

struct Slice {
    Eigen::Index w_off = 0, rows = 0, cols = 0, b_off = 0;
    Eigen::Index end() const { return b_off + rows; }
};

struct Layout {
    std::vector<Slice> backbone;
    Slice policy, value1, value2;
    Eigen::Index total = 0;
};

Layout layout_for(const ModelConfig& c) {
    if (c.backbone.size() < 2) throw ShapeMismatchError("backbone needs an input and one layer");
    for (int n : c.backbone)
        if (n <= 0) throw ShapeMismatchError("backbone layer sizes must be positive");
    if (c.value_hidden <= 0 || c.policy_out <= 0)
        throw ShapeMismatchError("head sizes must be positive");

    Layout l;
    Eigen::Index off = 0;
    auto slice = [&off](int rows, int cols) {
        Slice s{off, rows, cols, off + static_cast<Eigen::Index>(rows) * cols};
        off = s.end();
        return s;
    };
    for (std::size_t i = 0; i + 1 < c.backbone.size(); ++i)
        l.backbone.push_back(slice(c.backbone[i + 1], c.backbone[i]));
    l.policy = slice(c.policy_out, c.backbone.back());
    l.value1 = slice(c.value_hidden, c.backbone.back());
    l.value2 = slice(1, c.value_hidden);
    l.total = off;
    return l;
}

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutMat = Eigen::Map<Eigen::MatrixXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

ConstMat map_w(const Eigen::VectorXd& flat, const Slice& s) {
    return {flat.data() + s.w_off, s.rows, s.cols};
}
ConstVec map_b(const Eigen::VectorXd& flat, const Slice& s) {
    return {flat.data() + s.b_off, s.rows};
}
MutMat map_w(Eigen::VectorXd& flat, const Slice& s) {
    return {flat.data() + s.w_off, s.rows, s.cols};
}
MutVec map_b(Eigen::VectorXd& flat, const Slice& s) {
    return {flat.data() + s.b_off, s.rows};
}

void softmax_rows(Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        double mx = m.row(r).maxCoeff();
        m.row(r) = (m.row(r).array() - mx).exp();
        m.row(r) /= m.row(r).sum();
    }
}

// Target distribution over policy outputs for one example.
void fill_target_row(Eigen::MatrixXd& t, Eigen::Index row, const TrainingExample& e) {
    if (e.has_policy_target()) {
        for (const auto& [a, p] : e.target_policy) {
            if (a < 0 || a >= t.cols())
                throw ShapeMismatchError("policy target index out of range");
            t(row, a) = p;
        }
    } else if (e.target_action) {
        if (*e.target_action < 0 || *e.target_action >= t.cols())
            throw ShapeMismatchError("target action out of range");
        t(row, *e.target_action) = 1.0;
    } else {
        throw ShapeMismatchError("training example has no target");
    }
}

ActionIndex reference_action(const TrainingExample& e) {
    if (e.target_action) return *e.target_action;
    ActionIndex best = -1;
    double best_p = -1.0;
    for (const auto& [a, p] : e.target_policy)
        if (p > best_p || (p == best_p && a < best)) {
            best = a;
            best_p = p;
        }
    return best;
}

}  // namespace

Evaluation evaluate_uniform(const GameState&) {
    return {PolicyVector(kPolicySize, 1.0 / kPolicySize), 0.0};
}

Evaluation evaluate_material(const GameState& state) {
    auto weight = [](PieceKind kind, Color color, int rank) {
        switch (kind) {
            case PieceKind::Rook: return 9.0;
            case PieceKind::Cannon: return 4.5;
            case PieceKind::Horse: return 4.0;
            case PieceKind::Advisor:
            case PieceKind::Elephant: return 2.0;
            case PieceKind::Soldier: return across_river(color, rank) ? 2.0 : 1.0;
            case PieceKind::General: return 0.0;
        }
        return 0.0;
    };
    double balance = 0.0;  // Red minus Black
    for (int i = 0; i < kNumSquares; ++i) {
        Square sq = Square::from_index(i);
        auto p = state.piece_at(sq);
        if (!p) continue;
        double w = weight(p->kind, p->color, sq.rank);
        balance += p->color == Color::Red ? w : -w;
    }
    double value = std::tanh(balance / 12.0);
    if (state.side_to_move() == Color::Black) value = -value;

    PolicyVector policy(kPolicySize, 0.0);
    double total = 0.0;
    for (Move m : legal_moves(state)) {
        double w = state.piece_at(m.to) ? 2.0 : 1.0;  // prefer captures
        policy[encode_action(m)] = w;
        total += w;
    }
    if (total > 0.0)
        for (double& p : policy) p /= total;
    else
        policy.assign(kPolicySize, 1.0 / kPolicySize);
    return {std::move(policy), value};
}

TrainingExample make_cloning_example(const GameState& state, Move move, double z) {
    TrainingExample e;
    e.fen = emit_fen(state);
    e.side = state.side_to_move();
    e.planes = encode_state(state);
    e.target_action = encode_action(move);
    e.z = z;
    return e;
}

TrainingExample make_selfplay_example(const GameState& state,
                                      std::vector<std::pair<ActionIndex, double>> pi, double z) {
    TrainingExample e;
    e.fen = emit_fen(state);
    e.side = state.side_to_move();
    e.planes = encode_state(state);
    e.target_policy = std::move(pi);
    e.z = z;
    return e;
}

std::size_t param_count_for(const ModelConfig& config) {
    return static_cast<std::size_t>(layout_for(config).total);
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    ModelParams p;
    p.config = config;
    p.flat = Eigen::VectorXd::Zero(layout_for(config).total);
    return p;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    ModelParams p = zeros(config);
    Layout l = layout_for(config);
    std::mt19937_64 rng(seed);
    auto fill = [&](const Slice& s) {
        double bound = std::sqrt(1.0 / static_cast<double>(s.cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = s.w_off; i < s.b_off; ++i) p.flat[i] = dist(rng);
        // biases start at zero
    };
    for (const Slice& s : l.backbone) fill(s);
    fill(l.policy);
    fill(l.value1);
    fill(l.value2);
    return p;
}

Eigen::Map<const Eigen::MatrixXd> ModelParams::backbone_w(int layer) const {
    return map_w(flat, layout_for(config).backbone.at(layer));
}
Eigen::Map<const Eigen::VectorXd> ModelParams::backbone_b(int layer) const {
    return map_b(flat, layout_for(config).backbone.at(layer));
}
Eigen::Map<const Eigen::MatrixXd> ModelParams::policy_w() const {
    return map_w(flat, layout_for(config).policy);
}
Eigen::Map<const Eigen::VectorXd> ModelParams::policy_b() const {
    return map_b(flat, layout_for(config).policy);
}
Eigen::Map<const Eigen::MatrixXd> ModelParams::value1_w() const {
    return map_w(flat, layout_for(config).value1);
}
Eigen::Map<const Eigen::VectorXd> ModelParams::value1_b() const {
    return map_b(flat, layout_for(config).value1);
}
Eigen::Map<const Eigen::MatrixXd> ModelParams::value2_w() const {
    return map_w(flat, layout_for(config).value2);
}
Eigen::Map<const Eigen::VectorXd> ModelParams::value2_b() const {
    return map_b(flat, layout_for(config).value2);
}

void model_forward_batch(const ModelParams& params, const Eigen::MatrixXd& X,
                         ActivationCache& cache) {
    Layout l = layout_for(params.config);
    if (params.flat.size() != l.total)
        throw ShapeMismatchError("parameter vector does not match the configuration");
    if (X.cols() != params.config.backbone.front())
        throw ShapeMismatchError("input has " + std::to_string(X.cols()) + " columns, expected " +
                                 std::to_string(params.config.backbone.front()));

    cache.input = X;
    cache.pre.clear();
    cache.act.clear();
    const Eigen::MatrixXd* a = &cache.input;
    for (const Slice& s : l.backbone) {
        Eigen::MatrixXd z = (*a) * map_w(params.flat, s).transpose();
        z.rowwise() += map_b(params.flat, s).transpose();
        cache.pre.push_back(z);
        cache.act.push_back(z.cwiseMax(0.0));
        a = &cache.act.back();
    }

    cache.policy_logits = (*a) * map_w(params.flat, l.policy).transpose();
    cache.policy_logits.rowwise() += map_b(params.flat, l.policy).transpose();
    cache.policy = cache.policy_logits;
    softmax_rows(cache.policy);

    cache.value_pre = (*a) * map_w(params.flat, l.value1).transpose();
    cache.value_pre.rowwise() += map_b(params.flat, l.value1).transpose();
    cache.value_act = cache.value_pre.cwiseMax(0.0);
    cache.value_raw =
        (cache.value_act * map_w(params.flat, l.value2).transpose()).col(0).array() +
        map_b(params.flat, l.value2)(0);
    cache.value = cache.value_raw.array().tanh();
}

std::pair<Evaluation, ActivationCache> model_forward(const ModelParams& params,
                                                     const PlaneTensor& planes) {
    std::vector<double> x = planes.flatten();
    Eigen::MatrixXd X(1, x.size());
    for (std::size_t i = 0; i < x.size(); ++i) X(0, i) = x[i];
    ActivationCache cache;
    model_forward_batch(params, X, cache);
    Evaluation eval;
    eval.policy.resize(params.config.policy_out);
    for (int i = 0; i < params.config.policy_out; ++i) eval.policy[i] = cache.policy(0, i);
    eval.value = cache.value(0);
    return {std::move(eval), std::move(cache)};
}

LossBreakdown loss(const Evaluation& eval, const TrainingExample& example) {
    LossBreakdown out;
    if (example.has_policy_target()) {
        for (const auto& [a, p] : example.target_policy) {
            if (a < 0 || static_cast<std::size_t>(a) >= eval.policy.size())
                throw ShapeMismatchError("policy target index out of range");
            if (p > 0.0) out.policy_loss -= p * std::log(std::max(eval.policy[a], kLogClamp));
        }
    } else if (example.target_action) {
        if (*example.target_action < 0 ||
            static_cast<std::size_t>(*example.target_action) >= eval.policy.size())
            throw ShapeMismatchError("target action out of range");
        out.policy_loss = -std::log(std::max(eval.policy[*example.target_action], kLogClamp));
    } else {
        throw ShapeMismatchError("training example has no target");
    }
    double d = eval.value - example.z;
    out.value_loss = d * d;
    out.total = out.policy_loss + out.value_loss;
    return out;
}

Gradients model_backward_batch(const ModelParams& params, const ActivationCache& cache,
                               std::span<const TrainingExample> examples) {
    Layout l = layout_for(params.config);
    const Eigen::Index batch = cache.policy.rows();
    if (static_cast<Eigen::Index>(examples.size()) != batch)
        throw ShapeMismatchError("examples do not match the cached batch");

    Eigen::VectorXd flat_grads = Eigen::VectorXd::Zero(l.total);
    const double inv_b = 1.0 / static_cast<double>(batch);

    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(batch, params.config.policy_out);
    Eigen::VectorXd z(batch);
    for (Eigen::Index r = 0; r < batch; ++r) {
        fill_target_row(targets, r, examples[r]);
        z(r) = examples[r].z;
    }

    const Eigen::MatrixXd& a_last = l.backbone.empty() ? cache.input : cache.act.back();

    // Policy head: d(CE)/dlogits = softmax - target.
    Eigen::MatrixXd dlogits = (cache.policy - targets) * inv_b;
    map_w(flat_grads, l.policy).noalias() = dlogits.transpose() * a_last;
    map_b(flat_grads, l.policy) = dlogits.colwise().sum().transpose();
    Eigen::MatrixXd d_hidden = dlogits * map_w(params.flat, l.policy);

    // Value head: d(MSE)/dv = 2(v - z); dv/du = 1 - tanh(u)^2.
    Eigen::VectorXd du = 2.0 * inv_b *
                         ((cache.value - z).array() * (1.0 - cache.value.array().square()));
    map_w(flat_grads, l.value2).noalias() = du.transpose() * cache.value_act;
    map_b(flat_grads, l.value2)(0) = du.sum();
    Eigen::MatrixXd d_value_act = du * map_w(params.flat, l.value2);
    Eigen::MatrixXd d_value_pre =
        d_value_act.cwiseProduct((cache.value_pre.array() > 0.0).cast<double>().matrix());
    map_w(flat_grads, l.value1).noalias() = d_value_pre.transpose() * a_last;
    map_b(flat_grads, l.value1) = d_value_pre.colwise().sum().transpose();
    d_hidden.noalias() += d_value_pre * map_w(params.flat, l.value1);

    for (int i = static_cast<int>(l.backbone.size()) - 1; i >= 0; --i) {
        Eigen::MatrixXd dz =
            d_hidden.cwiseProduct((cache.pre[i].array() > 0.0).cast<double>().matrix());
        const Eigen::MatrixXd& a_prev = i == 0 ? cache.input : cache.act[i - 1];
        map_w(flat_grads, l.backbone[i]).noalias() = dz.transpose() * a_prev;
        map_b(flat_grads, l.backbone[i]) = dz.colwise().sum().transpose();
        if (i > 0) d_hidden = dz * map_w(params.flat, l.backbone[i]);
    }
    return flat_grads;
}

Gradients model_backward(const ModelParams& params, const ActivationCache& cache,
                         const TrainingExample& example) {
    return model_backward_batch(params, cache, std::span<const TrainingExample>(&example, 1));
}

AdamState AdamState::init(const ModelParams& params, double lr, double beta1, double beta2,
                          double eps) {
    AdamState s;
    s.m = Eigen::VectorXd::Zero(params.flat.size());
    s.v = Eigen::VectorXd::Zero(params.flat.size());
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state) {
    if (grads.size() != params.flat.size() || state.m.size() != params.flat.size())
        throw ShapeMismatchError("optimizer state does not match the parameters");
    state.t += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v.array() + (1.0 - state.beta2) * grads.array().square();
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    params.flat.array() -=
        state.lr * (state.m.array() / bias1) / ((state.v.array() / bias2).sqrt() + state.eps);
}

EpochMetrics train_epoch(ModelParams& params, AdamState& opt,
                         std::span<const TrainingExample> examples, int batch_size,
                         std::mt19937_64* shuffle_rng) {
    if (examples.empty()) throw EmptyDatasetError("no training examples");
    if (batch_size < 1) throw Error("batch size must be positive");

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (shuffle_rng) std::shuffle(order.begin(), order.end(), *shuffle_rng);

    EpochMetrics metrics;
    double sum_policy = 0.0, sum_value = 0.0, sum_mae = 0.0;
    int correct = 0;

    std::vector<TrainingExample> batch;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::size_t end = std::min(order.size(), start + batch_size);
        batch.clear();
        for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);

        Eigen::MatrixXd X(batch.size(), params.config.backbone.front());
        for (std::size_t r = 0; r < batch.size(); ++r) {
            std::vector<double> x = batch[r].planes.flatten();
            if (static_cast<Eigen::Index>(x.size()) != X.cols())
                throw ShapeMismatchError("example planes do not match the model input");
            for (std::size_t c = 0; c < x.size(); ++c) X(r, c) = x[c];
        }

        ActivationCache cache;
        model_forward_batch(params, X, cache);

        for (std::size_t r = 0; r < batch.size(); ++r) {
            Evaluation eval;
            eval.policy.resize(params.config.policy_out);
            for (int i = 0; i < params.config.policy_out; ++i)
                eval.policy[i] = cache.policy(r, i);
            eval.value = cache.value(r);
            LossBreakdown lb = loss(eval, batch[r]);
            sum_policy += lb.policy_loss;
            sum_value += lb.value_loss;
            sum_mae += std::abs(eval.value - batch[r].z);

            // Accuracy compares the masked argmax with the target action.
            LegalMask mask = legal_mask(parse_fen(batch[r].fen));
            ActionIndex best = -1;
            double best_p = -1.0;
            for (int i = 0; i < params.config.policy_out; ++i)
                if (i < kPolicySize && mask[i] && eval.policy[i] > best_p) {
                    best = i;
                    best_p = eval.policy[i];
                }
            if (best == reference_action(batch[r])) ++correct;
        }

        Gradients grads = model_backward_batch(params, cache, batch);
        adam_step(params, grads, opt);
    }

    const double n = static_cast<double>(examples.size());
    metrics.mean_loss.policy_loss = sum_policy / n;
    metrics.mean_loss.value_loss = sum_value / n;
    metrics.mean_loss.total = metrics.mean_loss.policy_loss + metrics.mean_loss.value_loss;
    metrics.policy_accuracy = correct / n;
    metrics.value_mae = sum_mae / n;
    metrics.examples = static_cast<int>(examples.size());
    return metrics;
}

namespace {

constexpr char kMagic[8] = {'X', 'Q', 'P', 'V', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}
void put_f64(std::ostream& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(out, v);
}
std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}
std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
double get_f64(std::istream& in) {
    std::uint64_t v = get_u64(in);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace

void save_model(const ModelParams& params, std::uint64_t seed, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(params.config.backbone.size()));
    for (int n : params.config.backbone) put_u32(out, static_cast<std::uint32_t>(n));
    put_u32(out, static_cast<std::uint32_t>(params.config.value_hidden));
    put_u32(out, static_cast<std::uint32_t>(params.config.policy_out));
    put_u64(out, seed);
    put_u64(out, params.param_count());
    for (Eigen::Index i = 0; i < params.flat.size(); ++i) put_f64(out, params.flat[i]);
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not a model checkpoint: " + path);
    if (get_u32(in) != kFormatVersion) throw IoError("unsupported checkpoint version");

    ModelConfig config;
    config.backbone.resize(get_u32(in));
    if (config.backbone.size() < 2 || config.backbone.size() > 64)
        throw IoError("corrupt checkpoint header");
    for (int& n : config.backbone) n = static_cast<int>(get_u32(in));
    config.value_hidden = static_cast<int>(get_u32(in));
    config.policy_out = static_cast<int>(get_u32(in));

    LoadedModel loaded;
    loaded.seed = get_u64(in);
    std::uint64_t count = get_u64(in);
    if (!in || count != param_count_for(config)) throw IoError("checkpoint parameter count mismatch");
    loaded.params = ModelParams::zeros(config);
    for (std::uint64_t i = 0; i < count; ++i) loaded.params.flat[i] = get_f64(in);
    if (!in) throw IoError("truncated checkpoint: " + path);
    return loaded;
}

Evaluation ModelEvaluator::evaluate(const GameState& state) const {
    if (params_.config.backbone.front() != kPlaneInputSize ||
        params_.config.policy_out != kPolicySize)
        throw ShapeMismatchError("model shape cannot evaluate board positions");
    return model_forward(params_, encode_state(state)).first;
}

}  // namespace xq
