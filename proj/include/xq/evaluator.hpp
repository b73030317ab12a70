#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xq/encoding.hpp"
#include "xq/rules.hpp"

namespace xq {

struct Evaluation {
    PolicyVector policy;  // length kPolicySize, non-negative, sums to 1 (pre-masking)
    double value = 0.0;   // [-1, 1] from the side-to-move perspective
};

// Read-only position evaluation; implementations must be safe to share
// across concurrent searches.
class Evaluator {
  public:
    virtual ~Evaluator() = default;
    virtual Evaluation evaluate(const GameState& state) const = 0;
};

Evaluation evaluate_uniform(const GameState& state);
Evaluation evaluate_material(const GameState& state);

class UniformEvaluator final : public Evaluator {
  public:
    Evaluation evaluate(const GameState& state) const override { return evaluate_uniform(state); }
};

// Deterministic mid-strength baseline: tanh-squashed material balance plus a
// capture-favoring uniform policy.
class MaterialEvaluator final : public Evaluator {
  public:
    Evaluation evaluate(const GameState& state) const override { return evaluate_material(state); }
};

// One (position, target, outcome) training triple. Exactly one of
// target_action (behavior cloning) and target_policy (search policy) is set.
struct TrainingExample {
    std::string fen;
    Color side = Color::Red;
    PlaneTensor planes;
    std::optional<ActionIndex> target_action;
    std::vector<std::pair<ActionIndex, double>> target_policy;  // sparse, sums to 1
    double z = 0.0;

    bool has_policy_target() const { return !target_policy.empty(); }
};

TrainingExample make_cloning_example(const GameState& state, Move move, double z);
TrainingExample make_selfplay_example(const GameState& state,
                                      std::vector<std::pair<ActionIndex, double>> pi, double z);

struct ModelConfig {
    // Input size followed by hidden layer sizes; ReLU between layers.
    std::vector<int> backbone = {kPlaneInputSize, 256, 256};
    int value_hidden = 64;
    int policy_out = kPolicySize;
    bool operator==(const ModelConfig&) const = default;
};

// Dense dual-head network. All parameters live in one flat vector, laid out
// as: per backbone layer W (out x in, column-major) then b; policy head W, b;
// value hidden W, b; value output W, b. See docs/FORMATS.md.
struct ModelParams {
    ModelConfig config;
    Eigen::VectorXd flat;

    static ModelParams init(const ModelConfig& config, std::uint64_t seed);
    static ModelParams zeros(const ModelConfig& config);
    std::size_t param_count() const { return static_cast<std::size_t>(flat.size()); }

    Eigen::Map<const Eigen::MatrixXd> backbone_w(int layer) const;
    Eigen::Map<const Eigen::VectorXd> backbone_b(int layer) const;
    Eigen::Map<const Eigen::MatrixXd> policy_w() const;
    Eigen::Map<const Eigen::VectorXd> policy_b() const;
    Eigen::Map<const Eigen::MatrixXd> value1_w() const;
    Eigen::Map<const Eigen::VectorXd> value1_b() const;
    Eigen::Map<const Eigen::MatrixXd> value2_w() const;
    Eigen::Map<const Eigen::VectorXd> value2_b() const;
};

std::size_t param_count_for(const ModelConfig& config);

// Flat gradient, same layout as ModelParams::flat.
using Gradients = Eigen::VectorXd;

// Pre- and post-activation values retained by a forward pass for the exact
// backward pass. Rows index batch entries.
struct ActivationCache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // backbone pre-activations
    std::vector<Eigen::MatrixXd> act;   // backbone ReLU outputs
    Eigen::MatrixXd policy_logits;
    Eigen::MatrixXd policy;             // softmax rows
    Eigen::MatrixXd value_pre;
    Eigen::MatrixXd value_act;
    Eigen::VectorXd value_raw;          // pre-tanh
    Eigen::VectorXd value;              // tanh output
};

// Batched core: X rows are flattened inputs. Throws ShapeMismatchError.
void model_forward_batch(const ModelParams& params, const Eigen::MatrixXd& X,
                         ActivationCache& cache);

std::pair<Evaluation, ActivationCache> model_forward(const ModelParams& params,
                                                     const PlaneTensor& planes);

struct LossBreakdown {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double total = 0.0;
};

LossBreakdown loss(const Evaluation& eval, const TrainingExample& example);

// Exact analytic gradient of loss(forward(params, x), example), averaged over
// the batch rows. `examples` must match the cache's batch size.
Gradients model_backward_batch(const ModelParams& params, const ActivationCache& cache,
                               std::span<const TrainingExample> examples);

Gradients model_backward(const ModelParams& params, const ActivationCache& cache,
                         const TrainingExample& example);

struct AdamState {
    std::int64_t t = 0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const ModelParams& params, double lr = 1e-3, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8);
};

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state);

struct EpochMetrics {
    LossBreakdown mean_loss;
    double policy_accuracy = 0.0;  // masked argmax == target action
    double value_mae = 0.0;
    int examples = 0;
};

// One pass over `examples` in minibatches, averaging gradients per batch.
// Metrics reflect the forward pass of each batch before its update. Pass a
// generator to shuffle example order. Throws EmptyDatasetError.
EpochMetrics train_epoch(ModelParams& params, AdamState& opt,
                         std::span<const TrainingExample> examples, int batch_size,
                         std::mt19937_64* shuffle_rng = nullptr);

// Versioned binary checkpoint; round-trips bit-identically. Layout in
// docs/FORMATS.md.
void save_model(const ModelParams& params, std::uint64_t seed, const std::string& path);

struct LoadedModel {
    ModelParams params;
    std::uint64_t seed = 0;
};
LoadedModel load_model(const std::string& path);

class ModelEvaluator final : public Evaluator {
  public:
    explicit ModelEvaluator(ModelParams params) : params_(std::move(params)) {}
    Evaluation evaluate(const GameState& state) const override;
    const ModelParams& params() const { return params_; }

  private:
    ModelParams params_;
};

}  // namespace xq
