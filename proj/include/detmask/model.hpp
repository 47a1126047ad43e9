#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detmask/masking.hpp"
#include "detmask/vocab.hpp"

namespace detmask {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d = 32;        // embedding width
  std::size_t hidden = 64;   // feed-forward width
  std::size_t max_len = 64;
  std::uint64_t seed = 0;
  double lambda_con = 1.0;
  double lambda_cls = 1.0;

  void validate() const;
};

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size() const;
};

// All parameters live in one flat vector; `layout` names the slices.
// Row-major matrices. Groups: tok_emb [V,d], pos_emb [L,d], ln1_g/ln1_b [d],
// wq/wk/wv/wo [d,d], ln2_g/ln2_b [d],
// w1 [d,h], b1 [h], w2 [h,d], b2 [d], lnf_g/lnf_b [d], lm_bias [V], cls_w [d,3].
// Layer norms are pre-norm around attention and feed-forward plus one final
// norm before the LM head and classifier.
struct ModelState {
  ModelConfig config;
  std::vector<TensorInfo> layout;
  std::vector<double> params;

  const TensorInfo& tensor(std::string_view name) const;
  std::span<double> view(std::string_view name);
  std::span<const double> view(std::string_view name) const;
};

std::vector<TensorInfo> parameter_layout(const ModelConfig& config);

// N(0, 0.02^2) weights, zero biases, bitwise reproducible from config.seed.
ModelState init(const ModelConfig& config);
// Same layout with every parameter zero.
ModelState zero_state(const ModelConfig& config);

struct ForwardOutput {
  std::size_t length = 0;
  std::size_t d = 0;
  std::size_t vocab = 0;
  std::vector<double> embeddings;     // [length, d]
  std::vector<double> probabilities;  // [length, vocab]

  std::span<const double> embedding(std::size_t pos) const {
    return {embeddings.data() + pos * d, d};
  }
  std::span<const double> distribution(std::size_t pos) const {
    return {probabilities.data() + pos * vocab, vocab};
  }
};

// Pad tokens are never attended to. Throws SequenceTooLong.
ForwardOutput forward(const ModelState& state, std::span<const TokenId> tokens);

// Mean probability of the target tokens at the given positions.
double avg_truth_prob(const ForwardOutput& output,
                      std::span<const std::size_t> positions,
                      std::span<const TokenId> targets);

// One training unit. Baseline schemes fill `keep` only; the auxiliary
// objectives read `drop` and `random` built from the same tokenized sample,
// in which case keep's mask positions are the object positions.
struct TrainingExample {
  MaskedSample keep;
  std::optional<MaskedSample> drop;
  std::optional<MaskedSample> random;
};

struct LossBreakdown {
  double mlm = 0.0;
  double con = 0.0;
  double cls = 0.0;
  double total = 0.0;      // mlm + lambda_con * con + lambda_cls * cls
  double objective = 0.0;  // the weighted sum that was differentiated
};

// Weights applied to (mlm, con, cls) when differentiating.
struct LossWeights {
  double mlm = 1.0;
  double con = 0.0;
  double cls = 0.0;
};
LossWeights total_weights(const ModelConfig& config);

// Batch-mean losses. When `grad` is non-null it receives d(objective)/d(params)
// with the same layout as state.params. Examples are processed with up to
// `threads` OpenMP threads; per-example gradients are reduced in example
// order, so the result does not depend on the thread count.
LossBreakdown loss_and_grad(const ModelState& state,
                            std::span<const TrainingExample> batch,
                            const LossWeights& weights,
                            std::vector<double>* grad, int threads = 1);

// Losses of a single (keep, drop, random) triple.
LossBreakdown losses(const ModelState& state, const MaskedSample& keep,
                     const MaskedSample& drop, const MaskedSample& random);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_tensor;
};

// Compares analytic partials against (L(p+eps) - L(p-eps)) / 2eps on a
// seeded sample of at least `min_coordinates` coordinates that covers every
// tensor. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult finite_diff_check(const ModelState& state,
                                  std::span<const TrainingExample> batch,
                                  const LossWeights& weights, double eps = 1e-5,
                                  std::size_t min_coordinates = 240,
                                  std::uint64_t seed = 0);

struct TrainOptions {
  long steps = 1;
  double lr = 0.1;
  std::size_t batch_size = 16;
  int threads = 1;
  std::function<void(long step, const LossBreakdown&)> on_step;
};

// Plain gradient descent over seeded mini-batches. Throws NonFiniteLoss.
ModelState train(const ModelConfig& config, std::span<const TrainingExample> data,
                 const TrainOptions& options);
// Continues from an existing state.
void train_in_place(ModelState& state, std::span<const TrainingExample> data,
                    const TrainOptions& options);

// Argmax per mask position over non-sentinel tokens; ties go to the lowest id.
std::vector<TokenId> predict_fill(const ModelState& state,
                                  std::span<const TokenId> tokens);

// Three-way classifier posterior for the embedding at `pos`.
std::vector<double> classify(const ModelState& state, const ForwardOutput& output,
                             std::size_t pos);

}  // namespace detmask
