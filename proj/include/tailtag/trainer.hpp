// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_TRAINER_HPP_
#define TAILTAG_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tailtag/corpus.hpp"
#include "tailtag/featurize.hpp"
#include "tailtag/losses.hpp"
#include "tailtag/sampling.hpp"

namespace tailtag {

struct ModelMeta {
  std::uint64_t label_hash = 0;
  std::uint64_t feature_hash = 0;
  std::uint64_t config_fingerprint = 0;

  bool operator==(const ModelMeta&) const = default;
};

/// Linear multi-label scorer z = W x + b. W is C x F, row-major.
struct Model {
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  ModelMeta meta;

  std::span<double> row(std::size_t label) {
    return {weights.data() + label * num_features, num_features};
  }
  std::span<const double> row(std::size_t label) const {
    return {weights.data() + label * num_features, num_features};
  }
};

/// W ~ U[-1/sqrt(F), 1/sqrt(F)] from the seed; b = bias, or zeros if empty.
Model init_model(std::size_t num_classes, std::size_t num_features,
                 std::uint64_t seed, std::span<const double> bias = {});

/// All-zero parameters; every logit is 0.
Model zero_model(std::size_t num_classes, std::size_t num_features);

/// Exact sparse product. Throws DataError for feature indices >= F.
std::vector<double> forward(const Model& model, const SparseVec& x);

struct OptimConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 30;
  std::size_t batch = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Default learning rate per loss family: 1e-2 for db, 1e-3 otherwise.
double default_learning_rate(LossFamily family);

enum class SamplerMode {
  kAuto,        // class-aware for rbce and db, uniform otherwise
  kClassAware,  // epoch_plan each epoch
  kUniform,     // shuffled pass over all records each epoch
};

std::string_view to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(std::string_view name);
SamplerMode resolve_sampler_mode(SamplerMode mode, LossFamily family);

struct TrainConfig {
  LossConfig loss;
  OptimConfig optim;
  SamplerMode sampler = SamplerMode::kAuto;
  /// Uniform mode only: skip records whose topic set is empty.
  bool skip_empty = false;
};

/// Hash of every setting that influences the trained parameters.
std::uint64_t training_fingerprint(const TrainConfig& cfg,
                                   const LabelStats& stats,
                                   const SmoothingParams& smoothing);

struct TrainExample {
  const SparseVec* x = nullptr;
  std::span<const LabelId> topics;
  std::span<const double> rhat;  // may be empty for families without weights
};

struct BatchGradient {
  double loss = 0.0;  // mean over the batch
  std::vector<double> weights;
  std::vector<double> bias;
};

/// Mean loss of the batch and its raw gradient with respect to W and b.
BatchGradient batch_gradient(const Model& model,
                             std::span<const TrainExample> batch,
                             const LossConfig& loss);

/// Decoupled weight decay Adam. Decay applies to W only; the bias holds the
/// class thresholds and is left undecayed.
class AdamW {
 public:
  AdamW(const Model& model, const OptimConfig& cfg);

  void step(Model& model, const BatchGradient& grad);
  std::int64_t steps() const { return step_; }

 private:
  OptimConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<double> m_w_, v_w_, m_b_, v_b_;
};

struct TrainResult {
  Model model;
  std::vector<double> epoch_loss;
};

/// Trains from `model`. loss.nu must be sized C for ntbce and db. Throws
/// NumericalError on a non-finite loss.
TrainResult train(Model model, const Corpus& corpus,
                  std::span<const SparseVec> features, const LabelStats& stats,
                  const InstanceWeights& weights, const TrainConfig& cfg);

/// Little-endian "LGN1" file: C, F, label hash, feature hash, config
/// fingerprint (u64 each), then W row-major and b as f64.
void save_checkpoint(const Model& model, const std::filesystem::path& path);

struct CheckpointGuard {
  std::optional<std::uint64_t> label_hash;
  std::optional<std::uint64_t> feature_hash;
};

/// Throws DataError on a short or malformed file, or when a guard hash
/// differs from the stored one.
Model load_checkpoint(const std::filesystem::path& path,
                      const CheckpointGuard& guard = {});

}  // namespace tailtag

#endif  // TAILTAG_TRAINER_HPP_
