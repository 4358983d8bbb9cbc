// SPDX-License-Identifier: Apache-2.0
#include "tailtag/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace tailtag {

namespace {

constexpr char kCheckpointMagic[4] = {'L', 'G', 'N', '1'};
constexpr std::size_t kHeaderBytes = 4 + 5 * 8;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Model init_model(std::size_t num_classes, std::size_t num_features,
                 std::uint64_t seed, std::span<const double> bias) {
  if (num_classes < 1 || num_features < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (!bias.empty() && bias.size() != num_classes) {
    throw DataError("initial bias has the wrong length");
  }
  Model model = zero_model(num_classes, num_features);
  const double scale = 1.0 / std::sqrt(static_cast<double>(num_features));
  Rng rng(seed);
  for (double& w : model.weights) w = scale * (2.0 * uniform_unit(rng) - 1.0);
  if (!bias.empty()) model.bias.assign(bias.begin(), bias.end());
  return model;
}

Model zero_model(std::size_t num_classes, std::size_t num_features) {
  Model model;
  model.num_classes = num_classes;
  model.num_features = num_features;
  model.weights.assign(num_classes * num_features, 0.0);
  model.bias.assign(num_classes, 0.0);
  return model;
}

std::vector<double> forward(const Model& model, const SparseVec& x) {
  std::vector<double> z(model.bias);
  for (std::size_t j = 0; j < x.nnz(); ++j) {
    if (x.indices[j] >= model.num_features) {
      throw DataError("feature index " + std::to_string(x.indices[j]) +
                      " out of range for F = " +
                      std::to_string(model.num_features));
    }
  }
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    const double* w = model.weights.data() + c * model.num_features;
    double acc = 0.0;
    for (std::size_t j = 0; j < x.nnz(); ++j) {
      acc += w[x.indices[j]] * x.values[j];
    }
    z[c] += acc;
  }
  return z;
}

void OptimConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr: must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay: must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1: must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2: must be in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps: must be > 0");
  if (epochs < 1) throw ConfigError("epochs: must be >= 1");
  if (batch < 1) throw ConfigError("batch: must be >= 1");
}

double default_learning_rate(LossFamily family) {
  return family == LossFamily::kDb ? 1e-2 : 1e-3;
}

std::string_view to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kAuto: return "auto";
    case SamplerMode::kClassAware: return "class_aware";
    case SamplerMode::kUniform: return "uniform";
  }
  return "unknown";
}

SamplerMode parse_sampler_mode(std::string_view name) {
  if (name == "auto") return SamplerMode::kAuto;
  if (name == "class_aware") return SamplerMode::kClassAware;
  if (name == "uniform") return SamplerMode::kUniform;
  throw ConfigError("sampler.mode: unknown mode '" + std::string(name) +
                    "' (expected auto, class_aware or uniform)");
}

SamplerMode resolve_sampler_mode(SamplerMode mode, LossFamily family) {
  if (mode != SamplerMode::kAuto) return mode;
  return family == LossFamily::kDb || family == LossFamily::kRebalancedBce
             ? SamplerMode::kClassAware
             : SamplerMode::kUniform;
}

std::uint64_t training_fingerprint(const TrainConfig& cfg,
                                   const LabelStats& stats,
                                   const SmoothingParams& smoothing) {
  Fnv1a h;
  h.update_field(to_string(cfg.loss.family));
  h.update_field(fmt_double(cfg.loss.lambda));
  h.update_field(fmt_double(cfg.loss.kappa));
  h.update_field(fmt_double(cfg.loss.focal_gamma));
  h.update_field(fmt_double(cfg.loss.focal_alpha));
  h.update_field(fmt_double(cfg.optim.lr));
  h.update_field(fmt_double(cfg.optim.weight_decay));
  h.update_field(fmt_double(cfg.optim.beta1));
  h.update_field(fmt_double(cfg.optim.beta2));
  h.update_field(fmt_double(cfg.optim.eps));
  h.update_field(std::to_string(cfg.optim.epochs));
  h.update_field(std::to_string(cfg.optim.batch));
  h.update_field(std::to_string(cfg.optim.seed));
  h.update_field(to_string(resolve_sampler_mode(cfg.sampler, cfg.loss.family)));
  h.update_field(cfg.skip_empty ? "skip_empty" : "keep_empty");
  h.update_field(stats.cap ? std::to_string(*stats.cap) : "nocap");
  h.update_field(fmt_double(smoothing.alpha));
  h.update_field(fmt_double(smoothing.beta));
  h.update_field(fmt_double(smoothing.mu));
  h.update_field(to_string(smoothing.negative_mode));
  return h.digest();
}

BatchGradient batch_gradient(const Model& model,
                             std::span<const TrainExample> batch,
                             const LossConfig& loss) {
  const std::size_t c = model.num_classes;
  BatchGradient out;
  out.weights.assign(model.weights.size(), 0.0);
  out.bias.assign(c, 0.0);
  if (batch.empty()) return out;

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> y(c);
  for (const auto& ex : batch) {
    const std::vector<double> z = forward(model, *ex.x);
    std::fill(y.begin(), y.end(), 0.0);
    for (LabelId id : ex.topics) y.at(id) = 1.0;
    const LossOutput lo = compute_loss(loss, z, y, ex.rhat);
    out.loss += lo.loss * inv_b;
    for (std::size_t k = 0; k < c; ++k) {
      const double g = lo.grad[k] * inv_b;
      if (g == 0.0) continue;
      out.bias[k] += g;
      double* gw = out.weights.data() + k * model.num_features;
      for (std::size_t j = 0; j < ex.x->nnz(); ++j) {
        gw[ex.x->indices[j]] += g * ex.x->values[j];
      }
    }
  }
  return out;
}

AdamW::AdamW(const Model& model, const OptimConfig& cfg)
    : cfg_(cfg),
      m_w_(model.weights.size(), 0.0),
      v_w_(model.weights.size(), 0.0),
      m_b_(model.bias.size(), 0.0),
      v_b_(model.bias.size(), 0.0) {}

void AdamW::step(Model& model, const BatchGradient& grad) {
  ++step_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = cfg_.lr;

  auto update = [&](std::vector<double>& params, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v,
                    double decay) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      params[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) + decay * params[i]);
    }
  };
  update(model.weights, grad.weights, m_w_, v_w_, cfg_.weight_decay);
  update(model.bias, grad.bias, m_b_, v_b_, 0.0);
}

TrainResult train(Model model, const Corpus& corpus,
                  std::span<const SparseVec> features, const LabelStats& stats,
                  const InstanceWeights& weights, const TrainConfig& cfg) {
  cfg.loss.validate();
  cfg.optim.validate();
  const std::size_t c = model.num_classes;
  if (features.size() != corpus.size() || weights.num_records() != corpus.size()) {
    throw DataError("train: corpus, features and weights differ in size");
  }
  if (corpus.vocab.size() != c || stats.num_classes() != c ||
      weights.num_classes() != c) {
    throw DataError("train: label dimension mismatch");
  }
  const bool uses_nu = cfg.loss.family == LossFamily::kNegTolerantBce ||
                       cfg.loss.family == LossFamily::kDb;
  if (uses_nu && cfg.loss.nu.size() != c) {
    throw ConfigError("nu: class bias must have one entry per label");
  }

  const SamplerMode mode = resolve_sampler_mode(cfg.sampler, cfg.loss.family);
  TrainResult result;
  AdamW optimizer(model, cfg.optim);

  std::vector<std::size_t> order;
  std::vector<TrainExample> batch;
  batch.reserve(cfg.optim.batch);

  for (std::size_t epoch = 0; epoch < cfg.optim.epochs; ++epoch) {
    const std::uint64_t epoch_seed = cfg.optim.seed + epoch;
    order.clear();
    if (mode == SamplerMode::kClassAware) {
      const EpochPlan plan = epoch_plan(stats, corpus, epoch_seed);
      order.reserve(plan.schedule.size());
      for (const auto& entry : plan.schedule) order.push_back(entry.record);
    } else {
      for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (cfg.skip_empty && corpus.records[r].topics.empty()) continue;
        order.push_back(r);
      }
      Rng rng(epoch_seed);
      shuffle(order, rng);
    }
    if (order.empty()) throw DataError("train: no training instances");

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.optim.batch) {
      const std::size_t end = std::min(order.size(), begin + cfg.optim.batch);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t r = order[i];
        batch.push_back({&features[r], corpus.records[r].topics, weights.rhat(r)});
      }
      const BatchGradient grad = batch_gradient(model, batch, cfg.loss);
      if (!std::isfinite(grad.loss)) {
        throw NumericalError(
            "non-finite loss at epoch " + std::to_string(epoch + 1) +
            ", step " + std::to_string(optimizer.steps() + 1) +
            ", first record '" + corpus.records[order[begin]].id + "'");
      }
      loss_sum += grad.loss * static_cast<double>(end - begin);
      optimizer.step(model, grad);
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  result.model = std::move(model);
  return result;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::string bytes;
  bytes.reserve(kHeaderBytes + 8 * (model.weights.size() + model.bias.size()));
  bytes.append(kCheckpointMagic, 4);
  put_u64(bytes, model.num_classes);
  put_u64(bytes, model.num_features);
  put_u64(bytes, model.meta.label_hash);
  put_u64(bytes, model.meta.feature_hash);
  put_u64(bytes, model.meta.config_fingerprint);
  for (double w : model.weights) put_u64(bytes, std::bit_cast<std::uint64_t>(w));
  for (double b : model.bias) put_u64(bytes, std::bit_cast<std::uint64_t>(b));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path,
                      const CheckpointGuard& guard) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

  if (bytes.size() < kHeaderBytes ||
      std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError(path.string() + ": not a checkpoint (bad magic or header)");
  }
  Model model;
  model.num_classes = get_u64(p + 4);
  model.num_features = get_u64(p + 12);
  model.meta.label_hash = get_u64(p + 20);
  model.meta.feature_hash = get_u64(p + 28);
  model.meta.config_fingerprint = get_u64(p + 36);

  const std::uint64_t c = model.num_classes;
  const std::uint64_t f = model.num_features;
  if (c == 0 || f == 0 || c > (1ULL << 32) || f > (1ULL << 32) ||
      bytes.size() != kHeaderBytes + 8 * (c * f + c)) {
    throw DataError(path.string() + ": checkpoint is truncated or corrupt");
  }
  if (guard.label_hash && *guard.label_hash != model.meta.label_hash) {
    throw DataError(path.string() +
                    ": label vocabulary hash does not match the checkpoint");
  }
  if (guard.feature_hash && *guard.feature_hash != model.meta.feature_hash) {
    throw DataError(path.string() +
                    ": feature vocabulary hash does not match the checkpoint");
  }

  model.weights.resize(c * f);
  model.bias.resize(c);
  const unsigned char* cursor = p + kHeaderBytes;
  for (double& w : model.weights) {
    w = std::bit_cast<double>(get_u64(cursor));
    cursor += 8;
  }
  for (double& b : model.bias) {
    b = std::bit_cast<double>(get_u64(cursor));
    cursor += 8;
  }
  return model;
}

}  // namespace tailtag
