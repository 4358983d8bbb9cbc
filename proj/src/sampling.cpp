// SPDX-License-Identifier: Apache-2.0
#include "tailtag/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tailtag {

namespace {

void check_topics(const LabelStats& stats, std::span<const LabelId> topics) {
  for (LabelId id : topics) {
    if (id < 0 || static_cast<std::size_t>(id) >= stats.counts.size()) {
      throw DataError("label id " + std::to_string(id) + " out of range");
    }
    if (stats.counts[id] <= 0) {
      throw DataError("label " + std::to_string(id) +
                      " has zero training count");
    }
  }
}

}  // namespace

LabelStats make_label_stats(std::vector<std::int64_t> counts,
                            std::int64_t num_records,
                            std::optional<std::int64_t> cap) {
  if (cap && *cap < 1) throw ConfigError("sampler.cap: must be >= 1");
  for (std::int64_t n : counts) {
    if (n < 0) throw DataError("label counts must be non-negative");
  }
  LabelStats stats;
  const std::int64_t max_count =
      counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  stats.counts = std::move(counts);
  stats.num_records = num_records;
  stats.cap = cap;
  stats.visits_per_class = cap ? std::min(*cap, max_count) : max_count;
  return stats;
}

LabelStats make_label_stats(const Corpus& corpus,
                            std::optional<std::int64_t> cap) {
  return make_label_stats(label_counts(corpus),
                          static_cast<std::int64_t>(corpus.size()), cap);
}

EpochPlan epoch_plan(const LabelStats& stats, const Corpus& corpus,
                     std::uint64_t seed) {
  const std::size_t c = stats.num_classes();
  std::vector<std::vector<std::size_t>> positives(c);
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    for (LabelId id : corpus.records[r].topics) {
      positives.at(id).push_back(r);
    }
  }

  EpochPlan plan;
  plan.seed = seed;
  std::vector<LabelId> visits;
  for (std::size_t i = 0; i < c; ++i) {
    if (positives[i].empty()) continue;
    visits.insert(visits.end(), static_cast<std::size_t>(stats.visits_per_class),
                  static_cast<LabelId>(i));
  }
  if (visits.empty()) {
    throw DataError("epoch plan: corpus has no positive labels");
  }

  Rng rng(seed);
  shuffle(visits, rng);
  plan.schedule.reserve(visits.size());
  for (LabelId label : visits) {
    const auto& pool = positives[label];
    plan.schedule.push_back({label, pool[uniform_index(rng, pool.size())]});
  }
  return plan;
}

SamplingFrequencies sampling_frequencies(const LabelStats& stats,
                                         std::span<const LabelId> topics) {
  check_topics(stats, topics);
  const double inv_c = 1.0 / static_cast<double>(stats.num_classes());
  SamplingFrequencies out;
  out.class_level.resize(stats.num_classes(), 0.0);
  for (std::size_t i = 0; i < stats.num_classes(); ++i) {
    if (stats.counts[i] > 0) {
      out.class_level[i] = inv_c / static_cast<double>(stats.counts[i]);
    }
  }
  double sum = 0.0;
  for (LabelId id : topics) sum += 1.0 / static_cast<double>(stats.counts[id]);
  out.instance_level = inv_c * sum;
  return out;
}

std::vector<double> rebalance_weights(const LabelStats& stats,
                                      std::span<const LabelId> topics) {
  check_topics(stats, topics);
  std::vector<double> r;
  r.reserve(topics.size());
  double sum = 0.0;
  for (LabelId id : topics) {
    r.push_back(1.0 / static_cast<double>(stats.counts[id]));
    sum += r.back();
  }
  for (double& x : r) x /= sum;
  return r;
}

double smooth_weight(double r, double alpha, double beta, double mu) {
  return alpha + 1.0 / (1.0 + std::exp(-beta * (r - mu)));
}

std::string_view to_string(NegativeWeightMode mode) {
  switch (mode) {
    case NegativeWeightMode::kMinPositive: return "min_positive";
    case NegativeWeightMode::kMidpoint: return "midpoint";
    case NegativeWeightMode::kOne: return "one";
  }
  return "unknown";
}

NegativeWeightMode parse_negative_weight_mode(std::string_view name) {
  if (name == "min_positive") return NegativeWeightMode::kMinPositive;
  if (name == "midpoint") return NegativeWeightMode::kMidpoint;
  if (name == "one") return NegativeWeightMode::kOne;
  throw ConfigError("sampler.negative_weight_mode: unknown mode '" +
                    std::string(name) +
                    "' (expected min_positive, midpoint or one)");
}

void InstanceWeights::append(std::vector<double> raw,
                             std::span<const double> rhat, bool has_positive) {
  raw_.push_back(std::move(raw));
  rhat_.insert(rhat_.end(), rhat.begin(), rhat.end());
  has_positive_.push_back(has_positive);
}

InstanceWeights build_instance_weights(const LabelStats& stats,
                                       const Corpus& corpus,
                                       const SmoothingParams& params) {
  if (!(params.beta >= 0.0)) throw ConfigError("sampler.beta: must be >= 0");
  const std::size_t c = stats.num_classes();
  InstanceWeights weights(c, params);
  std::vector<double> row(c);
  const double sentinel = params.alpha + 0.5;
  for (const auto& record : corpus.records) {
    if (record.topics.empty()) {
      std::fill(row.begin(), row.end(), sentinel);
      weights.append({}, row, false);
      continue;
    }
    std::vector<double> raw = rebalance_weights(stats, record.topics);
    double min_positive = 0.0;
    std::vector<double> smoothed(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
      smoothed[j] = smooth_weight(raw[j], params.alpha, params.beta, params.mu);
    }
    min_positive = *std::min_element(smoothed.begin(), smoothed.end());

    double negative = 0.0;
    switch (params.negative_mode) {
      case NegativeWeightMode::kMinPositive: negative = min_positive; break;
      case NegativeWeightMode::kMidpoint: negative = sentinel; break;
      case NegativeWeightMode::kOne: negative = 1.0; break;
    }
    std::fill(row.begin(), row.end(), negative);
    for (std::size_t j = 0; j < raw.size(); ++j) {
      row[record.topics[j]] = smoothed[j];
    }
    weights.append(std::move(raw), row, true);
  }
  return weights;
}

}  // namespace tailtag
