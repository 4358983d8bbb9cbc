// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_SAMPLING_HPP_
#define TAILTAG_SAMPLING_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tailtag/corpus.hpp"

namespace tailtag {

/// Training-set label statistics. visits_per_class is N_e: the largest class
/// count, optionally capped.
struct LabelStats {
  std::vector<std::int64_t> counts;
  std::int64_t num_records = 0;
  std::int64_t visits_per_class = 0;
  std::optional<std::int64_t> cap;

  std::size_t num_classes() const { return counts.size(); }
};

LabelStats make_label_stats(std::vector<std::int64_t> counts,
                            std::int64_t num_records,
                            std::optional<std::int64_t> cap = std::nullopt);

LabelStats make_label_stats(const Corpus& corpus,
                            std::optional<std::int64_t> cap = std::nullopt);

struct PlanEntry {
  LabelId label;
  std::size_t record;  // index into Corpus::records
};

/// One class-aware epoch: every label with a positive count is visited
/// exactly N_e times, in seeded random order, each visit drawing one of the
/// label's positive records uniformly with replacement.
struct EpochPlan {
  std::vector<PlanEntry> schedule;
  std::uint64_t seed = 0;
};

EpochPlan epoch_plan(const LabelStats& stats, const Corpus& corpus,
                     std::uint64_t seed);

struct SamplingFrequencies {
  std::vector<double> class_level;  // P^C_i = 1 / (C n_i); 0 for n_i = 0
  double instance_level = 0.0;      // P^I = sum over record topics of P^C_i
};

SamplingFrequencies sampling_frequencies(const LabelStats& stats,
                                         std::span<const LabelId> topics);

/// r_i = (1/n_i) / sum_j (1/n_j) over the record's topics, in topic order.
std::vector<double> rebalance_weights(const LabelStats& stats,
                                      std::span<const LabelId> topics);

/// alpha + 1 / (1 + exp(-beta (r - mu))).
double smooth_weight(double r, double alpha, double beta, double mu);

/// What r-hat a record gets on its negative labels.
enum class NegativeWeightMode {
  kMinPositive,  // smallest smoothed weight among the record's positives
  kMidpoint,     // alpha + 0.5
  kOne,          // 1.0
};

std::string_view to_string(NegativeWeightMode mode);
NegativeWeightMode parse_negative_weight_mode(std::string_view name);

struct SmoothingParams {
  double alpha = 0.1;
  double beta = 10.0;
  double mu = 0.3;
  NegativeWeightMode negative_mode = NegativeWeightMode::kMinPositive;
};

/// Per-record weights, computed once before training. Records without
/// positives get the alpha + 0.5 sentinel everywhere and are flagged.
class InstanceWeights {
 public:
  InstanceWeights(std::size_t num_classes, SmoothingParams params)
      : num_classes_(num_classes), params_(params) {}

  std::size_t num_records() const { return has_positive_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  const SmoothingParams& params() const { return params_; }

  /// Raw weights over the record's positive labels (same order as topics).
  std::span<const double> raw(std::size_t record) const { return raw_[record]; }
  /// Smoothed weights over all C labels.
  std::span<const double> rhat(std::size_t record) const {
    return {rhat_.data() + record * num_classes_, num_classes_};
  }
  bool has_positive(std::size_t record) const { return has_positive_[record]; }

  void append(std::vector<double> raw, std::span<const double> rhat,
              bool has_positive);

 private:
  std::size_t num_classes_;
  SmoothingParams params_;
  std::vector<std::vector<double>> raw_;
  std::vector<double> rhat_;
  std::vector<bool> has_positive_;
};

InstanceWeights build_instance_weights(const LabelStats& stats,
                                       const Corpus& corpus,
                                       const SmoothingParams& params);

}  // namespace tailtag

#endif  // TAILTAG_SAMPLING_HPP_
