// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_INFERENCE_HPP_
#define TAILTAG_INFERENCE_HPP_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tailtag/corpus.hpp"
#include "tailtag/featurize.hpp"
#include "tailtag/trainer.hpp"

namespace tailtag {

struct ScoredLabel {
  LabelId label;
  double prob;

  bool operator==(const ScoredLabel&) const = default;
};

/// Ranked recommendations for one record: probabilities non-increasing,
/// at most k entries, none below tau.
struct PredictionSet {
  std::vector<ScoredLabel> ranked;
  std::size_t k = 0;
  double tau = 0.0;
};

/// Record id -> predictions. Ordered so that files and reports are stable.
using PredictionMap = std::map<std::string, PredictionSet>;

/// Record id -> sorted ground-truth label ids.
using TruthMap = std::map<std::string, std::vector<LabelId>>;

TruthMap truth_of(const Corpus& corpus);

/// Elementwise sigmoid of the logits.
std::vector<double> predict_proba(const Model& model, const SparseVec& x);

/// Labels by descending probability, ties by ascending id; min(k, C) long.
std::vector<LabelId> top_k(std::span<const double> probs, std::size_t k);

PredictionSet rank(std::span<const double> probs, std::size_t k);

/// Keeps entries with prob >= tau, preserving order.
PredictionSet filter_low_confidence(const PredictionSet& preds, double tau);

PredictionMap predict_corpus(const Model& model, const Corpus& corpus,
                             std::span<const SparseVec> features,
                             std::size_t k);

struct ThresholdSweep {
  double best_tau = 0.0;
  double best_objective = 0.0;
  std::vector<double> taus;
  std::vector<double> objectives;
};

/// Grid {0, step, 2 step, ...} capped at and always including 1.
std::vector<double> threshold_grid(double grid_step);

/// Sweeps tau over the grid; objective is the mean over ks of micro-F1@k of
/// the filtered top-k. Argmax, ties to the smallest tau.
ThresholdSweep sweep_threshold(const PredictionMap& ranked,
                               const TruthMap& truth,
                               std::span<const std::size_t> ks,
                               double grid_step);

double tune_threshold(const Model& model, const Corpus& val,
                      std::span<const SparseVec> features,
                      std::span<const std::size_t> ks, double grid_step);

/// "record_id<TAB>label:prob,label:prob,..." with 6-decimal probabilities.
void write_predictions(const PredictionMap& preds, const LabelVocab& vocab,
                       const std::filesystem::path& path);
std::string format_predictions(const PredictionMap& preds,
                               const LabelVocab& vocab);

/// Parses the same format. Labels are resolved through the vocabulary
/// (aliases included); unknown labels are an error. k is set to the list
/// length and tau to 0.
PredictionMap read_predictions(const std::filesystem::path& path,
                               const LabelVocab& vocab);
PredictionMap parse_predictions(std::string_view content,
                                const LabelVocab& vocab);

}  // namespace tailtag

#endif  // TAILTAG_INFERENCE_HPP_
