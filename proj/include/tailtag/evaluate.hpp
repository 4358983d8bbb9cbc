// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_EVALUATE_HPP_
#define TAILTAG_EVALUATE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailtag/inference.hpp"

namespace tailtag {

/// Globally pooled decisions at one cutoff.
struct MetricCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  MetricCounts& operator+=(const MetricCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const MetricCounts&) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  MetricCounts counts;
};

/// Harmonic mean; 0 when precision + recall is 0.
double f1_score(double precision, double recall);

Prf prf_from_counts(const MetricCounts& counts);

/// Counts over every record at cutoff k (each list truncated to its first k
/// entries). A non-empty mask restricts predictions and truths to the labels
/// whose mask entry is true. Throws DataError if the key sets differ.
MetricCounts count_decisions(const PredictionMap& preds, const TruthMap& truth,
                             std::size_t k,
                             const std::vector<bool>& label_mask = {});

Prf micro_metrics(const PredictionMap& preds, const TruthMap& truth,
                  std::size_t k);

enum class Bucket { kHead, kMid, kTail };

std::string_view to_string(Bucket bucket);

/// Head: n >= head_min. Mid: mid_min <= n < head_min. Tail: n < mid_min.
struct BucketSpec {
  std::int64_t head_min = 30;
  std::int64_t mid_min = 9;
  std::vector<Bucket> assignment;  // per label, filled by partition_labels

  std::vector<bool> mask(Bucket bucket) const;
};

/// Fills spec.assignment from training counts. Throws ConfigError unless
/// head_min > mid_min >= 1.
BucketSpec partition_labels(std::span<const std::int64_t> train_counts,
                            BucketSpec spec = {});

Prf bucket_metrics(const PredictionMap& preds, const TruthMap& truth,
                   std::size_t k, const std::vector<bool>& bucket);

/// Per record: a's first ka entries, then b's first kb entries not already
/// present. Throws DataError if the key sets differ.
PredictionMap fuse(const PredictionMap& a, const PredictionMap& b,
                   std::size_t ka = 3, std::size_t kb = 5);

struct MetricRow {
  std::string scope;  // all, head, mid, tail
  std::size_t k = 0;
  Prf prf;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::vector<std::size_t> ks;
  double avg_f1 = 0.0;  // mean of the "all" F1 over ks
  std::uint64_t fingerprint = 0;
};

/// Rows for scope all at each k, then head, mid and tail when buckets are
/// assigned.
MetricReport build_report(const PredictionMap& preds, const TruthMap& truth,
                          const BucketSpec& buckets,
                          std::span<const std::size_t> ks,
                          std::uint64_t fingerprint);

/// "scope<TAB>k<TAB>precision<TAB>recall<TAB>f1" per row, then
/// "avg_f1<TAB>value" and "fingerprint<TAB>hex". Throws DataError when the
/// report has no rows.
std::string format_report(const MetricReport& report);
void emit_report(const MetricReport& report, const std::filesystem::path& path);

}  // namespace tailtag

#endif  // TAILTAG_EVALUATE_HPP_
