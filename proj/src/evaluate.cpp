// SPDX-License-Identifier: Apache-2.0
#include "tailtag/evaluate.hpp"

#include <algorithm>
#include <fstream>

namespace tailtag {

namespace {

void check_same_keys(const PredictionMap& preds, const TruthMap& truth) {
  bool same = preds.size() == truth.size();
  if (same) {
    auto t = truth.begin();
    for (auto p = preds.begin(); p != preds.end(); ++p, ++t) {
      if (p->first != t->first) {
        same = false;
        break;
      }
    }
  }
  if (!same) {
    for (const auto& [id, _] : preds) {
      if (truth.count(id) == 0) {
        throw DataError("record '" + id + "' has predictions but no truth");
      }
    }
    for (const auto& [id, _] : truth) {
      if (preds.count(id) == 0) {
        throw DataError("record '" + id + "' has truth but no predictions");
      }
    }
  }
}

bool in_mask(const std::vector<bool>& mask, LabelId id) {
  if (mask.empty()) return true;
  return static_cast<std::size_t>(id) < mask.size() && mask[id];
}

}  // namespace

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

Prf prf_from_counts(const MetricCounts& counts) {
  Prf out;
  out.counts = counts;
  const auto predicted = counts.tp + counts.fp;
  const auto actual = counts.tp + counts.fn;
  out.precision = predicted > 0 ? static_cast<double>(counts.tp) /
                                      static_cast<double>(predicted)
                                : 0.0;
  out.recall = actual > 0 ? static_cast<double>(counts.tp) /
                                static_cast<double>(actual)
                          : 0.0;
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

MetricCounts count_decisions(const PredictionMap& preds, const TruthMap& truth,
                             std::size_t k,
                             const std::vector<bool>& label_mask) {
  check_same_keys(preds, truth);
  MetricCounts counts;
  auto t = truth.begin();
  for (auto p = preds.begin(); p != preds.end(); ++p, ++t) {
    const auto& actual = t->second;
    const auto& ranked = p->second.ranked;
    const std::size_t n = std::min(k, ranked.size());
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const LabelId id = ranked[i].label;
      if (!in_mask(label_mask, id)) continue;
      if (std::find(actual.begin(), actual.end(), id) != actual.end()) {
        ++hits;
      } else {
        ++counts.fp;
      }
    }
    std::int64_t relevant = 0;
    for (LabelId id : actual) {
      if (in_mask(label_mask, id)) ++relevant;
    }
    counts.tp += hits;
    counts.fn += relevant - hits;
  }
  return counts;
}

Prf micro_metrics(const PredictionMap& preds, const TruthMap& truth,
                  std::size_t k) {
  return prf_from_counts(count_decisions(preds, truth, k));
}

std::string_view to_string(Bucket bucket) {
  switch (bucket) {
    case Bucket::kHead: return "head";
    case Bucket::kMid: return "mid";
    case Bucket::kTail: return "tail";
  }
  return "unknown";
}

std::vector<bool> BucketSpec::mask(Bucket bucket) const {
  std::vector<bool> out(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out[i] = assignment[i] == bucket;
  }
  return out;
}

BucketSpec partition_labels(std::span<const std::int64_t> train_counts,
                            BucketSpec spec) {
  if (!(spec.mid_min >= 1 && spec.head_min > spec.mid_min)) {
    throw ConfigError("head_min/mid_min: need head_min > mid_min >= 1");
  }
  spec.assignment.resize(train_counts.size());
  for (std::size_t i = 0; i < train_counts.size(); ++i) {
    const auto n = train_counts[i];
    spec.assignment[i] = n >= spec.head_min  ? Bucket::kHead
                         : n >= spec.mid_min ? Bucket::kMid
                                             : Bucket::kTail;
  }
  return spec;
}

Prf bucket_metrics(const PredictionMap& preds, const TruthMap& truth,
                   std::size_t k, const std::vector<bool>& bucket) {
  // An empty mask would mean "no restriction" to count_decisions.
  if (bucket.empty() ||
      std::none_of(bucket.begin(), bucket.end(), [](bool b) { return b; })) {
    check_same_keys(preds, truth);
    return {};
  }
  return prf_from_counts(count_decisions(preds, truth, k, bucket));
}

PredictionMap fuse(const PredictionMap& a, const PredictionMap& b,
                   std::size_t ka, std::size_t kb) {
  bool same = a.size() == b.size();
  for (auto ia = a.begin(), ib = b.begin(); same && ia != a.end(); ++ia, ++ib) {
    same = ia->first == ib->first;
  }
  if (!same) throw DataError("fuse: prediction files cover different records");

  PredictionMap out;
  auto ib = b.begin();
  for (auto ia = a.begin(); ia != a.end(); ++ia, ++ib) {
    PredictionSet merged;
    merged.k = ka + kb;
    const auto& first = ia->second.ranked;
    for (std::size_t i = 0; i < std::min(ka, first.size()); ++i) {
      const bool seen = std::any_of(
          merged.ranked.begin(), merged.ranked.end(),
          [&](const ScoredLabel& s) { return s.label == first[i].label; });
      if (!seen) merged.ranked.push_back(first[i]);
    }
    const auto& second = ib->second.ranked;
    for (std::size_t i = 0; i < std::min(kb, second.size()); ++i) {
      const bool seen = std::any_of(
          merged.ranked.begin(), merged.ranked.end(),
          [&](const ScoredLabel& s) { return s.label == second[i].label; });
      if (!seen) merged.ranked.push_back(second[i]);
    }
    out.emplace(ia->first, std::move(merged));
  }
  return out;
}

MetricReport build_report(const PredictionMap& preds, const TruthMap& truth,
                          const BucketSpec& buckets,
                          std::span<const std::size_t> ks,
                          std::uint64_t fingerprint) {
  if (ks.empty()) throw ConfigError("ks: at least one cutoff is required");
  MetricReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.fingerprint = fingerprint;
  double f1_sum = 0.0;
  for (std::size_t k : ks) {
    const Prf all = micro_metrics(preds, truth, k);
    report.rows.push_back({"all", k, all});
    f1_sum += all.f1;
  }
  report.avg_f1 = f1_sum / static_cast<double>(ks.size());
  if (!buckets.assignment.empty()) {
    for (Bucket bucket : {Bucket::kHead, Bucket::kMid, Bucket::kTail}) {
      const std::vector<bool> mask = buckets.mask(bucket);
      for (std::size_t k : ks) {
        report.rows.push_back(
            {std::string(to_string(bucket)), k,
             bucket_metrics(preds, truth, k, mask)});
      }
    }
  }
  return report;
}

std::string format_report(const MetricReport& report) {
  if (report.rows.empty()) throw DataError("report: no metrics to emit");
  std::string out;
  for (const auto& row : report.rows) {
    out += row.scope + '\t' + std::to_string(row.k) + '\t' +
           format_fixed(row.prf.precision, 6) + '\t' +
           format_fixed(row.prf.recall, 6) + '\t' +
           format_fixed(row.prf.f1, 6) + '\n';
  }
  out += "avg_f1\t" + format_fixed(report.avg_f1, 6) + '\n';
  out += "fingerprint\t" + to_hex(report.fingerprint) + '\n';
  return out;
}

void emit_report(const MetricReport& report, const std::filesystem::path& path) {
  const std::string text = format_report(report);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace tailtag
