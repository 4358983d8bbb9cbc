// SPDX-License-Identifier: Apache-2.0
#include "tailtag/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tailtag/evaluate.hpp"
#include "tailtag/losses.hpp"

namespace tailtag {

TruthMap truth_of(const Corpus& corpus) {
  TruthMap truth;
  for (const auto& record : corpus.records) truth[record.id] = record.topics;
  return truth;
}

std::vector<double> predict_proba(const Model& model, const SparseVec& x) {
  std::vector<double> p = forward(model, x);
  for (double& v : p) v = sigmoid(v);
  return p;
}

std::vector<LabelId> top_k(std::span<const double> probs, std::size_t k) {
  if (k < 1) throw ConfigError("k: must be >= 1");
  std::vector<LabelId> ids(probs.size());
  std::iota(ids.begin(), ids.end(), LabelId{0});
  const std::size_t n = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n),
                    ids.end(), [&](LabelId a, LabelId b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

PredictionSet rank(std::span<const double> probs, std::size_t k) {
  PredictionSet out;
  out.k = k;
  for (LabelId id : top_k(probs, k)) out.ranked.push_back({id, probs[id]});
  return out;
}

PredictionSet filter_low_confidence(const PredictionSet& preds, double tau) {
  PredictionSet out;
  out.k = preds.k;
  out.tau = std::max(preds.tau, tau);
  for (const auto& entry : preds.ranked) {
    if (entry.prob >= tau) out.ranked.push_back(entry);
  }
  return out;
}

PredictionMap predict_corpus(const Model& model, const Corpus& corpus,
                             std::span<const SparseVec> features,
                             std::size_t k) {
  if (features.size() != corpus.size()) {
    throw DataError("predict: corpus and features differ in size");
  }
  PredictionMap out;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    out[corpus.records[r].id] = rank(predict_proba(model, features[r]), k);
  }
  return out;
}

std::vector<double> threshold_grid(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw ConfigError("grid_step: must be in (0, 0.5]");
  }
  std::vector<double> grid;
  for (std::size_t j = 0;; ++j) {
    const double tau = static_cast<double>(j) * grid_step;
    if (tau > 1.0 - 1e-9) break;
    grid.push_back(tau);
  }
  grid.push_back(1.0);
  return grid;
}

ThresholdSweep sweep_threshold(const PredictionMap& ranked,
                               const TruthMap& truth,
                               std::span<const std::size_t> ks,
                               double grid_step) {
  if (ranked.empty()) throw DataError("threshold tuning: empty validation set");
  if (ks.empty()) throw ConfigError("ks: at least one cutoff is required");
  ThresholdSweep sweep;
  sweep.taus = threshold_grid(grid_step);
  sweep.objectives.reserve(sweep.taus.size());

  PredictionMap filtered;
  for (std::size_t g = 0; g < sweep.taus.size(); ++g) {
    const double tau = sweep.taus[g];
    for (const auto& [id, preds] : ranked) {
      filtered[id] = filter_low_confidence(preds, tau);
    }
    double objective = 0.0;
    for (std::size_t k : ks) objective += micro_metrics(filtered, truth, k).f1;
    objective /= static_cast<double>(ks.size());
    sweep.objectives.push_back(objective);
    if (g == 0 || objective > sweep.best_objective) {
      sweep.best_objective = objective;
      sweep.best_tau = tau;
    }
  }
  return sweep;
}

double tune_threshold(const Model& model, const Corpus& val,
                      std::span<const SparseVec> features,
                      std::span<const std::size_t> ks, double grid_step) {
  if (val.empty()) throw DataError("threshold tuning: empty validation set");
  if (ks.empty()) throw ConfigError("ks: at least one cutoff is required");
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  const PredictionMap ranked = predict_corpus(model, val, features, k_max);
  return sweep_threshold(ranked, truth_of(val), ks, grid_step).best_tau;
}

std::string format_predictions(const PredictionMap& preds,
                               const LabelVocab& vocab) {
  std::string out;
  for (const auto& [id, set] : preds) {
    out += id;
    out.push_back('\t');
    for (std::size_t i = 0; i < set.ranked.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += vocab.name(set.ranked[i].label);
      out.push_back(':');
      out += format_fixed(set.ranked[i].prob, 6);
    }
    out.push_back('\n');
  }
  return out;
}

void write_predictions(const PredictionMap& preds, const LabelVocab& vocab,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << format_predictions(preds, vocab);
  if (!out) throw DataError("write failed for " + path.string());
}

PredictionMap parse_predictions(std::string_view content,
                                const LabelVocab& vocab) {
  PredictionMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const std::string where = "line " + std::to_string(line_no);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw DataError(where + ": expected record_id<TAB>label:prob,...");
    }
    const std::string id(line.substr(0, tab));
    PredictionSet set;
    std::string_view rest = line.substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{}
                                             : rest.substr(comma + 1);
      const auto colon = item.rfind(':');
      if (colon == std::string_view::npos) {
        throw DataError(where + ": expected label:prob, got '" +
                        std::string(item) + "'");
      }
      const auto label = vocab.lookup(item.substr(0, colon));
      if (!label) {
        throw DataError(where + ": unknown label '" +
                        std::string(item.substr(0, colon)) + "'");
      }
      double prob = 0.0;
      try {
        std::size_t used = 0;
        const std::string text(item.substr(colon + 1));
        prob = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        throw DataError(where + ": bad probability in '" + std::string(item) +
                        "'");
      }
      if (!(prob >= 0.0 && prob <= 1.0)) {
        throw DataError(where + ": probability outside [0, 1]");
      }
      const bool duplicate =
          std::any_of(set.ranked.begin(), set.ranked.end(),
                      [&](const ScoredLabel& s) { return s.label == *label; });
      if (!duplicate) set.ranked.push_back({*label, prob});
    }
    set.k = set.ranked.size();
    if (!out.emplace(id, std::move(set)).second) {
      throw DataError(where + ": duplicate record id '" + id + "'");
    }
  }
  return out;
}

PredictionMap read_predictions(const std::filesystem::path& path,
                               const LabelVocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open predictions " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_predictions(buf.str(), vocab);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace tailtag
