// SPDX-License-Identifier: Apache-2.0
// Test-only oracles and generators. Nothing here calls into the code paths
// it is used to check.
#ifndef TAILTAG_TESTS_TEST_SUPPORT_HPP_
#define TAILTAG_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tailtag/evaluate.hpp"
#include "tailtag/losses.hpp"

namespace tailtag::testing {

/// Central difference of f at x[i] with step h.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i,
                                 double h = 1e-5) {
  const double orig = x[i];
  x[i] = orig + h;
  const double plus = f(x);
  x[i] = orig - h;
  const double minus = f(x);
  return (plus - minus) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

/// Central difference of the loss along z[i], taken on class i's own term.
/// The loss is a mean of independent per-class terms, so this is the same
/// derivative as the full-vector difference without the rounding noise of
/// the other C - 1 terms.
inline double class_term_difference(const LossConfig& cfg,
                                    const std::vector<double>& z,
                                    const std::vector<double>& y,
                                    const std::vector<double>& rhat,
                                    std::size_t i, double h = 1e-5) {
  LossConfig single = cfg;
  if (!cfg.nu.empty()) single.nu = {cfg.nu[i]};
  const std::vector<double> yi{y[i]};
  std::vector<double> ri;
  if (!rhat.empty()) ri = {rhat[i]};
  const double scale = 1.0 / static_cast<double>(z.size());
  auto term = [&](const std::vector<double>& zi) {
    return compute_loss(single, zi, yi, ri).loss * scale;
  };
  return central_difference(term, {z[i]}, 0, h);
}

/// Gradient tolerance of the loss and trainer suites: relative error below
/// rel_tol, or absolute error below 1e-8 where the gradient itself is below
/// 1e-6 in magnitude.
inline bool gradient_matches(double analytic, double numeric, double rel_tol) {
  if (std::max(std::abs(analytic), std::abs(numeric)) < 1e-6) {
    return std::abs(analytic - numeric) < 1e-8;
  }
  return relative_error(analytic, numeric) < rel_tol;
}

/// Direct transcription of the per-class loss terms, evaluated without the
/// stable softplus helpers of the library. Safe for |z| <= 30.
inline double naive_term(const std::string& family, double z, double y,
                         double rhat, double nu, double lambda, double gamma,
                         double alpha) {
  auto log1pexp = [](double v) { return std::log(1.0 + std::exp(v)); };
  if (family == "bce") return y * log1pexp(-z) + (1 - y) * log1pexp(z);
  if (family == "rbce") return rhat * (y * log1pexp(-z) + (1 - y) * log1pexp(z));
  if (family == "ntbce") {
    return y * log1pexp(-(z - nu)) + (1 - y) / lambda * log1pexp(lambda * (z - nu));
  }
  if (family == "db") {
    return rhat * (y * log1pexp(-(z - nu)) +
                   (1 - y) / lambda * log1pexp(lambda * (z - nu)));
  }
  // focal
  const double p = 1.0 / (1.0 + std::exp(-z));
  const double pt = y * p + (1 - y) * (1 - p);
  const double at = y * alpha + (1 - y) * (1 - alpha);
  return at * std::pow(1 - pt, gamma) * -std::log(pt);
}

/// Brute-force micro counts: walk every (record, label) pair of an L-label
/// universe and classify it as TP, FP or FN.
inline MetricCounts brute_force_counts(const PredictionMap& preds,
                                       const TruthMap& truth, std::size_t k,
                                       std::size_t num_labels,
                                       const std::vector<bool>& mask = {}) {
  MetricCounts c;
  for (const auto& [id, set] : preds) {
    const auto& actual = truth.at(id);
    for (std::size_t l = 0; l < num_labels; ++l) {
      if (!mask.empty() && !mask[l]) continue;
      bool predicted = false;
      for (std::size_t i = 0; i < std::min(k, set.ranked.size()); ++i) {
        if (set.ranked[i].label == static_cast<LabelId>(l)) predicted = true;
      }
      const bool relevant =
          std::find(actual.begin(), actual.end(), static_cast<LabelId>(l)) !=
          actual.end();
      if (predicted && relevant) ++c.tp;
      if (predicted && !relevant) ++c.fp;
      if (!predicted && relevant) ++c.fn;
    }
  }
  return c;
}

/// Random ranked predictions and truths over `num_labels` labels.
inline void random_prediction_case(std::mt19937_64& rng, std::size_t records,
                                   std::size_t num_labels, std::size_t max_len,
                                   PredictionMap& preds, TruthMap& truth) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  preds.clear();
  truth.clear();
  for (std::size_t r = 0; r < records; ++r) {
    const std::string id = "r" + std::to_string(r);
    std::vector<LabelId> labels(num_labels);
    for (std::size_t l = 0; l < num_labels; ++l) labels[l] = static_cast<LabelId>(l);
    std::shuffle(labels.begin(), labels.end(), rng);
    const std::size_t len = rng() % (std::min(max_len, num_labels) + 1);
    PredictionSet set;
    set.k = len;
    double p = 1.0;
    for (std::size_t i = 0; i < len; ++i) {
      p *= unit(rng);
      set.ranked.push_back({labels[i], p});
    }
    preds[id] = set;
    std::vector<LabelId> t;
    for (std::size_t l = 0; l < num_labels; ++l) {
      if (unit(rng) < 0.3) t.push_back(static_cast<LabelId>(l));
    }
    truth[id] = t;
  }
}

}  // namespace tailtag::testing

#endif  // TAILTAG_TESTS_TEST_SUPPORT_HPP_
