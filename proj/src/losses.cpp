// SPDX-License-Identifier: Apache-2.0
#include "tailtag/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tailtag/common.hpp"

namespace tailtag {

namespace {

void check_lengths(std::span<const double> z, std::span<const double> y,
                   const char* name) {
  if (z.empty()) throw DataError(std::string(name) + ": empty logit vector");
  if (z.size() != y.size()) {
    throw DataError(std::string(name) + ": logits have length " +
                    std::to_string(z.size()) + " but targets have length " +
                    std::to_string(y.size()));
  }
}

void check_aux_length(std::span<const double> v, std::size_t c,
                      const char* name, const char* what) {
  if (v.size() != c) {
    throw DataError(std::string(name) + ": " + what + " has length " +
                    std::to_string(v.size()) + ", expected " +
                    std::to_string(c));
  }
}

void check_weights(std::span<const double> rhat, const char* name) {
  for (double w : rhat) {
    if (!(w >= 0.0)) {
      throw DataError(std::string(name) + ": re-balancing weights must be >= 0");
    }
  }
}

// Shared body of nt_bce and db_loss; rhat empty means all ones.
LossOutput negative_tolerant(std::span<const double> z,
                             std::span<const double> y,
                             std::span<const double> rhat,
                             std::span<const double> nu, double lambda) {
  const std::size_t c = z.size();
  const double inv_c = 1.0 / static_cast<double>(c);
  const double inv_lambda = 1.0 / lambda;
  LossOutput out;
  out.grad.resize(c);
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const double w = rhat.empty() ? 1.0 : rhat[i];
    const double d = z[i] - nu[i];
    const double pos = y[i] * softplus(-d);
    const double neg = (1.0 - y[i]) * inv_lambda * softplus(lambda * d);
    total += w * (pos + neg);
    out.grad[i] = w * inv_c *
                  (-y[i] * sigmoid(-d) + (1.0 - y[i]) * sigmoid(lambda * d));
  }
  out.loss = total * inv_c;
  return out;
}

}  // namespace

std::string_view to_string(LossFamily family) {
  switch (family) {
    case LossFamily::kBce: return "bce";
    case LossFamily::kFocal: return "focal";
    case LossFamily::kRebalancedBce: return "rbce";
    case LossFamily::kNegTolerantBce: return "ntbce";
    case LossFamily::kDb: return "db";
  }
  return "unknown";
}

LossFamily parse_loss_family(std::string_view name) {
  if (name == "bce") return LossFamily::kBce;
  if (name == "focal") return LossFamily::kFocal;
  if (name == "rbce") return LossFamily::kRebalancedBce;
  if (name == "ntbce") return LossFamily::kNegTolerantBce;
  if (name == "db") return LossFamily::kDb;
  throw ConfigError("loss: unknown family '" + std::string(name) +
                    "' (expected bce, focal, rbce, ntbce or db)");
}

void LossConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda: must be > 0");
  }
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw ConfigError("kappa: must be >= 0");
  }
  if (!(focal_gamma >= 0.0)) throw ConfigError("focal_gamma: must be >= 0");
  if (!(focal_alpha >= 0.0 && focal_alpha <= 1.0)) {
    throw ConfigError("focal_alpha: must be in [0, 1]");
  }
  for (double v : nu) {
    if (!std::isfinite(v)) throw ConfigError("nu: class bias must be finite");
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

LossOutput bce(std::span<const double> z, std::span<const double> y) {
  check_lengths(z, y, "bce");
  const std::size_t c = z.size();
  const double inv_c = 1.0 / static_cast<double>(c);
  LossOutput out;
  out.grad.resize(c);
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    total += y[i] * softplus(-z[i]) + (1.0 - y[i]) * softplus(z[i]);
    out.grad[i] = (sigmoid(z[i]) - y[i]) * inv_c;
  }
  out.loss = total * inv_c;
  return out;
}

LossOutput focal(std::span<const double> z, std::span<const double> y,
                 double gamma, double alpha) {
  check_lengths(z, y, "focal");
  if (!(gamma >= 0.0)) throw ConfigError("focal_gamma: must be >= 0");
  const std::size_t c = z.size();
  const double inv_c = 1.0 / static_cast<double>(c);
  LossOutput out;
  out.grad.resize(c);
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const bool positive = y[i] > 0.5;
    const double sign = positive ? 1.0 : -1.0;
    const double alpha_t = positive ? alpha : 1.0 - alpha;
    // p_t = sigmoid(sign * z); both it and 1 - p_t are formed directly.
    const double p_t = sigmoid(sign * z[i]);
    const double miss = sigmoid(-sign * z[i]);
    const double nll = softplus(-sign * z[i]);
    const double modulator = gamma == 0.0 ? 1.0 : std::pow(miss, gamma);
    total += alpha_t * modulator * nll;
    out.grad[i] =
        -alpha_t * sign * modulator * (gamma * p_t * nll + miss) * inv_c;
  }
  out.loss = total * inv_c;
  return out;
}

LossOutput rebalanced_bce(std::span<const double> z, std::span<const double> y,
                          std::span<const double> rhat) {
  check_lengths(z, y, "rbce");
  check_aux_length(rhat, z.size(), "rbce", "rhat");
  check_weights(rhat, "rbce");
  const std::size_t c = z.size();
  const double inv_c = 1.0 / static_cast<double>(c);
  LossOutput out;
  out.grad.resize(c);
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    total += rhat[i] * (y[i] * softplus(-z[i]) + (1.0 - y[i]) * softplus(z[i]));
    out.grad[i] = rhat[i] * (sigmoid(z[i]) - y[i]) * inv_c;
  }
  out.loss = total * inv_c;
  return out;
}

LossOutput nt_bce(std::span<const double> z, std::span<const double> y,
                  std::span<const double> nu, double lambda) {
  check_lengths(z, y, "ntbce");
  check_aux_length(nu, z.size(), "ntbce", "nu");
  if (!(lambda > 0.0)) throw ConfigError("lambda: must be > 0");
  return negative_tolerant(z, y, {}, nu, lambda);
}

LossOutput db_loss(std::span<const double> z, std::span<const double> y,
                   std::span<const double> rhat, std::span<const double> nu,
                   double lambda) {
  check_lengths(z, y, "db");
  check_aux_length(rhat, z.size(), "db", "rhat");
  check_aux_length(nu, z.size(), "db", "nu");
  check_weights(rhat, "db");
  if (!(lambda > 0.0)) throw ConfigError("lambda: must be > 0");
  return negative_tolerant(z, y, rhat, nu, lambda);
}

std::vector<double> compute_class_bias(std::span<const std::int64_t> counts,
                                       std::int64_t num_records, double kappa) {
  if (num_records <= 0) {
    throw DataError("class bias: number of records must be > 0");
  }
  std::vector<double> nu(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || counts[i] > num_records) {
      throw DataError("class bias: count of label " + std::to_string(i) +
                      " outside [0, N]");
    }
    const double p = std::clamp(
        static_cast<double>(counts[i]) / static_cast<double>(num_records),
        kClassBiasEps, 1.0 - kClassBiasEps);
    nu[i] = kappa * std::log(p / (1.0 - p));
  }
  return nu;
}

LossOutput compute_loss(const LossConfig& cfg, std::span<const double> z,
                        std::span<const double> y,
                        std::span<const double> rhat) {
  switch (cfg.family) {
    case LossFamily::kBce:
      return bce(z, y);
    case LossFamily::kFocal:
      return focal(z, y, cfg.focal_gamma, cfg.focal_alpha);
    case LossFamily::kRebalancedBce:
      return rebalanced_bce(z, y, rhat);
    case LossFamily::kNegTolerantBce:
      return nt_bce(z, y, cfg.nu, cfg.lambda);
    case LossFamily::kDb:
      return db_loss(z, y, rhat, cfg.nu, cfg.lambda);
  }
  throw ConfigError("loss: unhandled family");
}

}  // namespace tailtag
