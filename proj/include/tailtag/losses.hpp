// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_LOSSES_HPP_
#define TAILTAG_LOSSES_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tailtag {

// Per-instance multi-label loss kernels. Every kernel takes raw logits z and
// binary targets y of equal length C, averages its per-class terms over C,
// and returns the gradient with respect to z alongside the loss.

enum class LossFamily { kBce, kFocal, kRebalancedBce, kNegTolerantBce, kDb };

std::string_view to_string(LossFamily family);
/// Accepts "bce", "focal", "rbce", "ntbce", "db". Throws ConfigError.
LossFamily parse_loss_family(std::string_view name);

struct LossConfig {
  LossFamily family = LossFamily::kDb;
  double lambda = 5.0;
  double kappa = 0.05;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  std::vector<double> nu;  // per-class bias, length C (ntbce and db)

  /// Throws ConfigError on out-of-range hyper-parameters.
  void validate() const;
};

struct LossOutput {
  double loss = 0.0;
  std::vector<double> grad;
};

double sigmoid(double x);
/// ln(1 + e^x) without overflow.
double softplus(double x);

LossOutput bce(std::span<const double> z, std::span<const double> y);

LossOutput focal(std::span<const double> z, std::span<const double> y,
                 double gamma, double alpha);

/// Re-balanced BCE: every class term scaled by rhat[i] >= 0.
LossOutput rebalanced_bce(std::span<const double> z, std::span<const double> y,
                          std::span<const double> rhat);

/// Negative-tolerant BCE with class bias nu and negative-logit scale lambda.
LossOutput nt_bce(std::span<const double> z, std::span<const double> y,
                  std::span<const double> nu, double lambda);

/// Distribution-balanced loss: nt_bce terms scaled by rhat.
LossOutput db_loss(std::span<const double> z, std::span<const double> y,
                   std::span<const double> rhat, std::span<const double> nu,
                   double lambda);

/// nu_i = kappa * logit(clamp(counts_i / N, eps, 1 - eps)), eps = 1e-6.
std::vector<double> compute_class_bias(std::span<const std::int64_t> counts,
                                       std::int64_t num_records, double kappa);

inline constexpr double kClassBiasEps = 1e-6;

/// Dispatches on cfg.family. rhat is ignored by families that do not use it
/// and may then be empty.
LossOutput compute_loss(const LossConfig& cfg, std::span<const double> z,
                        std::span<const double> y,
                        std::span<const double> rhat);

}  // namespace tailtag

#endif  // TAILTAG_LOSSES_HPP_
