#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oneshot/simnet/config.hpp"

namespace oneshot::simnet {

// Gradient checks shared by the gradcheck command and the test suites.
// Relative errors are |a - b| / max(1, |b|) with b the reference value.

struct ScoreInstance {
  std::vector<double> scores;
  double temperature = 1.0 / 3.0;
  int label = 1;
};

/// Lengths 5-50, scores uniform in [0, 1], T in {1/3, 1, 3}, y in {0, 1}.
std::vector<ScoreInstance> random_score_instances(std::uint64_t seed, std::size_t count);

using ScoreGradientFn = std::function<std::vector<double>(std::span<const double>, int, double)>;

struct ScoreGradientReport {
  std::size_t instances = 0;
  /// Autograd of the pooled squared loss against the closed form.
  double closed_form_error = 0.0;
  /// Autograd against central differences.
  double finite_difference_error = 0.0;
  /// max |sum_l d y_hat / d s_l - 1|.
  double sum_rule_error = 0.0;
  /// Positive-pair location pairs with s_l > s_m >= y_hat - T, and how many
  /// of them violate -dl/ds_l > -dl/ds_m.
  std::size_t ordering_pairs = 0;
  std::size_t ordering_violations = 0;
};

ScoreGradientReport check_score_gradients(const std::vector<ScoreInstance>& instances,
                                          const ScoreGradientFn& closed_form, double h = 1e-5);

/// Central differences against autograd for the batch loss of a small
/// network, over `coordinates` randomly chosen trainable parameters.
double check_network_gradient(const EmbedConfig& config, std::uint64_t seed, std::size_t coordinates, double h = 1e-5);

/// A small two-layer configuration cheap enough for finite differences.
EmbedConfig gradcheck_config(std::size_t spatial_rank);

double relative_error(double value, double reference);

}  // namespace oneshot::simnet
