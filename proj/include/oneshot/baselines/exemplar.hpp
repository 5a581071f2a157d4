#pragma once

#include <vector>

#include "oneshot/baselines/hog.hpp"
#include "oneshot/eval/types.hpp"
#include "oneshot/simnet/episode.hpp"

namespace oneshot::baselines {

/// Class-weighted, L2-regularised logistic regression of one positive
/// against a fixed negative pool. Every feature vector is augmented with a
/// constant `bias` entry whose weight is regularised like the others.
struct ExemplarClfConfig {
  double positive_weight = 10.0;
  double negative_weight = 1e-4;
  double l2 = 1.0;
  double bias = 1.0;
  std::size_t max_iterations = 500;
  /// Stop when the Euclidean gradient norm falls to this.
  double tolerance = 1e-6;
  /// L-BFGS history length.
  std::size_t memory = 10;
};

void validate(const ExemplarClfConfig& config);

/// Negative features as augmented rows, kept with their transpose for the
/// two matrix-vector products of each objective evaluation.
struct NegativePool {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<double> rows;
  std::vector<double> columns;
};

NegativePool make_negative_pool(const std::vector<std::vector<double>>& features, double bias);

struct FitReport {
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  /// Objective before the first step and after every accepted step.
  std::vector<double> objective;
};

/// Augmented weights (last entry multiplies the bias feature).
struct LinearClassifier {
  std::vector<double> weights;
  double bias = 1.0;

  double logit(const std::vector<double>& features) const;
};

double exemplar_objective(const std::vector<double>& weights, const std::vector<double>& positive,
                          const NegativePool& negatives, const ExemplarClfConfig& config);

/// Minimises exemplar_objective with L-BFGS and a backtracking Armijo line
/// search, so the objective never increases. Hitting max_iterations is
/// reported through `report.converged`, not thrown.
LinearClassifier train_exemplar_classifier(const std::vector<double>& positive, const NegativePool& negatives,
                                           const ExemplarClfConfig& config, FitReport* report = nullptr);

/// Logistic classifier output for every exemplar-sized window of a
/// [1, H, W] target at a stride of one HOG cell. Max pooling.
eval::SimilarityMap exemplar_scan(const LinearClassifier& clf, const core::Tensor& target, std::size_t window,
                                  const HogConfig& hog);

struct ExemplarBaseline {
  HogConfig hog;
  ExemplarClfConfig clf;
  NegativePool negatives;
};

/// Negatives are the HOG descriptors of the first `max_negatives` distinct
/// exemplars of `training` (by tensor identity).
ExemplarBaseline make_exemplar_baseline(const std::vector<simnet::Episode>& training, const HogConfig& hog,
                                        const ExemplarClfConfig& clf, std::size_t max_negatives);

/// Trains one classifier per episode exemplar and scans its target.
/// `unconverged`, when given, receives the number of fits that hit the
/// iteration cap.
std::vector<eval::SimilarityMap> exemplar_score_episodes(const std::vector<simnet::Episode>& episodes,
                                                         const ExemplarBaseline& baseline, std::size_t workers,
                                                         std::size_t* unconverged = nullptr);

}  // namespace oneshot::baselines
