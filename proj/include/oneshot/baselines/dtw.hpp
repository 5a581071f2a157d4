#pragma once

#include <vector>

#include "oneshot/core/tensor.hpp"
#include "oneshot/eval/types.hpp"
#include "oneshot/simnet/episode.hpp"

namespace oneshot::baselines {

struct DtwConfig {
  /// Scale of the cost-to-similarity map exp(-C / sigma).
  double sigma = 50.0;
  /// Frames between consecutive candidate starts.
  std::size_t step = 4;
  /// Candidate segment lengths as multiples of the keyword length.
  std::vector<double> length_factors{0.75, 1.0, 1.25};
};

void validate(const DtwConfig& config);

/// Euclidean distance between frame i of a and frame j of b; both [C, L].
double frame_distance(const core::Tensor& a, std::size_t i, const core::Tensor& b, std::size_t j);

/// Minimal cumulative frame distance over monotone alignments of a and b
/// with steps (1,0), (0,1), (1,1), starting at (0,0) and ending at the last
/// frames of both.
double dtw_cost(const core::Tensor& a, const core::Tensor& b);

/// Reference answer by enumerating every alignment path; exponential, for
/// lengths up to about 6.
double dtw_cost_brute_force(const core::Tensor& a, const core::Tensor& b);

double dtw_similarity(double cost, double sigma);

/// One location per candidate start. Its score is the best similarity over
/// the candidate lengths that fit, and its box that segment. Max pooling.
eval::SimilarityMap dtw_scan(const core::Tensor& keyword, const core::Tensor& utterance, const DtwConfig& config);

std::vector<eval::SimilarityMap> dtw_score_episodes(const std::vector<simnet::Episode>& episodes, const DtwConfig& config,
                                                    std::size_t workers);

}  // namespace oneshot::baselines
