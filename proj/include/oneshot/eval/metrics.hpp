#pragma once

#include <utility>
#include <vector>

#include "oneshot/eval/types.hpp"

namespace oneshot::eval {

/// Emission threshold t and, for intervals only, start/end shifts in frames.
struct PostprocessParams {
  double threshold = 0.0;
  double shift_start = 0.0;
  double shift_end = 0.0;

  bool operator==(const PostprocessParams&) const = default;
};

void validate(const PostprocessParams& params);

/// The single candidate of one episode: the argmax location's box, with the
/// pooled confidence.
Detection candidate(std::int64_t episode_id, const SimilarityMap& map);

/// Candidates with confidence > t. Interval boxes become
/// [start + a, end + b) clamped to [0, target length); shifts never apply to
/// rectangles.
std::vector<Detection> emit_detections(const std::vector<std::int64_t>& episode_ids, const std::vector<SimilarityMap>& maps,
                                       const PostprocessParams& params);

/// Ranking used by every metric: confidence descending, then episode id.
void sort_detections(std::vector<Detection>& detections);

/// Pooled all-point-interpolated AP. A detection is a true positive iff its
/// episode is positive, its IoU with the unmatched truth box is >= the
/// threshold. Recall is relative to the number of positive episodes; with
/// none the AP is 0.
double average_precision(std::vector<Detection> detections, const std::vector<GroundTruth>& truths, double iou_threshold);

/// Reference AP: for each distinct reachable recall level, the best
/// precision over every confidence cut reaching it. Quadratic.
double average_precision_brute_force(const std::vector<Detection>& detections, const std::vector<GroundTruth>& truths,
                                     double iou_threshold);

/// Precision/recall after each rank, ranked as in sort_detections.
std::vector<std::pair<double, double>> pr_curve(std::vector<Detection> detections, const std::vector<GroundTruth>& truths,
                                                double iou_threshold);

/// Pair-classification view: every detection counts as correct iff its
/// episode label is 1, boxes ignored. For each level, the envelope precision
/// at the first rank whose recall reaches it, or 0 if none does.
std::vector<double> precision_at_recall(std::vector<Detection> scored, const std::vector<GroundTruth>& truths,
                                        const std::vector<double>& levels);

std::vector<double> ap_iou_sweep(const std::vector<Detection>& detections, const std::vector<GroundTruth>& truths,
                                 const std::vector<double>& thresholds);

struct CalibrationGrid {
  std::vector<double> thresholds;
  std::vector<double> shifts;
};

/// t in {0, 0.05, ..., 0.95}; shifts {-5, ..., 5} frames when `with_shifts`.
CalibrationGrid default_grid(bool with_shifts);

struct Calibration {
  PostprocessParams params;
  double ap = 0.0;
};

/// Grid search maximising AP at `iou_threshold`. Ties: t = 0 only when
/// strictly best, otherwise the smallest t > 0, then the smallest |a| + |b|,
/// then the smallest (a, b) lexicographically.
Calibration calibrate_postprocess(const std::vector<std::int64_t>& episode_ids, const std::vector<SimilarityMap>& maps,
                                  const std::vector<GroundTruth>& truths, const CalibrationGrid& grid,
                                  double iou_threshold);

}  // namespace oneshot::eval
