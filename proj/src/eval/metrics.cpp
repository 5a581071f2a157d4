#include "oneshot/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace oneshot::eval {

namespace {

using TruthIndex = std::map<std::int64_t, const GroundTruth*>;

TruthIndex index_truths(const std::vector<GroundTruth>& truths) {
  TruthIndex index;
  for (const auto& t : truths) {
    if (!index.emplace(t.episode_id, &t).second) {
      throw std::invalid_argument("ground truth lists episode " + std::to_string(t.episode_id) + " twice");
    }
  }
  return index;
}

std::size_t count_positives(const std::vector<GroundTruth>& truths) {
  return static_cast<std::size_t>(std::count_if(truths.begin(), truths.end(), [](const auto& t) { return t.label == 1; }));
}

const GroundTruth& lookup(const TruthIndex& index, std::int64_t id) {
  const auto it = index.find(id);
  if (it == index.end()) throw std::invalid_argument("detection for unknown episode " + std::to_string(id));
  return *it->second;
}

// True-positive flags in ranked order.
std::vector<bool> match(const std::vector<Detection>& ranked, const TruthIndex& index, double iou_threshold) {
  std::set<std::int64_t> matched;
  std::vector<bool> tp(ranked.size(), false);
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const GroundTruth& t = lookup(index, ranked[k].episode_id);
    if (t.label != 1 || !t.box || matched.count(t.episode_id)) continue;
    if (iou(ranked[k].box, *t.box) >= iou_threshold) {
      tp[k] = true;
      matched.insert(t.episode_id);
    }
  }
  return tp;
}

double envelope_ap(const std::vector<bool>& tp, std::size_t positives) {
  if (positives == 0) return 0.0;
  const std::size_t n = tp.size();
  std::vector<double> precision(n), recall(n);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    hits += tp[k];
    precision[k] = static_cast<double>(hits) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(hits) / static_cast<double>(positives);
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (recall[k] > prev_recall) {
      ap += (recall[k] - prev_recall) * precision[k];
      prev_recall = recall[k];
    }
  }
  return ap;
}

bool better_tie(const PostprocessParams& a, const PostprocessParams& b) {
  // Is a preferred over b at equal AP?
  const bool a_zero = a.threshold == 0.0, b_zero = b.threshold == 0.0;
  if (a_zero != b_zero) return !a_zero;
  if (a.threshold != b.threshold) return a.threshold < b.threshold;
  const double ma = std::abs(a.shift_start) + std::abs(a.shift_end), mb = std::abs(b.shift_start) + std::abs(b.shift_end);
  if (ma != mb) return ma < mb;
  if (a.shift_start != b.shift_start) return a.shift_start < b.shift_start;
  return a.shift_end < b.shift_end;
}

}  // namespace

void validate(const PostprocessParams& params) {
  if (!(params.threshold >= 0.0 && params.threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
  if (!std::isfinite(params.shift_start) || !std::isfinite(params.shift_end)) {
    throw std::invalid_argument("shifts must be finite");
  }
}

Detection candidate(std::int64_t episode_id, const SimilarityMap& map) {
  if (map.scores.size() != map.boxes.size()) throw std::invalid_argument("similarity map scores and boxes differ in size");
  return Detection{episode_id, map.boxes[argmax_location(map.scores)], pooled_confidence(map)};
}

std::vector<Detection> emit_detections(const std::vector<std::int64_t>& episode_ids, const std::vector<SimilarityMap>& maps,
                                       const PostprocessParams& params) {
  validate(params);
  if (episode_ids.size() != maps.size()) throw std::invalid_argument("emit_detections: one map per episode required");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    Detection d = candidate(episode_ids[i], maps[i]);
    if (!(d.confidence > params.threshold)) continue;
    if (d.box.rank == 1 && (params.shift_start != 0.0 || params.shift_end != 0.0)) {
      const double limit = maps[i].target_extent[0] > 0.0 ? maps[i].target_extent[0] : d.box.end(0) + params.shift_end;
      const double start = std::clamp(d.box.offset[0] + params.shift_start, 0.0, limit);
      const double end = std::clamp(d.box.end(0) + params.shift_end, 0.0, limit);
      d.box = Box::interval(start, std::max(end - start, 0.0));
    }
    out.push_back(d);
  }
  return out;
}

void sort_detections(std::vector<Detection>& detections) {
  std::sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.episode_id < b.episode_id;
  });
}

double average_precision(std::vector<Detection> detections, const std::vector<GroundTruth>& truths, double iou_threshold) {
  const TruthIndex index = index_truths(truths);
  sort_detections(detections);
  return envelope_ap(match(detections, index, iou_threshold), count_positives(truths));
}

double average_precision_brute_force(const std::vector<Detection>& detections, const std::vector<GroundTruth>& truths,
                                     double iou_threshold) {
  const TruthIndex index = index_truths(truths);
  const std::size_t positives = count_positives(truths);
  if (positives == 0) return 0.0;
  // Each cut keeps the detections ranked at or above one detection; TP
  // status is decided with matching restricted to the kept set.
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  for (const Detection& cut : detections) {
    std::vector<Detection> kept;
    for (const Detection& d : detections) {
      if (d.confidence > cut.confidence || (d.confidence == cut.confidence && d.episode_id <= cut.episode_id)) {
        kept.push_back(d);
      }
    }
    sort_detections(kept);
    const std::vector<bool> tp = match(kept, index, iou_threshold);
    const auto hits = static_cast<std::size_t>(std::count(tp.begin(), tp.end(), true));
    points.emplace_back(static_cast<double>(hits) / static_cast<double>(positives),
                        static_cast<double>(hits) / static_cast<double>(kept.size()));
  }
  std::set<double> levels;
  for (const auto& [r, p] : points) {
    if (r > 0.0) levels.insert(r);
  }
  double ap = 0.0, prev = 0.0;
  for (double level : levels) {
    double best = 0.0;
    for (const auto& [r, p] : points) {
      if (r >= level) best = std::max(best, p);
    }
    ap += (level - prev) * best;
    prev = level;
  }
  return ap;
}

std::vector<std::pair<double, double>> pr_curve(std::vector<Detection> detections, const std::vector<GroundTruth>& truths,
                                                double iou_threshold) {
  const TruthIndex index = index_truths(truths);
  sort_detections(detections);
  const std::vector<bool> tp = match(detections, index, iou_threshold);
  const std::size_t positives = count_positives(truths);
  std::vector<std::pair<double, double>> curve;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    hits += tp[k];
    curve.emplace_back(positives ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0,
                       static_cast<double>(hits) / static_cast<double>(k + 1));
  }
  return curve;
}

std::vector<double> precision_at_recall(std::vector<Detection> scored, const std::vector<GroundTruth>& truths,
                                        const std::vector<double>& levels) {
  const TruthIndex index = index_truths(truths);
  sort_detections(scored);
  const std::size_t positives = count_positives(truths);
  const std::size_t n = scored.size();
  std::vector<double> precision(n), recall(n);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    hits += lookup(index, scored[k].episode_id).label == 1;
    precision[k] = static_cast<double>(hits) / static_cast<double>(k + 1);
    recall[k] = positives ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0;
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  std::vector<double> out;
  for (double level : levels) {
    double value = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (positives && recall[k] >= level) {
        value = precision[k];
        break;
      }
    }
    out.push_back(value);
  }
  return out;
}

std::vector<double> ap_iou_sweep(const std::vector<Detection>& detections, const std::vector<GroundTruth>& truths,
                                 const std::vector<double>& thresholds) {
  std::vector<double> out;
  for (double t : thresholds) out.push_back(average_precision(detections, truths, t));
  return out;
}

CalibrationGrid default_grid(bool with_shifts) {
  CalibrationGrid grid;
  for (int i = 0; i < 20; ++i) grid.thresholds.push_back(i / 20.0);
  if (with_shifts) {
    for (int s = -5; s <= 5; ++s) grid.shifts.push_back(s);
  } else {
    grid.shifts = {0.0};
  }
  return grid;
}

Calibration calibrate_postprocess(const std::vector<std::int64_t>& episode_ids, const std::vector<SimilarityMap>& maps,
                                  const std::vector<GroundTruth>& truths, const CalibrationGrid& grid,
                                  double iou_threshold) {
  if (count_positives(truths) == 0) throw std::invalid_argument("calibration needs at least one positive episode");
  if (grid.thresholds.empty()) throw std::invalid_argument("calibration grid has no thresholds");
  const std::vector<double> shifts = grid.shifts.empty() ? std::vector<double>{0.0} : grid.shifts;
  Calibration best;
  bool have = false;
  for (double t : grid.thresholds) {
    for (double a : shifts) {
      for (double b : shifts) {
        const PostprocessParams p{t, a, b};
        const double ap = average_precision(emit_detections(episode_ids, maps, p), truths, iou_threshold);
        if (!have || ap > best.ap || (ap == best.ap && better_tie(p, best.params))) {
          best = Calibration{p, ap};
          have = true;
        }
      }
    }
  }
  return best;
}

}  // namespace oneshot::eval
