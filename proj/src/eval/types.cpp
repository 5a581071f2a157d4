#include "oneshot/eval/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oneshot::eval {

double Box::volume() const {
  double v = 1.0;
  for (std::size_t axis = 0; axis < rank; ++axis) v *= std::max(extent[axis], 0.0);
  return v;
}

bool Box::valid() const {
  if (rank != 1 && rank != 2) return false;
  for (std::size_t axis = 0; axis < rank; ++axis) {
    if (!std::isfinite(offset[axis]) || !(extent[axis] > 0.0)) return false;
  }
  return true;
}

double iou(const Box& a, const Box& b) {
  if (a.rank != b.rank) return 0.0;
  double inter = 1.0;
  for (std::size_t axis = 0; axis < a.rank; ++axis) {
    const double lo = std::max(a.offset[axis], b.offset[axis]);
    const double hi = std::min(a.end(axis), b.end(axis));
    inter *= std::max(hi - lo, 0.0);
  }
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::size_t argmax_location(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("argmax_location: empty score vector");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double pooled_confidence(const SimilarityMap& map) {
  if (map.scores.empty()) throw std::invalid_argument("pooled_confidence: empty similarity map");
  if (map.pooling == Pooling::kMax) return map.scores[argmax_location(map.scores)];
  if (!(map.temperature > 0.0)) throw std::invalid_argument("pooled_confidence: temperature must be positive");
  const double peak = map.scores[argmax_location(map.scores)];
  std::vector<double> w(map.scores.size());
  double total = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    w[l] = std::exp((map.scores[l] - peak) / map.temperature);
    total += w[l];
  }
  double y_hat = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) y_hat += w[l] / total * map.scores[l];
  return y_hat;
}

}  // namespace oneshot::eval
