#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oneshot::eval {

/// Axis-aligned box in input units (pixels or frames). Axis 0 is the row
/// axis for images and the time axis for sequences.
struct Box {
  std::size_t rank = 1;
  std::array<double, 2> offset{};
  std::array<double, 2> extent{};

  static Box interval(double start, double length) { return Box{1, {start, 0.0}, {length, 0.0}}; }
  static Box rect(double row, double col, double height, double width) {
    return Box{2, {row, col}, {height, width}};
  }

  double end(std::size_t axis) const { return offset[axis] + extent[axis]; }
  double volume() const;
  bool valid() const;
  bool operator==(const Box&) const = default;
};

/// |a ∩ b| / |a ∪ b|; 0 when the union is empty or ranks differ.
double iou(const Box& a, const Box& b);

enum class Pooling { kMax, kAttention };

/// Per-location scores of one exemplar against one target, with the
/// input-space box each location covers.
struct SimilarityMap {
  std::vector<double> scores;
  std::vector<Box> boxes;
  /// How the pair confidence is derived from the scores.
  Pooling pooling = Pooling::kMax;
  double temperature = 1.0 / 3.0;
  /// Input extents of the target, used to clamp shifted boxes.
  std::array<double, 2> target_extent{};
};

std::size_t argmax_location(const std::vector<double>& scores);
/// Pair confidence: max score, or the attention-weighted mean.
double pooled_confidence(const SimilarityMap& map);

struct Detection {
  std::int64_t episode_id = 0;
  Box box;
  double confidence = 0.0;
};

struct GroundTruth {
  std::int64_t episode_id = 0;
  int label = 0;
  std::optional<Box> box;
};

}  // namespace oneshot::eval
