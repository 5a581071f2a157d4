#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oneshot/core/tensor.hpp"
#include "oneshot/eval/types.hpp"

namespace oneshot::synth {

inline constexpr std::size_t kGlyphSize = 32;

using Point = std::array<double, 2>;

/// A stroke in unit-square coordinates (x right, y down). Arcs are stored
/// as their polyline tessellation so both kinds jitter and render alike.
struct Stroke {
  enum class Kind { kPolyline, kArc };
  Kind kind = Kind::kPolyline;
  std::vector<Point> points;
};

struct GlyphClass {
  std::uint64_t class_seed = 0;
  std::vector<Stroke> strokes;
};

/// Instance variation applied by render_glyph.
struct GlyphStyle {
  double max_rotation_deg = 10.0;
  double min_scale = 0.9;
  double max_scale = 1.1;
  double max_shift_px = 2.0;
  /// Per-control-point displacement std in unit coordinates.
  double point_jitter = 0.015;
  double min_half_width_px = 0.9;
  double max_half_width_px = 1.5;
  double noise_std = 0.05;
};

/// Deterministic stroke program for a class: 2-4 strokes, each a polyline
/// of 2-4 points or an arc.
GlyphClass make_glyph_class(std::uint64_t class_seed);

/// [1, 32, 32] image in [0, 1]: ink 1 on background 0, anti-aliased by
/// distance to the stroke centre line, then additive Gaussian noise.
core::Tensor render_glyph(const GlyphClass& glyph, std::uint64_t instance_seed, const GlyphStyle& style = {});

/// Source of instance images per class: synthetic glyphs or a loaded
/// corpus. Instance k of a class is a pure function of (class, k).
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::size_t num_classes() const = 0;
  /// Instances per class; 0 means unbounded.
  virtual std::size_t instances(std::size_t class_index) const = 0;
  virtual core::Tensor instance(std::size_t class_index, std::uint64_t k) const = 0;
};

class SyntheticGlyphs final : public ImageSource {
 public:
  SyntheticGlyphs(std::size_t num_classes, std::uint64_t seed, GlyphStyle style = {});
  std::size_t num_classes() const override { return classes_.size(); }
  std::size_t instances(std::size_t) const override { return 0; }
  core::Tensor instance(std::size_t class_index, std::uint64_t k) const override;
  const GlyphClass& glyph(std::size_t class_index) const { return classes_.at(class_index); }

 private:
  std::vector<GlyphClass> classes_;
  GlyphStyle style_;
};

struct Cell {
  std::int64_t class_id = 0;
  std::uint64_t instance = 0;
  eval::Box box;
};

struct TiledTarget {
  core::Tensor image;
  std::vector<Cell> cells;
  std::size_t n = 0;
};

/// n x n grid of 32 x 32 instances. `class_ids[i]` is drawn with instance
/// `instances[i]`; cells are placed in an order permuted by `layout_seed`.
/// Rejects duplicate class ids and n outside {1, ..., 8}.
TiledTarget tile_target(const ImageSource& source, std::span<const std::int64_t> class_ids,
                        std::span<const std::uint64_t> instances, std::size_t n, std::uint64_t layout_seed);

}  // namespace oneshot::synth
