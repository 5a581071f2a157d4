#include "oneshot/synth/glyph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "oneshot/core/random.hpp"

namespace oneshot::synth {

namespace {

constexpr std::uint64_t kStrokeTag = 0x7374726f6b65ULL;
constexpr std::uint64_t kInstanceTag = 0x696e7374ULL;
constexpr std::uint64_t kLayoutTag = 0x6c61796f7574ULL;
constexpr std::size_t kArcSegments = 12;
// Unit-square coordinates map onto this many pixels, leaving a margin for
// jitter inside the 32-pixel cell.
constexpr double kGlyphSpan = 26.0;

double clamp_unit(double v) { return std::clamp(v, 0.1, 0.9); }

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len_sq = dx * dx + dy * dy;
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len_sq, 0.0, 1.0);
  const double ex = a[0] + t * dx - p[0], ey = a[1] + t * dy - p[1];
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

GlyphClass make_glyph_class(std::uint64_t class_seed) {
  core::Rng rng(core::mix_seed({class_seed, kStrokeTag}));
  GlyphClass glyph;
  glyph.class_seed = class_seed;
  const auto count = core::uniform_int(rng, 2, 4);
  for (std::int64_t s = 0; s < count; ++s) {
    Stroke stroke;
    if (core::uniform(rng) < 0.35) {
      stroke.kind = Stroke::Kind::kArc;
      const Point centre{core::uniform(rng, 0.3, 0.7), core::uniform(rng, 0.3, 0.7)};
      const double radius = core::uniform(rng, 0.15, 0.3);
      const double start = core::uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double sweep = core::uniform(rng, 0.5, 1.5) * std::numbers::pi;
      for (std::size_t i = 0; i <= kArcSegments; ++i) {
        const double a = start + sweep * static_cast<double>(i) / kArcSegments;
        stroke.points.push_back({clamp_unit(centre[0] + radius * std::cos(a)), clamp_unit(centre[1] + radius * std::sin(a))});
      }
    } else {
      const auto points = core::uniform_int(rng, 2, 4);
      Point p{core::uniform(rng, 0.1, 0.9), core::uniform(rng, 0.1, 0.9)};
      stroke.points.push_back(p);
      for (std::int64_t i = 1; i < points; ++i) {
        const double angle = core::uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double step = core::uniform(rng, 0.25, 0.6);
        p = {clamp_unit(p[0] + step * std::cos(angle)), clamp_unit(p[1] + step * std::sin(angle))};
        stroke.points.push_back(p);
      }
    }
    glyph.strokes.push_back(std::move(stroke));
  }
  return glyph;
}

core::Tensor render_glyph(const GlyphClass& glyph, std::uint64_t instance_seed, const GlyphStyle& style) {
  core::Rng rng(core::mix_seed({glyph.class_seed, kInstanceTag, instance_seed}));
  const double theta = core::uniform(rng, -style.max_rotation_deg, style.max_rotation_deg) * std::numbers::pi / 180.0;
  const double scale = core::uniform(rng, style.min_scale, style.max_scale);
  const double tx = core::uniform(rng, -style.max_shift_px, style.max_shift_px);
  const double ty = core::uniform(rng, -style.max_shift_px, style.max_shift_px);
  const double half_width = core::uniform(rng, style.min_half_width_px, style.max_half_width_px);
  const double c = std::cos(theta), s = std::sin(theta);
  const double mid = kGlyphSize / 2.0;

  std::vector<std::vector<Point>> lines;
  for (const Stroke& stroke : glyph.strokes) {
    // A shared per-stroke offset plus smaller per-point wobble keeps arcs
    // smooth while still moving every control point.
    const double ox = core::normal(rng, 0.0, style.point_jitter);
    const double oy = core::normal(rng, 0.0, style.point_jitter);
    std::vector<Point> line;
    for (const Point& u : stroke.points) {
      const double jx = u[0] + ox + core::normal(rng, 0.0, style.point_jitter / 2.0) - 0.5;
      const double jy = u[1] + oy + core::normal(rng, 0.0, style.point_jitter / 2.0) - 0.5;
      const double px = scale * kGlyphSpan * (c * jx - s * jy);
      const double py = scale * kGlyphSpan * (s * jx + c * jy);
      line.push_back({mid + px + tx, mid + py + ty});
    }
    lines.push_back(std::move(line));
  }

  core::Tensor image({1, kGlyphSize, kGlyphSize});
  auto v = image.values();
  for (std::size_t y = 0; y < kGlyphSize; ++y) {
    for (std::size_t x = 0; x < kGlyphSize; ++x) {
      const Point p{static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5};
      double d = 1e9;
      for (const auto& line : lines) {
        for (std::size_t i = 0; i + 1 < line.size(); ++i) d = std::min(d, segment_distance(p, line[i], line[i + 1]));
      }
      const double ink = std::clamp(half_width + 0.5 - d, 0.0, 1.0);
      v[y * kGlyphSize + x] = std::clamp(ink + core::normal(rng, 0.0, style.noise_std), 0.0, 1.0);
    }
  }
  return image;
}

SyntheticGlyphs::SyntheticGlyphs(std::size_t num_classes, std::uint64_t seed, GlyphStyle style) : style_(style) {
  if (num_classes == 0) throw std::invalid_argument("SyntheticGlyphs: need at least one class");
  for (std::size_t i = 0; i < num_classes; ++i) classes_.push_back(make_glyph_class(core::mix_seed({seed, 0x676c797068ULL, i})));
}

core::Tensor SyntheticGlyphs::instance(std::size_t class_index, std::uint64_t k) const {
  return render_glyph(classes_.at(class_index), k, style_);
}

TiledTarget tile_target(const ImageSource& source, std::span<const std::int64_t> class_ids,
                        std::span<const std::uint64_t> instances, std::size_t n, std::uint64_t layout_seed) {
  if (n == 0 || n > 8) throw std::invalid_argument("tile_target: grid size must be in 1..8, got " + std::to_string(n));
  if (class_ids.size() != n * n || instances.size() != n * n) {
    throw std::invalid_argument("tile_target: need exactly n^2 = " + std::to_string(n * n) + " classes and instances");
  }
  if (std::set<std::int64_t>(class_ids.begin(), class_ids.end()).size() != class_ids.size()) {
    throw std::invalid_argument("tile_target: class ids must be distinct");
  }
  std::vector<std::size_t> slot(n * n);
  std::iota(slot.begin(), slot.end(), std::size_t{0});
  core::Rng rng(core::mix_seed({layout_seed, kLayoutTag}));
  std::shuffle(slot.begin(), slot.end(), rng);

  const std::size_t side = n * kGlyphSize;
  TiledTarget out;
  out.n = n;
  out.image = core::Tensor({1, side, side});
  auto dst = out.image.values();
  for (std::size_t i = 0; i < n * n; ++i) {
    const std::size_t row = slot[i] / n, col = slot[i] % n;
    const core::Tensor glyph = source.instance(static_cast<std::size_t>(class_ids[i]), instances[i]);
    if (glyph.shape() != core::Shape{1, kGlyphSize, kGlyphSize}) {
      throw std::invalid_argument("tile_target: instances must be [1, 32, 32]");
    }
    const auto src = glyph.values();
    for (std::size_t y = 0; y < kGlyphSize; ++y) {
      std::copy_n(src.begin() + y * kGlyphSize, kGlyphSize,
                  dst.begin() + (row * kGlyphSize + y) * side + col * kGlyphSize);
    }
    out.cells.push_back(Cell{class_ids[i], instances[i],
                             eval::Box::rect(static_cast<double>(row * kGlyphSize), static_cast<double>(col * kGlyphSize),
                                             kGlyphSize, kGlyphSize)});
  }
  return out;
}

}  // namespace oneshot::synth
