#include "oneshot/baselines/hog.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace oneshot::baselines {

namespace {

constexpr double kNormFloor = 1e-12;

void normalise(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq <= kNormFloor) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

}  // namespace

void validate(const HogConfig& config) {
  if (config.cell == 0 || config.bins == 0 || config.block == 0) {
    throw std::invalid_argument("hog cell, bins and block must be positive");
  }
  if (!(config.clip > 0.0)) throw std::invalid_argument("hog clip must be positive");
}

std::vector<double> hog_cells(const core::Tensor& image, const HogConfig& config) {
  validate(config);
  if (image.rank() != 3 || image.dim(0) != 1) throw std::invalid_argument("hog expects a [1, H, W] image");
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h % config.cell != 0 || w % config.cell != 0) {
    throw std::invalid_argument("hog: image " + std::to_string(h) + "x" + std::to_string(w) +
                                " is not divisible into " + std::to_string(config.cell) + "-pixel cells");
  }
  const std::size_t ch = h / config.cell, cw = w / config.cell, bins = config.bins;
  const double bin_width = 180.0 / static_cast<double>(bins);
  const auto v = image.values();
  std::vector<double> hist(ch * cw * bins, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double gx = (x == 0 || x + 1 == w) ? 0.0 : v[y * w + x + 1] - v[y * w + x - 1];
      const double gy = (y == 0 || y + 1 == h) ? 0.0 : v[(y + 1) * w + x] - v[(y - 1) * w + x];
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      // Split between the two nearest bin centres, wrapping at 180.
      const double pos = angle / bin_width;
      const auto lo = static_cast<std::size_t>(std::floor(pos)) % bins;
      const std::size_t hi = (lo + 1) % bins;
      const double frac = pos - std::floor(pos);
      double* cell = &hist[((y / config.cell) * cw + x / config.cell) * bins];
      cell[lo] += mag * (1.0 - frac);
      cell[hi] += mag * frac;
    }
  }
  return hist;
}

std::size_t hog_feature_length(std::size_t height, std::size_t width, const HogConfig& config) {
  validate(config);
  const std::size_t ch = height / config.cell, cw = width / config.cell;
  if (ch < config.block || cw < config.block) return 0;
  return (ch - config.block + 1) * (cw - config.block + 1) * config.block * config.block * config.bins;
}

std::vector<double> hog_features(const core::Tensor& image, const HogConfig& config) {
  const std::vector<double> cells = hog_cells(image, config);
  const std::size_t ch = image.dim(1) / config.cell, cw = image.dim(2) / config.cell, bins = config.bins;
  if (ch < config.block || cw < config.block) throw std::invalid_argument("hog: image smaller than one block");
  std::vector<double> out;
  out.reserve(hog_feature_length(image.dim(1), image.dim(2), config));
  std::vector<double> block(config.block * config.block * bins);
  for (std::size_t by = 0; by + config.block <= ch; ++by) {
    for (std::size_t bx = 0; bx + config.block <= cw; ++bx) {
      std::size_t k = 0;
      for (std::size_t dy = 0; dy < config.block; ++dy) {
        for (std::size_t dx = 0; dx < config.block; ++dx) {
          const double* cell = &cells[((by + dy) * cw + bx + dx) * bins];
          for (std::size_t b = 0; b < bins; ++b) block[k++] = cell[b];
        }
      }
      normalise(block);
      for (double& x : block) x = std::min(x, config.clip);
      normalise(block);
      out.insert(out.end(), block.begin(), block.end());
    }
  }
  return out;
}

}  // namespace oneshot::baselines
