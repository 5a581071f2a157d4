#pragma once

#include <vector>

#include "oneshot/core/tensor.hpp"

namespace oneshot::baselines {

struct HogConfig {
  std::size_t cell = 4;
  /// Unsigned orientation bins over [0, 180) degrees, centred at i * 180 / bins.
  std::size_t bins = 9;
  /// Blocks are block x block cells, stepped by one cell.
  std::size_t block = 2;
  /// L2-Hys clipping level.
  double clip = 0.2;
};

void validate(const HogConfig& config);

/// Per-cell orientation histograms of gradient magnitude for a [1, H, W]
/// image, cells in row-major order, `bins` entries each. Gradients are
/// centred differences and zero on the image border.
std::vector<double> hog_cells(const core::Tensor& image, const HogConfig& config = {});

/// Block-normalised descriptor: every block x block group of cells,
/// L2-normalised, clipped at `clip`, renormalised. All-zero blocks stay zero.
std::vector<double> hog_features(const core::Tensor& image, const HogConfig& config = {});

std::size_t hog_feature_length(std::size_t height, std::size_t width, const HogConfig& config = {});

}  // namespace oneshot::baselines
