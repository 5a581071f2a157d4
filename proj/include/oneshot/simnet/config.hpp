#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "oneshot/core/keyvalue.hpp"

namespace oneshot::simnet {

/// conv(kernel, stride) -> batch norm -> ReLU, then an optional 2/2 max pool.
struct LayerSpec {
  std::size_t channels = 32;
  std::size_t kernel = 5;
  std::size_t stride = 1;
  bool pool_after = false;
};

struct EmbedConfig {
  std::size_t spatial_rank = 2;
  std::size_t input_channels = 1;
  std::vector<LayerSpec> layers;
  double temperature = 1.0 / 3.0;
  /// Sequence exemplars are centre-padded or cropped to this many frames
  /// before embedding; 0 keeps them as given. Ignored for images.
  std::size_t exemplar_extent = 0;

  /// Four layers [32, 32, 64, 64], kernel 5, pool after layers 2 and 4.
  static EmbedConfig desk(std::size_t spatial_rank, std::size_t input_channels);
  /// Eight layers [256 x4, 512 x4], kernel 5, pool after every second layer.
  static EmbedConfig paper(std::size_t spatial_rank, std::size_t input_channels);
  static EmbedConfig preset(const std::string& name, std::size_t spatial_rank, std::size_t input_channels);
};

void validate(const EmbedConfig& config);

/// Output extent along one spatial axis, or 0 when `input_extent` is too
/// small for the layer stack.
std::size_t embedded_extent(const EmbedConfig& config, std::size_t input_extent);
/// Smallest input extent that yields a non-empty embedding.
std::size_t min_input_extent(const EmbedConfig& config);
/// Input-space distance between neighbouring embedding positions.
std::size_t total_stride(const EmbedConfig& config);
/// Input-space extent covered by `embedded` consecutive embedding positions.
std::size_t receptive_extent(const EmbedConfig& config, std::size_t embedded);

/// Layer list notation: comma-separated `<channels>k<kernel>s<stride>[p]`,
/// e.g. `32k5s1, 32k5s1p`.
std::string format_layers(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> parse_layers(const std::string& text);

/// Keys: spatial_rank, input_channels, layers, temperature, exemplar_extent.
core::KeyValues to_key_values(const EmbedConfig& config);
EmbedConfig from_key_values(const core::KeyValues& kv);
void save_config(const std::filesystem::path& path, const EmbedConfig& config);
EmbedConfig load_config(const std::filesystem::path& path);

}  // namespace oneshot::simnet
