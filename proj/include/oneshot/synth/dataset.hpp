#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oneshot/core/keyvalue.hpp"
#include "oneshot/synth/episodes.hpp"

namespace oneshot::synth {

/// Everything needed to regenerate a dataset bit for bit.
struct DataConfig {
  Track track = Track::kImage;
  std::uint64_t seed = 1;
  std::size_t train_classes = 60;
  std::size_t validation_classes = 20;
  std::size_t test_classes = 20;
  /// Glyph grid side of image targets.
  std::size_t n = 2;
  /// One validation and one test set per entry.
  std::vector<std::size_t> ways{5};
  std::size_t train_pairs = 2000;
  std::size_t validation_targets = 60;
  std::size_t test_targets = 100;
  /// Class-per-folder corpus replacing the synthetic glyphs when set.
  std::string image_dir;
  GlyphStyle glyph;
  SequenceStyle sequence;
};

/// Track-specific defaults: 5-way image sets, 10-way sequence sets.
DataConfig default_data_config(Track track);
void validate(const DataConfig& config);

/// Keys live under `data.` plus the shared `track` and `seed`.
void write_data_config(const DataConfig& config, core::KeyValues& kv);
/// Unset keys take the defaults of the configured track.
DataConfig read_data_config(const core::KeyValues& kv);

std::string validation_set_name(std::size_t N);
std::string test_set_name(std::size_t N);

struct Dataset {
  DataConfig config;
  SplitSpec split;
  /// "train", "validation_<N>way", "test_<N>way".
  std::map<std::string, std::vector<simnet::Episode>> sets;
};

Generator make_generator(const DataConfig& config);
Dataset build_dataset(const DataConfig& config);

/// Layout: manifest.json, and per set <name>.json (episode table) plus
/// <name>.bin (tensors "target.<target_index>" and "exemplar.<id>").
void save_dataset(const std::filesystem::path& directory, const Dataset& dataset);

struct Manifest {
  DataConfig config;
  SplitSpec split;
  std::map<std::string, std::size_t> set_sizes;
};

Manifest load_manifest(const std::filesystem::path& directory);
/// Episodes sharing a target index share one tensor handle after loading.
std::vector<simnet::Episode> load_episode_set(const std::filesystem::path& directory, const std::string& name);

}  // namespace oneshot::synth
