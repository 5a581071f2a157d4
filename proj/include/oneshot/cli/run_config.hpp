#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oneshot/baselines/dtw.hpp"
#include "oneshot/baselines/exemplar.hpp"
#include "oneshot/core/keyvalue.hpp"
#include "oneshot/core/params.hpp"
#include "oneshot/simnet/config.hpp"
#include "oneshot/synth/dataset.hpp"

namespace oneshot::cli {

struct TrainSettings {
  std::size_t epochs = 3;
  core::SgdConfig sgd{0.1, 16};
  /// Keep the checkpoint with the best validation AP rather than the last.
  bool select_on_validation = true;
  /// After selection, retrain from scratch for the selected number of
  /// epochs on training pairs plus pairs drawn from the validation classes.
  bool retrain_with_validation = false;
  /// The validation set used for selection; 0 means the first data.ways entry.
  std::size_t selection_ways = 0;
};

struct EvalSettings {
  double iou_threshold = 0.5;
  std::vector<double> recall_levels{0.5, 0.9, 0.99};
  std::vector<double> sweep_thresholds{0.2, 0.3, 0.4, 0.5};
  /// Search start/end shifts during calibration (intervals only).
  bool calibrate_shifts = true;
};

struct BaselineSettings {
  baselines::DtwConfig dtw;
  baselines::HogConfig hog;
  baselines::ExemplarClfConfig exemplar;
  std::size_t max_negatives = 1000;
};

/// A run is reproducible from this plus its seed (data.seed).
struct RunConfig {
  synth::DataConfig data;
  std::string preset = "desk";
  simnet::EmbedConfig model;
  TrainSettings train;
  EvalSettings eval;
  BaselineSettings baselines;
  /// 0 picks the hardware concurrency.
  std::size_t workers = 0;

  std::size_t worker_count() const;
};

/// Network for the data's input geometry: rank 2 with one channel for
/// images, rank 1 with data.sequence.channels for sequences.
simnet::EmbedConfig model_for(const synth::DataConfig& data, const std::string& preset);

RunConfig default_run_config(synth::Track track);

/// Unknown keys are rejected so that typos cannot silently fall back to
/// defaults. Keys: see write_run_config.
RunConfig read_run_config(const core::KeyValues& kv);
core::KeyValues write_run_config(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

void validate(const RunConfig& config);

}  // namespace oneshot::cli
