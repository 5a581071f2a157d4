#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oneshot/cli/run_config.hpp"
#include "oneshot/eval/io.hpp"
#include "oneshot/simnet/episode.hpp"

namespace oneshot::cli {

enum class ModelKind { kSimnet, kDtw, kExemplar, kRandom };

ModelKind parse_model(const std::string& name);
std::string model_name(ModelKind kind);

std::vector<std::int64_t> episode_ids(const std::vector<simnet::Episode>& episodes);
std::vector<eval::GroundTruth> ground_truths(const std::vector<simnet::Episode>& episodes);

/// Everything a scorer may need besides the episodes themselves.
struct ScoringContext {
  const RunConfig* config = nullptr;
  /// Trained weights (simnet only).
  const core::ParamStore* params = nullptr;
  /// Training episodes, the negative pool of the exemplar classifier.
  const std::vector<simnet::Episode>* training = nullptr;
  /// Seed of the random detector; also distinguishes sets.
  std::uint64_t seed = 0;
};

/// One similarity map per episode. Model/track mismatches throw.
std::vector<eval::SimilarityMap> score_with(ModelKind kind, const std::vector<simnet::Episode>& episodes,
                                            const ScoringContext& context);

/// Uniform random scores over the location grid a similarity network would
/// produce, pooled by max: a detector with no information.
std::vector<eval::SimilarityMap> random_maps(const std::vector<simnet::Episode>& episodes, const simnet::EmbedConfig& model,
                                             std::uint64_t seed);

/// AP of the validation maps at the configured IoU with no postprocessing.
double raw_ap(const std::vector<simnet::Episode>& episodes, const std::vector<eval::SimilarityMap>& maps,
              double iou_threshold);

struct SetEvaluation {
  eval::SetReport report;
  std::vector<eval::Detection> detections;
  std::vector<eval::GroundTruth> truths;
};

/// Calibrates on the validation maps, then reports the test set.
SetEvaluation evaluate_set(const std::string& name, std::size_t N, const std::vector<simnet::Episode>& validation,
                           const std::vector<eval::SimilarityMap>& validation_maps,
                           const std::vector<simnet::Episode>& test, const std::vector<eval::SimilarityMap>& test_maps,
                           const RunConfig& config);

struct LossRow {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
};

struct TrainState {
  core::ParamStore params;
  core::ParamStore best;
  std::size_t epochs_done = 0;
  std::size_t best_epoch = 0;
  double best_validation_ap = -1.0;
  std::vector<LossRow> losses;
  std::vector<double> validation_ap;
};

TrainState initial_state(const RunConfig& config);

/// Runs epochs epochs_done+1 .. config.train.epochs. After each epoch the
/// validation set is scored; the best AP (first on ties) is kept in `best`.
/// `on_epoch` runs after every epoch, e.g. to write checkpoints.
void train_simnet(const RunConfig& config, const std::vector<simnet::Episode>& training,
                  const std::vector<simnet::Episode>& validation, TrainState& state, std::ostream* log,
                  const std::function<void(const TrainState&)>& on_epoch = {});

/// Checkpoint of the full training state: parameters, then "meta.*"
/// scalars. The best parameters go to a separate plain checkpoint.
void save_train_state(const std::filesystem::path& directory, const TrainState& state);
TrainState load_train_state(const std::filesystem::path& directory, const RunConfig& config);

}  // namespace oneshot::cli
