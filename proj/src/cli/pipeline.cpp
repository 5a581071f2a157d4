#include "oneshot/cli/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "oneshot/core/random.hpp"
#include "oneshot/simnet/network.hpp"
#include "oneshot/simnet/train.hpp"

namespace oneshot::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kTrainSeedTag = 0x73676473ULL;

void require_track(const std::vector<simnet::Episode>& episodes, std::size_t rank, const std::string& what) {
  for (const auto& e : episodes) {
    if (e.target.rank() != rank + 1) throw std::invalid_argument(what);
  }
}

core::Tensor scalar(double v) { return core::Tensor({1}, {v}); }

}  // namespace

ModelKind parse_model(const std::string& name) {
  if (name == "simnet") return ModelKind::kSimnet;
  if (name == "dtw") return ModelKind::kDtw;
  if (name == "exemplar") return ModelKind::kExemplar;
  if (name == "random") return ModelKind::kRandom;
  throw std::invalid_argument("unknown model '" + name + "' (expected simnet, dtw, exemplar or random)");
}

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kSimnet: return "simnet";
    case ModelKind::kDtw: return "dtw";
    case ModelKind::kExemplar: return "exemplar";
    case ModelKind::kRandom: return "random";
  }
  return "unknown";
}

std::vector<std::int64_t> episode_ids(const std::vector<simnet::Episode>& episodes) {
  std::vector<std::int64_t> ids;
  for (const auto& e : episodes) ids.push_back(e.id);
  return ids;
}

std::vector<eval::GroundTruth> ground_truths(const std::vector<simnet::Episode>& episodes) {
  std::vector<eval::GroundTruth> truths;
  for (const auto& e : episodes) truths.push_back(eval::GroundTruth{e.id, e.label, e.truth_box});
  return truths;
}

std::vector<eval::SimilarityMap> random_maps(const std::vector<simnet::Episode>& episodes, const simnet::EmbedConfig& model,
                                             std::uint64_t seed) {
  std::vector<eval::SimilarityMap> maps;
  for (const auto& e : episodes) {
    core::Rng rng(core::mix_seed({seed, static_cast<std::uint64_t>(e.id)}));
    const simnet::MapGeometry geo = simnet::map_geometry(model, e.exemplar.shape(), e.target.shape());
    eval::SimilarityMap map;
    map.pooling = eval::Pooling::kMax;
    auto locations = [&](std::size_t axis) {
      std::size_t ex = e.exemplar.dim(axis + 1);
      if (geo.rank == 1 && model.exemplar_extent) ex = model.exemplar_extent;
      return simnet::embedded_extent(model, e.target.dim(axis + 1)) - simnet::embedded_extent(model, ex) + 1;
    };
    const std::size_t rows = locations(0), cols = geo.rank == 2 ? locations(1) : 1;
    map.target_extent = geo.target_extent;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        map.scores.push_back(core::uniform(rng));
        const auto off_r = static_cast<double>(r * geo.stride), off_c = static_cast<double>(c * geo.stride);
        map.boxes.push_back(geo.rank == 2 ? eval::Box::rect(off_r, off_c, geo.box_extent[0], geo.box_extent[1])
                                          : eval::Box::interval(off_r, geo.box_extent[0]));
      }
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

std::vector<eval::SimilarityMap> score_with(ModelKind kind, const std::vector<simnet::Episode>& episodes,
                                            const ScoringContext& context) {
  if (!context.config) throw std::invalid_argument("score_with: missing run configuration");
  const RunConfig& cfg = *context.config;
  switch (kind) {
    case ModelKind::kSimnet:
      if (!context.params) throw std::invalid_argument("simnet scoring needs a checkpoint");
      return simnet::score_episodes(episodes, cfg.model, *context.params, cfg.worker_count());
    case ModelKind::kDtw:
      require_track(episodes, 1, "dtw applies to the sequence track only");
      return baselines::dtw_score_episodes(episodes, cfg.baselines.dtw, cfg.worker_count());
    case ModelKind::kExemplar: {
      require_track(episodes, 2, "the exemplar classifier applies to the image track only");
      if (!context.training) throw std::invalid_argument("exemplar scoring needs training exemplars");
      const auto baseline = baselines::make_exemplar_baseline(*context.training, cfg.baselines.hog, cfg.baselines.exemplar,
                                                              cfg.baselines.max_negatives);
      std::size_t unconverged = 0;
      auto maps = baselines::exemplar_score_episodes(episodes, baseline, cfg.worker_count(), &unconverged);
      if (unconverged) throw std::runtime_error(std::to_string(unconverged) + " exemplar classifiers did not converge");
      return maps;
    }
    case ModelKind::kRandom:
      return random_maps(episodes, cfg.model, context.seed);
  }
  throw std::invalid_argument("unknown model kind");
}

double raw_ap(const std::vector<simnet::Episode>& episodes, const std::vector<eval::SimilarityMap>& maps,
              double iou_threshold) {
  return eval::average_precision(eval::emit_detections(episode_ids(episodes), maps, eval::PostprocessParams{}),
                                 ground_truths(episodes), iou_threshold);
}

SetEvaluation evaluate_set(const std::string& name, std::size_t N, const std::vector<simnet::Episode>& validation,
                           const std::vector<eval::SimilarityMap>& validation_maps,
                           const std::vector<simnet::Episode>& test, const std::vector<eval::SimilarityMap>& test_maps,
                           const RunConfig& config) {
  const bool intervals = !test.empty() && test.front().target.rank() == 2;
  const eval::Calibration cal =
      eval::calibrate_postprocess(episode_ids(validation), validation_maps, ground_truths(validation),
                                  eval::default_grid(intervals && config.eval.calibrate_shifts), config.eval.iou_threshold);
  SetEvaluation out;
  out.truths = ground_truths(test);
  const auto ids = episode_ids(test);
  out.detections = eval::emit_detections(ids, test_maps, cal.params);
  std::vector<eval::Detection> scored;
  for (std::size_t i = 0; i < test.size(); ++i) scored.push_back(eval::candidate(ids[i], test_maps[i]));

  auto& r = out.report;
  r.name = name;
  r.N = N;
  r.iou_threshold = config.eval.iou_threshold;
  r.ap = eval::average_precision(out.detections, out.truths, config.eval.iou_threshold);
  r.recall_levels = config.eval.recall_levels;
  r.precision = eval::precision_at_recall(scored, out.truths, config.eval.recall_levels);
  r.calibration = cal.params;
  r.validation_ap = cal.ap;
  r.episodes = test.size();
  r.detections = out.detections.size();
  return out;
}

TrainState initial_state(const RunConfig& config) {
  TrainState state;
  state.params = simnet::init_params(config.model, core::mix_seed({config.data.seed, 0x696e6974ULL}));
  state.best = state.params.clone();
  return state;
}

void train_simnet(const RunConfig& config, const std::vector<simnet::Episode>& training,
                  const std::vector<simnet::Episode>& validation, TrainState& state, std::ostream* log,
                  const std::function<void(const TrainState&)>& on_epoch) {
  if (training.empty()) throw std::invalid_argument("training set is empty");
  const std::uint64_t seed = core::mix_seed({config.data.seed, kTrainSeedTag});
  while (state.epochs_done < config.train.epochs) {
    const std::size_t epoch = state.epochs_done + 1;
    const auto losses = simnet::train_epoch(training, config.model, state.params, config.train.sgd, seed, epoch);
    double mean = 0.0;
    for (std::size_t b = 0; b < losses.size(); ++b) {
      state.losses.push_back(LossRow{epoch, b, losses[b]});
      mean += losses[b];
    }
    mean /= static_cast<double>(losses.size());
    double ap = 0.0;
    if (!validation.empty()) {
      ap = raw_ap(validation, simnet::score_episodes(validation, config.model, state.params, config.worker_count()),
                  config.eval.iou_threshold);
    }
    state.validation_ap.push_back(ap);
    state.epochs_done = epoch;
    if (!config.train.select_on_validation || ap > state.best_validation_ap) {
      state.best_validation_ap = ap;
      state.best_epoch = epoch;
      state.best = state.params.clone();
    }
    if (log) *log << "epoch " << epoch << ": mean loss " << mean << ", validation AP " << ap << '\n';
    if (on_epoch) on_epoch(state);
  }
}

void save_train_state(const fs::path& directory, const TrainState& state) {
  std::vector<core::NamedTensor> tensors;
  for (const auto& e : state.params.entries()) tensors.push_back({e.name, e.tensor});
  tensors.push_back({"meta.epochs_done", scalar(static_cast<double>(state.epochs_done))});
  tensors.push_back({"meta.best_epoch", scalar(static_cast<double>(state.best_epoch))});
  tensors.push_back({"meta.best_validation_ap", scalar(state.best_validation_ap)});
  core::write_tensors(directory / "last.ckpt", tensors);
  core::save_checkpoint(directory / "best.ckpt", state.best);

  std::ofstream loss(directory / "loss.csv", std::ios::binary);
  loss << "epoch,batch,loss\n";
  for (const auto& row : state.losses) loss << row.epoch << ',' << row.batch << ',' << core::format_double(row.loss) << '\n';
  std::ofstream val(directory / "validation.csv", std::ios::binary);
  val << "epoch,validation_ap\n";
  for (std::size_t i = 0; i < state.validation_ap.size(); ++i) {
    val << i + 1 << ',' << core::format_double(state.validation_ap[i]) << '\n';
  }
  if (!loss || !val) throw std::runtime_error(directory.string() + ": failed to write training logs");
}

TrainState load_train_state(const fs::path& directory, const RunConfig& config) {
  TrainState state = initial_state(config);
  std::vector<core::NamedTensor> tensors = core::read_tensors(directory / "last.ckpt");
  std::size_t assigned = 0;
  for (const auto& t : tensors) {
    if (t.name.rfind("meta.", 0) == 0) {
      const double v = t.tensor.values()[0];
      if (t.name == "meta.epochs_done") state.epochs_done = static_cast<std::size_t>(v);
      if (t.name == "meta.best_epoch") state.best_epoch = static_cast<std::size_t>(v);
      if (t.name == "meta.best_validation_ap") state.best_validation_ap = v;
      continue;
    }
    if (!state.params.contains(t.name)) throw std::runtime_error("last.ckpt: unexpected tensor " + t.name);
    state.params.assign(t.name, t.tensor);
    ++assigned;
  }
  if (assigned != state.params.size()) throw std::runtime_error("last.ckpt: missing parameters for this model");
  core::load_checkpoint(directory / "best.ckpt", state.best);

  // Logs continue from the previous run.
  std::ifstream loss(directory / "loss.csv");
  std::string line;
  std::getline(loss, line);
  while (std::getline(loss, line)) {
    LossRow row;
    const auto a = line.find(','), b = line.rfind(',');
    row.epoch = std::stoul(line.substr(0, a));
    row.batch = std::stoul(line.substr(a + 1, b - a - 1));
    row.loss = std::stod(line.substr(b + 1));
    state.losses.push_back(row);
  }
  std::ifstream val(directory / "validation.csv");
  std::getline(val, line);
  while (std::getline(val, line)) state.validation_ap.push_back(std::stod(line.substr(line.find(',') + 1)));
  return state;
}

}  // namespace oneshot::cli
