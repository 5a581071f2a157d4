#include "oneshot/cli/run_config.hpp"

#include <algorithm>
#include <stdexcept>

#include "oneshot/core/parallel.hpp"

namespace oneshot::cli {

namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + core::format_double(v[i]);
  return out;
}

std::size_t read_size(const core::KeyValues& kv, const std::string& key, std::size_t fallback) {
  const std::int64_t v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw std::invalid_argument(key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::size_t RunConfig::worker_count() const { return workers == 0 ? core::default_workers() : workers; }

simnet::EmbedConfig model_for(const synth::DataConfig& data, const std::string& preset) {
  if (data.track == synth::Track::kImage) return simnet::EmbedConfig::preset(preset, 2, 1);
  return simnet::EmbedConfig::preset(preset, 1, data.sequence.channels);
}

RunConfig default_run_config(synth::Track track) {
  RunConfig config;
  config.data = synth::default_data_config(track);
  config.model = model_for(config.data, config.preset);
  return config;
}

RunConfig read_run_config(const core::KeyValues& kv) {
  RunConfig c;
  c.data = synth::read_data_config(kv);
  c.preset = kv.get_string("model.preset", c.preset);
  c.model = model_for(c.data, c.preset);
  if (kv.contains("model.layers")) c.model.layers = simnet::parse_layers(kv.get_string("model.layers", ""));
  c.model.temperature = kv.get_double("model.temperature", c.model.temperature);
  c.model.exemplar_extent = read_size(kv, "model.exemplar_extent", c.model.exemplar_extent);

  auto& t = c.train;
  t.epochs = read_size(kv, "train.epochs", t.epochs);
  t.sgd.learning_rate = kv.get_double("train.learning_rate", t.sgd.learning_rate);
  t.sgd.minibatch_size = read_size(kv, "train.minibatch", t.sgd.minibatch_size);
  t.select_on_validation = kv.get_bool("train.select_on_validation", t.select_on_validation);
  t.retrain_with_validation = kv.get_bool("train.retrain_with_validation", t.retrain_with_validation);
  t.selection_ways = read_size(kv, "train.selection_ways", t.selection_ways);

  auto& e = c.eval;
  e.iou_threshold = kv.get_double("eval.iou_threshold", e.iou_threshold);
  e.recall_levels = kv.get_doubles("eval.recall_levels", e.recall_levels);
  e.sweep_thresholds = kv.get_doubles("eval.sweep_thresholds", e.sweep_thresholds);
  e.calibrate_shifts = kv.get_bool("eval.calibrate_shifts", e.calibrate_shifts);

  auto& b = c.baselines;
  b.dtw.sigma = kv.get_double("baseline.dtw.sigma", b.dtw.sigma);
  b.dtw.step = read_size(kv, "baseline.dtw.step", b.dtw.step);
  b.dtw.length_factors = kv.get_doubles("baseline.dtw.length_factors", b.dtw.length_factors);
  b.hog.cell = read_size(kv, "baseline.hog.cell", b.hog.cell);
  b.hog.bins = read_size(kv, "baseline.hog.bins", b.hog.bins);
  b.hog.block = read_size(kv, "baseline.hog.block", b.hog.block);
  b.hog.clip = kv.get_double("baseline.hog.clip", b.hog.clip);
  b.exemplar.positive_weight = kv.get_double("baseline.exemplar.positive_weight", b.exemplar.positive_weight);
  b.exemplar.negative_weight = kv.get_double("baseline.exemplar.negative_weight", b.exemplar.negative_weight);
  b.exemplar.l2 = kv.get_double("baseline.exemplar.l2", b.exemplar.l2);
  b.exemplar.bias = kv.get_double("baseline.exemplar.bias", b.exemplar.bias);
  b.exemplar.max_iterations = read_size(kv, "baseline.exemplar.max_iterations", b.exemplar.max_iterations);
  b.exemplar.tolerance = kv.get_double("baseline.exemplar.tolerance", b.exemplar.tolerance);
  b.max_negatives = read_size(kv, "baseline.exemplar.max_negatives", b.max_negatives);

  c.workers = read_size(kv, "workers", c.workers);

  const auto unread = kv.unread();
  if (!unread.empty()) {
    std::string keys;
    for (const auto& k : unread) keys += (keys.empty() ? "" : ", ") + k;
    throw std::invalid_argument("unknown configuration keys: " + keys);
  }
  validate(c);
  return c;
}

core::KeyValues write_run_config(const RunConfig& c) {
  core::KeyValues kv;
  synth::write_data_config(c.data, kv);
  const auto d = core::format_double;
  kv.set("model.preset", c.preset);
  kv.set("model.layers", simnet::format_layers(c.model.layers));
  kv.set("model.temperature", d(c.model.temperature));
  kv.set("model.exemplar_extent", std::to_string(c.model.exemplar_extent));
  kv.set("train.epochs", std::to_string(c.train.epochs));
  kv.set("train.learning_rate", d(c.train.sgd.learning_rate));
  kv.set("train.minibatch", std::to_string(c.train.sgd.minibatch_size));
  kv.set("train.select_on_validation", c.train.select_on_validation ? "true" : "false");
  kv.set("train.retrain_with_validation", c.train.retrain_with_validation ? "true" : "false");
  kv.set("train.selection_ways", std::to_string(c.train.selection_ways));
  kv.set("eval.iou_threshold", d(c.eval.iou_threshold));
  kv.set("eval.recall_levels", join(c.eval.recall_levels));
  kv.set("eval.sweep_thresholds", join(c.eval.sweep_thresholds));
  kv.set("eval.calibrate_shifts", c.eval.calibrate_shifts ? "true" : "false");
  kv.set("baseline.dtw.sigma", d(c.baselines.dtw.sigma));
  kv.set("baseline.dtw.step", std::to_string(c.baselines.dtw.step));
  kv.set("baseline.dtw.length_factors", join(c.baselines.dtw.length_factors));
  kv.set("baseline.hog.cell", std::to_string(c.baselines.hog.cell));
  kv.set("baseline.hog.bins", std::to_string(c.baselines.hog.bins));
  kv.set("baseline.hog.block", std::to_string(c.baselines.hog.block));
  kv.set("baseline.hog.clip", d(c.baselines.hog.clip));
  kv.set("baseline.exemplar.positive_weight", d(c.baselines.exemplar.positive_weight));
  kv.set("baseline.exemplar.negative_weight", d(c.baselines.exemplar.negative_weight));
  kv.set("baseline.exemplar.l2", d(c.baselines.exemplar.l2));
  kv.set("baseline.exemplar.bias", d(c.baselines.exemplar.bias));
  kv.set("baseline.exemplar.max_iterations", std::to_string(c.baselines.exemplar.max_iterations));
  kv.set("baseline.exemplar.tolerance", d(c.baselines.exemplar.tolerance));
  kv.set("baseline.exemplar.max_negatives", std::to_string(c.baselines.max_negatives));
  kv.set("workers", std::to_string(c.workers));
  return kv;
}

RunConfig load_run_config(const std::filesystem::path& path) { return read_run_config(core::KeyValues::load(path)); }

void validate(const RunConfig& c) {
  synth::validate(c.data);
  simnet::validate(c.model);
  core::validate(c.train.sgd);
  if (c.train.epochs == 0) throw std::invalid_argument("train.epochs must be positive");
  if (c.train.selection_ways != 0 &&
      std::find(c.data.ways.begin(), c.data.ways.end(), c.train.selection_ways) == c.data.ways.end()) {
    throw std::invalid_argument("train.selection_ways must be one of data.ways");
  }
  if (!(c.eval.iou_threshold >= 0.0 && c.eval.iou_threshold <= 1.0)) {
    throw std::invalid_argument("eval.iou_threshold must lie in [0, 1]");
  }
  for (double r : c.eval.recall_levels) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("eval.recall_levels must lie in (0, 1]");
  }
  for (double t : c.eval.sweep_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("eval.sweep_thresholds must lie in [0, 1]");
  }
  baselines::validate(c.baselines.dtw);
  baselines::validate(c.baselines.hog);
  baselines::validate(c.baselines.exemplar);
  if (c.baselines.max_negatives == 0) throw std::invalid_argument("baseline.exemplar.max_negatives must be positive");
}

}  // namespace oneshot::cli
