#include "oneshot/cli/commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "oneshot/core/random.hpp"
#include "oneshot/simnet/gradsuite.hpp"
#include "oneshot/simnet/network.hpp"

namespace oneshot::cli {

namespace {

namespace fs = std::filesystem;

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error(dir.string() + ": cannot create output directory" + (ec ? " (" + ec.message() + ")" : ""));
  }
}

void write_config(const fs::path& dir, const RunConfig& config) {
  std::ofstream out(dir / "config.txt", std::ios::binary);
  out << write_run_config(config).dump();
  if (!out) throw std::runtime_error((dir / "config.txt").string() + ": cannot write");
}

// The dataset on disk must match the geometry the model was built for.
synth::Manifest checked_manifest(const RunConfig& config, const fs::path& data) {
  synth::Manifest m = synth::load_manifest(data);
  if (m.config.track != config.data.track) {
    throw std::invalid_argument("dataset " + data.string() + " is " + synth::track_name(m.config.track) +
                                " but the run is configured for " + synth::track_name(config.data.track));
  }
  if (m.config.track == synth::Track::kSequence && m.config.sequence.channels != config.data.sequence.channels) {
    throw std::invalid_argument("dataset has " + std::to_string(m.config.sequence.channels) +
                                " channels, the run expects " + std::to_string(config.data.sequence.channels));
  }
  return m;
}

std::size_t selection_ways(const RunConfig& config, const synth::Manifest& m) {
  const std::size_t N = config.train.selection_ways ? config.train.selection_ways : m.config.ways.front();
  if (!m.set_sizes.count(synth::validation_set_name(N))) {
    throw std::invalid_argument("dataset has no " + synth::validation_set_name(N) + " set");
  }
  return N;
}

}  // namespace

void cmd_synth(const RunConfig& config, const fs::path& out, std::ostream& log) {
  ensure_directory(out);
  const synth::Dataset ds = synth::build_dataset(config.data);
  synth::save_dataset(out, ds);
  write_config(out, config);
  for (const auto& [name, episodes] : ds.sets) log << name << ": " << episodes.size() << " episodes\n";
}

TrainState cmd_train(const RunConfig& config, const fs::path& data, const fs::path& out, bool resume, std::ostream& log) {
  const synth::Manifest m = checked_manifest(config, data);
  ensure_directory(out);
  write_config(out, config);
  const auto training = synth::load_episode_set(data, "train");
  const auto validation = synth::load_episode_set(data, synth::validation_set_name(selection_ways(config, m)));

  TrainState state = resume ? load_train_state(out, config) : initial_state(config);
  if (resume) log << "resuming after epoch " << state.epochs_done << '\n';
  train_simnet(config, training, validation, state, &log, [&](const TrainState& s) { save_train_state(out, s); });
  if (state.epochs_done == 0) save_train_state(out, state);

  if (config.train.retrain_with_validation) {
    const std::size_t extra = 2 * (m.config.train_pairs * m.config.validation_classes / m.config.train_classes / 2);
    synth::SplitSpec split;
    split.train = m.split.validation;
    auto combined = training;
    if (extra > 0) {
      auto more = synth::build_training_pairs(synth::make_generator(m.config), split, extra,
                                              core::mix_seed({config.data.seed, 0x7265747261696eULL}));
      for (auto& e : more) {
        e.id += static_cast<std::int64_t>(training.size());
        e.target_index += static_cast<std::int64_t>(training.size());
        combined.push_back(std::move(e));
      }
    }
    RunConfig retrain = config;
    retrain.train.epochs = state.best_epoch;
    retrain.train.select_on_validation = false;
    TrainState fresh = initial_state(retrain);
    log << "retraining on " << combined.size() << " pairs for " << retrain.train.epochs << " epochs\n";
    train_simnet(retrain, combined, {}, fresh, &log);
    core::save_checkpoint(out / "best.ckpt", fresh.params);
    state.best = fresh.params.clone();
  }
  log << "best epoch " << state.best_epoch << " (validation AP " << state.best_validation_ap << ")\n";
  return state;
}

std::vector<SetEvaluation> run_evaluation(const RunConfig& config, ModelKind kind, const fs::path& data,
                                          const std::optional<fs::path>& checkpoint, std::ostream& log) {
  const synth::Manifest m = checked_manifest(config, data);
  std::optional<core::ParamStore> params;
  if (kind == ModelKind::kSimnet) {
    if (!checkpoint) throw std::invalid_argument("--checkpoint is required for the simnet model");
    params = simnet::init_params(config.model, 0);
    core::load_checkpoint(*checkpoint, *params);
  }
  std::vector<simnet::Episode> training;
  if (kind == ModelKind::kExemplar) training = synth::load_episode_set(data, "train");

  std::vector<SetEvaluation> out;
  for (std::size_t N : m.config.ways) {
    const auto validation = synth::load_episode_set(data, synth::validation_set_name(N));
    const auto test = synth::load_episode_set(data, synth::test_set_name(N));
    ScoringContext ctx{&config, params ? &*params : nullptr, &training, core::mix_seed({config.data.seed, N, 0x76})};
    const auto validation_maps = score_with(kind, validation, ctx);
    ctx.seed = core::mix_seed({config.data.seed, N, 0x74});
    const auto test_maps = score_with(kind, test, ctx);
    out.push_back(evaluate_set(synth::test_set_name(N), N, validation, validation_maps, test, test_maps, config));
    const auto& r = out.back().report;
    log << r.name << ": AP " << r.ap << " (validation " << r.validation_ap << ", t = " << r.calibration.threshold << ")\n";
  }
  return out;
}

eval::EvalReport cmd_eval(const RunConfig& config, ModelKind kind, const fs::path& data,
                          const std::optional<fs::path>& checkpoint, const fs::path& out, std::ostream& log) {
  ensure_directory(out);
  eval::EvalReport report{synth::track_name(config.data.track), model_name(kind), {}};
  for (const auto& set : run_evaluation(config, kind, data, checkpoint, log)) {
    eval::write_detections_csv(out / ("detections_" + set.report.name + ".csv"), set.detections);
    eval::write_truths_csv(out / ("truths_" + set.report.name + ".csv"), set.truths);
    report.sets.push_back(set.report);
  }
  eval::write_report(out / "report.json", report);
  return report;
}

void cmd_sweep(const RunConfig& config, ModelKind kind, const fs::path& data, const std::optional<fs::path>& checkpoint,
               const fs::path& out, std::ostream& log) {
  ensure_directory(out);
  for (const auto& set : run_evaluation(config, kind, data, checkpoint, log)) {
    const auto aps = eval::ap_iou_sweep(set.detections, set.truths, config.eval.sweep_thresholds);
    eval::write_sweep_csv(out / ("sweep_" + set.report.name + ".csv"), config.eval.sweep_thresholds, aps);
    for (std::size_t i = 0; i < aps.size(); ++i) {
      log << set.report.name << " IoU " << config.eval.sweep_thresholds[i] << ": AP " << aps[i] << '\n';
    }
  }
}

bool cmd_gradcheck(std::uint64_t seed, std::ostream& log, bool flip_closed_form) {
  simnet::ScoreGradientFn closed_form = simnet::analytic_score_gradient;
  if (flip_closed_form) {
    closed_form = [](std::span<const double> s, int y, double t) {
      auto g = simnet::analytic_score_gradient(s, y, t);
      for (double& v : g) v = -v;
      return g;
    };
  }
  const auto report = simnet::check_score_gradients(simnet::random_score_instances(seed, 150), closed_form);
  bool ok = true;
  auto line = [&](const std::string& name, double value, double tolerance) {
    const bool pass = value < tolerance;
    ok = ok && pass;
    log << std::left << std::setw(34) << name << std::setw(14) << value << "tolerance " << tolerance
        << (pass ? "  PASS" : "  FAIL") << '\n';
  };
  log << "score gradients over " << report.instances << " instances\n";
  line("autograd vs closed form", report.closed_form_error, 1e-9);
  line("autograd vs central differences", report.finite_difference_error, 1e-4);
  line("sum of dy_hat/ds minus one", report.sum_rule_error, 1e-9);
  line("ordering violations", static_cast<double>(report.ordering_violations), 0.5);
  log << "  (" << report.ordering_pairs << " qualifying location pairs)\n";
  line("image network vs central diff", simnet::check_network_gradient(simnet::gradcheck_config(2), seed, 24), 1e-4);
  line("sequence network vs central diff", simnet::check_network_gradient(simnet::gradcheck_config(1), seed + 1, 24), 1e-4);
  log << (ok ? "all gradient checks passed\n" : "gradient checks FAILED\n");
  return ok;
}

}  // namespace oneshot::cli
