// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "oneshot/baselines/dtw.hpp"
#include "oneshot/cli/commands.hpp"
#include "oneshot/core/random.hpp"
#include "oneshot/eval/metrics.hpp"
#include "oneshot/simnet/gradsuite.hpp"
#include "oneshot/simnet/network.hpp"

using namespace oneshot;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("oneshot_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const simnet::ScoreGradientReport& score_report() {
  static const simnet::ScoreGradientReport report =
      simnet::check_score_gradients(simnet::random_score_instances(20240501, 150), simnet::analytic_score_gradient);
  return report;
}

Verdict gradient_oracle() {
  const double start = cpu_seconds();
  const auto& r = score_report();
  const double seconds = cpu_seconds() - start;
  const bool pass = r.instances >= 100 && r.closed_form_error < 1e-9 && r.finite_difference_error < 1e-4 && seconds < 10.0;
  return {pass, std::to_string(r.instances) + " instances, closed form " + fmt(r.closed_form_error) +
                    " (< 1e-9), central differences " + fmt(r.finite_difference_error) + " (< 1e-4), " + fmt(seconds) +
                    " s (< 10)"};
}

Verdict sum_rule() {
  const auto& r = score_report();
  return {r.sum_rule_error <= 1e-9, "max |sum dy/ds - 1| = " + fmt(r.sum_rule_error) + " (<= 1e-9) over " +
                                        std::to_string(r.instances) + " instances"};
}

Verdict self_reinforcement() {
  const auto& r = score_report();
  return {r.ordering_pairs > 0 && r.ordering_violations == 0,
          std::to_string(r.ordering_violations) + " violations over " + std::to_string(r.ordering_pairs) +
              " qualifying location pairs"};
}

// Cosine of the exemplar with one target patch: gather, normalise, dot.
double patch_cosine(const core::Tensor& ex, const core::Tensor& tg, std::size_t ly, std::size_t lx) {
  const std::size_t c = ex.dim(0), h = ex.dim(1), w = ex.dim(2), th = tg.dim(1), tw = tg.dim(2);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double a = ex[(k * h + y) * w + x], b = tg[(k * th + ly + y) * tw + lx + x];
        dot += a * b;
        na += a * a;
        nb += b * b;
      }
    }
  }
  return dot / (std::max(std::sqrt(na), 1e-12) * std::max(std::sqrt(nb), 1e-12));
}

Verdict similarity_oracle() {
  const double start = cpu_seconds();
  core::Rng rng(4242);
  double worst = 0.0;
  std::size_t locations = 0;
  for (int trial = 0; trial < 40; ++trial) {
    // The last trial is the largest admissible pair.
    const bool largest = trial == 39;
    const auto c = largest ? 16 : static_cast<std::size_t>(core::uniform_int(rng, 1, 16));
    const auto h = largest ? 10 : static_cast<std::size_t>(core::uniform_int(rng, 1, 10));
    const auto w = largest ? 10 : static_cast<std::size_t>(core::uniform_int(rng, 1, 10));
    const auto th = largest ? 20 : static_cast<std::size_t>(core::uniform_int(rng, static_cast<std::int64_t>(h), 20));
    const auto tw = largest ? 20 : static_cast<std::size_t>(core::uniform_int(rng, static_cast<std::int64_t>(w), 20));
    const core::Tensor ex = core::randn(rng, {c, h, w}), tg = core::randn(rng, {c, th, tw});
    const auto map = simnet::similarity_map(ex, tg);
    for (std::size_t ly = 0; ly + h <= th; ++ly) {
      for (std::size_t lx = 0; lx + w <= tw; ++lx) {
        worst = std::max(worst, std::abs(map.scores[ly * (tw - w + 1) + lx] - patch_cosine(ex, tg, ly, lx)));
        ++locations;
      }
    }
  }
  const double seconds = cpu_seconds() - start;
  return {worst <= 1e-9 && seconds < 10.0, "max deviation " + fmt(worst) + " (<= 1e-9) over " +
                                               std::to_string(locations) + " locations, " + fmt(seconds) + " s (< 10)"};
}

Verdict dtw_oracle() {
  core::Rng rng(5151);
  std::size_t mismatches = 0, instances = 0;
  for (int i = 0; i < 300; ++i) {
    const auto channels = static_cast<std::size_t>(core::uniform_int(rng, 1, 3));
    const auto la = static_cast<std::size_t>(core::uniform_int(rng, 1, 5));
    const auto lb = static_cast<std::size_t>(core::uniform_int(rng, 1, 5));
    const core::Tensor a = core::randn(rng, {channels, la}), b = core::randn(rng, {channels, lb});
    if (baselines::dtw_cost(a, b) != baselines::dtw_cost_brute_force(a, b)) ++mismatches;
    ++instances;
  }
  return {instances >= 200 && mismatches == 0,
          std::to_string(mismatches) + " inexact of " + std::to_string(instances) + " pairs (lengths 1-5)"};
}

Verdict ap_oracle() {
  core::Rng rng(6262);
  const std::vector<double> thresholds{0.2, 0.3, 0.4, 0.5};
  std::size_t mismatches = 0, increases = 0, instances = 0;
  for (int i = 0; i < 600; ++i) {
    std::vector<eval::Detection> detections;
    std::vector<eval::GroundTruth> truths;
    const auto n = core::uniform_int(rng, 1, 8);
    for (std::int64_t id = 0; id < n; ++id) {
      eval::GroundTruth t{id, core::uniform(rng) < 0.5 ? 1 : 0, std::nullopt};
      const double row = core::uniform(rng, 0.0, 40.0), col = core::uniform(rng, 0.0, 40.0);
      if (t.label == 1) t.box = eval::Box::rect(row, col, 20.0, 20.0);
      truths.push_back(t);
      const double conf = static_cast<double>(core::uniform_int(rng, 0, 10)) / 10.0;
      detections.push_back(eval::Detection{
          id, eval::Box::rect(row + core::uniform(rng, -12.0, 12.0), col + core::uniform(rng, -12.0, 12.0), 20.0, 20.0),
          conf});
    }
    for (double iou : thresholds) {
      if (eval::average_precision(detections, truths, iou) != eval::average_precision_brute_force(detections, truths, iou)) {
        ++mismatches;
      }
    }
    const auto sweep = eval::ap_iou_sweep(detections, truths, thresholds);
    for (std::size_t k = 1; k < sweep.size(); ++k) increases += sweep[k] > sweep[k - 1];
    ++instances;
  }
  return {instances >= 500 && mismatches == 0 && increases == 0,
          std::to_string(mismatches) + " inexact AP values, " + std::to_string(increases) +
              " increases across IoU {0.2, 0.3, 0.4, 0.5}, " + std::to_string(instances) + " instances"};
}

struct EndToEnd {
  double train_seconds = 0.0;
  std::map<std::string, double> ap;
};

EndToEnd end_to_end(const cli::RunConfig& config, const std::string& name, const std::vector<cli::ModelKind>& models) {
  const fs::path data = workdir(name + "_data"), run = workdir(name + "_run");
  std::ostringstream log;
  cli::cmd_synth(config, data, log);
  EndToEnd out;
  const double start = cpu_seconds();
  cli::cmd_train(config, data, run, false, log);
  out.train_seconds = cpu_seconds() - start;
  for (auto kind : models) {
    const auto sets = cli::run_evaluation(config, kind, data, run / "best.ckpt", log);
    out.ap[cli::model_name(kind)] = sets.front().report.ap;
  }
  return out;
}

// Image track: desk preset, 60/20 classes, n = 2, 5-way.
cli::RunConfig image_run() {
  cli::RunConfig c = cli::default_run_config(synth::Track::kImage);
  c.data.seed = 7;
  c.train.epochs = 2;
  c.train.sgd = {0.1, 16};
  c.workers = 1;
  return c;
}

// Sequence track: 10-way, noise std 0.1, DTW sigma 50.
cli::RunConfig sequence_run() {
  cli::RunConfig c = cli::default_run_config(synth::Track::kSequence);
  c.data.seed = 7;
  c.data.train_pairs = 10000;
  c.train.epochs = 16;
  c.train.sgd = {0.1, 16};
  c.baselines.dtw.sigma = 50.0;
  c.workers = 1;
  return c;
}

Verdict image_learning() {
  const auto r = end_to_end(image_run(), "image", {cli::ModelKind::kSimnet, cli::ModelKind::kExemplar, cli::ModelKind::kRandom});
  const double sim = r.ap.at("simnet"), exm = r.ap.at("exemplar"), rnd = r.ap.at("random");
  const bool pass = sim >= 3.0 * rnd && sim > exm && r.train_seconds <= 600.0;
  return {pass, "AP simnet " + fmt(sim) + ", exemplar " + fmt(exm) + ", random " + fmt(rnd) + "; simnet >= 3x random " +
                    (sim >= 3.0 * rnd ? "yes" : "no") + ", simnet > exemplar " + (sim > exm ? "yes" : "no") +
                    ", training " + fmt(r.train_seconds) + " s (<= 600)"};
}

Verdict sequence_learning() {
  const auto r = end_to_end(sequence_run(), "sequence", {cli::ModelKind::kSimnet, cli::ModelKind::kDtw, cli::ModelKind::kRandom});
  const double sim = r.ap.at("simnet"), dtw = r.ap.at("dtw"), rnd = r.ap.at("random");
  const bool pass = sim > dtw && sim > rnd && dtw > rnd && r.train_seconds <= 600.0;
  return {pass, "AP simnet " + fmt(sim) + ", dtw " + fmt(dtw) + ", random " + fmt(rnd) + "; simnet > dtw " +
                    (sim > dtw ? "yes" : "no") + ", both > random " + (sim > rnd && dtw > rnd ? "yes" : "no") +
                    ", training " + fmt(r.train_seconds) + " s (<= 600)"};
}

Verdict determinism() {
  cli::RunConfig c = cli::default_run_config(synth::Track::kImage);
  c.data.seed = 11;
  c.data.train_pairs = 96;
  c.data.validation_targets = 10;
  c.data.test_targets = 10;
  c.train.epochs = 2;
  c.workers = 1;
  std::string reports[2], checkpoints[2];
  for (int k = 0; k < 2; ++k) {
    const std::string tag = "determinism_" + std::to_string(k);
    const fs::path data = workdir(tag + "_data"), run = workdir(tag + "_run"), out = workdir(tag + "_eval");
    std::ostringstream log;
    cli::cmd_synth(c, data, log);
    cli::cmd_train(c, data, run, false, log);
    cli::cmd_eval(c, cli::ModelKind::kSimnet, data, run / "best.ckpt", out, log);
    reports[k] = slurp(out / "report.json");
    checkpoints[k] = slurp(run / "best.ckpt");
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1] && checkpoints[0] == checkpoints[1];
  return {same, std::string("report.json ") + (reports[0] == reports[1] ? "identical" : "differs") + " (" +
                    std::to_string(reports[0].size()) + " bytes), best.ckpt " +
                    (checkpoints[0] == checkpoints[1] ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "run only these criteria (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"gradient oracle", gradient_oracle},
      {"gradient sum rule", sum_rule},
      {"restricted self-reinforcement", self_reinforcement},
      {"similarity map oracle", similarity_oracle},
      {"dtw oracle", dtw_oracle},
      {"average precision oracle", ap_oracle},
      {"image track learning signal", image_learning},
      {"sequence track learning signal", sequence_learning},
      {"determinism", determinism},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    all = all && v.pass;
    std::cout << "criterion " << number << " " << (v.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
