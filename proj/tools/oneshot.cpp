#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "oneshot/cli/commands.hpp"

namespace fs = std::filesystem;
using namespace oneshot;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string track;
  bool single_thread = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "key-value run configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "overrides data.seed");
  app->add_option("--track", o.track, "image or sequence (ignored when --config is given)")
      ->check(CLI::IsMember({"image", "sequence"}));
  app->add_flag("--single-thread", o.single_thread, "one worker; fully deterministic");
}

// Precedence: --config, else the dataset manifest, else defaults for --track.
cli::RunConfig resolve_config(const CommonOptions& o, const std::optional<fs::path>& data) {
  cli::RunConfig c;
  if (!o.config_path.empty()) {
    c = cli::load_run_config(o.config_path);
    if (!o.track.empty() && synth::parse_track(o.track) != c.data.track) {
      throw std::invalid_argument("--track " + o.track + " contradicts the configuration file");
    }
  } else if (data) {
    const synth::Manifest m = synth::load_manifest(*data);
    if (!o.track.empty() && synth::parse_track(o.track) != m.config.track) {
      throw std::invalid_argument("--track " + o.track + " contradicts the dataset");
    }
    c = cli::default_run_config(m.config.track);
    c.data = m.config;
    c.model = cli::model_for(c.data, c.preset);
  } else {
    c = cli::default_run_config(o.track.empty() ? synth::Track::kImage : synth::parse_track(o.track));
  }
  if (o.seed) c.data.seed = *o.seed;
  if (o.single_thread) c.workers = 1;
  cli::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot detection with attention-pooled similarity maps"};
  app.require_subcommand(1);

  CommonOptions synth_o, train_o, eval_o, sweep_o;
  std::string out, data, model = "simnet", checkpoint;
  bool resume = false, flip = false;
  std::uint64_t grad_seed = 1;

  auto* synth_cmd = app.add_subcommand("synth", "generate a dataset directory");
  add_common(synth_cmd, synth_o);
  synth_cmd->add_option("--out", out, "dataset directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train the similarity network");
  add_common(train_cmd, train_o);
  train_cmd->add_option("--data", data, "dataset directory")->required();
  train_cmd->add_option("--out", out, "run directory")->required();
  train_cmd->add_flag("--resume", resume, "continue from <out>/last.ckpt");

  auto add_eval_options = [&](CLI::App* cmd) {
    cmd->add_option("--data", data, "dataset directory")->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--model", model, "simnet, dtw, exemplar or random")
        ->check(CLI::IsMember({"simnet", "dtw", "exemplar", "random"}));
    cmd->add_option("--checkpoint", checkpoint, "simnet weights")->check(CLI::ExistingFile);
  };
  auto* eval_cmd = app.add_subcommand("eval", "calibrate on validation, report the test sets");
  add_common(eval_cmd, eval_o);
  add_eval_options(eval_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "AP across IoU thresholds");
  add_common(sweep_cmd, sweep_o);
  add_eval_options(sweep_cmd);

  auto* grad_cmd = app.add_subcommand("gradcheck", "gradient-check suite");
  grad_cmd->add_option("--seed", grad_seed, "instance seed");
  grad_cmd->add_flag("--flip-closed-form", flip, "negate the closed-form gradient (negative control)");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::optional<fs::path> ckpt = checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint);
    if (synth_cmd->parsed()) {
      cli::cmd_synth(resolve_config(synth_o, std::nullopt), out, std::cout);
    } else if (train_cmd->parsed()) {
      cli::cmd_train(resolve_config(train_o, fs::path(data)), data, out, resume, std::cout);
    } else if (eval_cmd->parsed()) {
      cli::cmd_eval(resolve_config(eval_o, fs::path(data)), cli::parse_model(model), data, ckpt, out, std::cout);
    } else if (sweep_cmd->parsed()) {
      cli::cmd_sweep(resolve_config(sweep_o, fs::path(data)), cli::parse_model(model), data, ckpt, out, std::cout);
    } else if (grad_cmd->parsed()) {
      return cli::cmd_gradcheck(grad_seed, std::cout, flip) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
