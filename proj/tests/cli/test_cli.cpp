#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "oneshot/cli/commands.hpp"
#include "oneshot/eval/metrics.hpp"

using namespace oneshot;
using namespace oneshot::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("oneshot_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small enough that a full train + eval takes well under a second.
RunConfig tiny_sequence() {
  RunConfig c = default_run_config(synth::Track::kSequence);
  c.data.train_classes = 8;
  c.data.validation_classes = 6;
  c.data.test_classes = 6;
  c.data.ways = {3};
  c.data.train_pairs = 16;
  c.data.validation_targets = 3;
  c.data.test_targets = 3;
  c.data.sequence.channels = 4;
  c.data.sequence.frames = 80;
  c.data.sequence.min_template = 16;
  c.data.sequence.max_template = 24;
  c.model = model_for(c.data, c.preset);
  c.model.layers = simnet::parse_layers("4k5s1p, 4k3s1");
  c.model.exemplar_extent = 16;
  c.train.epochs = 2;
  c.train.sgd = {0.1, 4};
  c.workers = 1;
  validate(c);
  return c;
}

RunConfig tiny_image() {
  RunConfig c = default_run_config(synth::Track::kImage);
  c.data.train_classes = 10;
  c.data.validation_classes = 8;
  c.data.test_classes = 8;
  c.data.ways = {3};
  c.data.train_pairs = 8;
  c.data.validation_targets = 3;
  c.data.test_targets = 3;
  c.model.layers = simnet::parse_layers("4k5s1p, 4k5s1p");
  c.train.epochs = 1;
  c.train.sgd = {0.1, 4};
  c.workers = 1;
  c.baselines.max_negatives = 20;
  validate(c);
  return c;
}

// Score 1 on the truth box of positives, 0 everywhere else.
std::vector<eval::SimilarityMap> perfect_maps(const std::vector<simnet::Episode>& episodes) {
  std::vector<eval::SimilarityMap> maps;
  for (const auto& e : episodes) {
    eval::SimilarityMap m;
    const double length = static_cast<double>(e.target.dim(1));
    m.target_extent = {length, 0.0};
    m.boxes = {eval::Box::interval(0.0, 10.0)};
    m.scores = {0.0};
    if (e.label == 1) {
      m.boxes.push_back(*e.truth_box);
      m.scores.push_back(1.0);
    }
    maps.push_back(m);
  }
  return maps;
}

}  // namespace

TEST_CASE("run config round trips through key-value text") {
  RunConfig c = tiny_sequence();
  c.train.retrain_with_validation = true;
  c.eval.sweep_thresholds = {0.1, 0.3};
  c.baselines.dtw.sigma = 12.5;
  const auto text = write_run_config(c).dump();
  const RunConfig back = read_run_config(core::KeyValues::parse(text));
  CHECK(write_run_config(back).dump() == text);
  CHECK(back.model.layers.size() == 2);
  CHECK(back.train.retrain_with_validation);
}

TEST_CASE("run config rejects unknown keys and bad values") {
  CHECK_THROWS_WITH(read_run_config(core::KeyValues::parse("track = image\ntrain.learnig_rate = 0.1\n")),
                    doctest::Contains("train.learnig_rate"));
  RunConfig c = tiny_sequence();
  c.train.selection_ways = 7;
  CHECK_THROWS(validate(c));
  c = tiny_sequence();
  c.eval.iou_threshold = 1.5;
  CHECK_THROWS(validate(c));
}

TEST_CASE("synth writes identical manifests for the same seed") {
  RunConfig c = default_run_config(synth::Track::kImage);
  c.data.n = 3;
  c.data.ways = {5};
  c.data.train_classes = 20;
  c.data.validation_classes = 14;
  c.data.test_classes = 14;
  c.data.train_pairs = 4;
  c.data.validation_targets = 2;
  c.data.test_targets = 4;
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  std::ostringstream log;
  cmd_synth(c, a, log);
  cmd_synth(c, b, log);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(slurp(a / "test_5way.bin") == slurp(b / "test_5way.bin"));

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["sets"]["test_5way"] == 20);
  const auto test = synth::load_episode_set(a, "test_5way");
  for (std::size_t t = 0; t < 4; ++t) {
    int positives = 0;
    for (std::size_t j = 0; j < 5; ++j) positives += test[t * 5 + j].label;
    CHECK(positives == 1);
  }
}

TEST_CASE("synth errors cleanly") {
  RunConfig c = default_run_config(synth::Track::kImage);
  c.data.ways = {30};
  std::ostringstream log;
  CHECK_THROWS_WITH(cmd_synth(c, scratch("synth_bad"), log), doctest::Contains("classes"));

  const fs::path file = scratch("synth_file");
  std::ofstream(file) << "x";
  CHECK_THROWS_WITH(cmd_synth(default_run_config(synth::Track::kImage), file / "sub", log),
                    doctest::Contains("cannot create"));
}

TEST_CASE("train writes checkpoints and a loss trace; resume is bit-identical") {
  const RunConfig c = tiny_sequence();
  const fs::path data = scratch("train_data");
  std::ostringstream log;
  cmd_synth(c, data, log);

  CHECK_THROWS_WITH(cmd_train(c, scratch("missing"), scratch("never"), false, log), doctest::Contains("synth"));

  const fs::path full = scratch("train_full");
  const TrainState state = cmd_train(c, data, full, false, log);
  CHECK(state.epochs_done == 2);
  CHECK(fs::exists(full / "best.ckpt"));
  CHECK(fs::exists(full / "last.ckpt"));

  std::istringstream csv(slurp(full / "loss.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "epoch,batch,loss");
  std::size_t previous = 0, rows = 0;
  while (std::getline(csv, line)) {
    const std::size_t epoch = std::stoul(line.substr(0, line.find(',')));
    CHECK(epoch >= previous);
    CHECK(epoch >= 1);
    previous = epoch;
    ++rows;
  }
  CHECK(rows == 8);
  CHECK(previous == 2);

  RunConfig first = c;
  first.train.epochs = 1;
  const fs::path split = scratch("train_split");
  cmd_train(first, data, split, false, log);
  cmd_train(c, data, split, true, log);
  CHECK(slurp(split / "last.ckpt") == slurp(full / "last.ckpt"));
  CHECK(slurp(split / "best.ckpt") == slurp(full / "best.ckpt"));
  CHECK(slurp(split / "loss.csv") == slurp(full / "loss.csv"));
}

TEST_CASE("train rejects a dataset of the other track") {
  const fs::path data = scratch("track_data");
  std::ostringstream log;
  cmd_synth(tiny_sequence(), data, log);
  CHECK_THROWS_WITH(cmd_train(tiny_image(), data, scratch("track_run"), false, log), doctest::Contains("sequence"));
}

TEST_CASE("a perfect scorer reports AP 1 with exactly four metrics") {
  const RunConfig c = tiny_sequence();
  const fs::path data = scratch("perfect_data");
  std::ostringstream log;
  cmd_synth(c, data, log);
  const auto validation = synth::load_episode_set(data, "validation_3way");
  const auto test = synth::load_episode_set(data, "test_3way");
  const SetEvaluation ev = evaluate_set("test_3way", 3, validation, perfect_maps(validation), test, perfect_maps(test), c);
  CHECK(ev.report.ap == 1.0);
  CHECK(ev.report.validation_ap == 1.0);

  const auto json = nlohmann::json::parse(eval::report_json(eval::EvalReport{"sequence", "perfect", {ev.report}}));
  const auto& metrics = json["sets"][0]["metrics"];
  CHECK(metrics.size() == 4);
  for (const char* key : {"AP", "Pr@0.5", "Pr@0.9", "Pr@0.99"}) CHECK(metrics.contains(key));
}

TEST_CASE("eval runs every model on shared episode ids and rejects mismatches") {
  const RunConfig c = tiny_image();
  const fs::path data = scratch("eval_data"), run = scratch("eval_run");
  std::ostringstream log;
  cmd_synth(c, data, log);
  cmd_train(c, data, run, false, log);

  const fs::path out_simnet = scratch("eval_simnet"), out_exemplar = scratch("eval_exemplar");
  const auto simnet = cmd_eval(c, ModelKind::kSimnet, data, run / "best.ckpt", out_simnet, log);
  const auto exemplar = cmd_eval(c, ModelKind::kExemplar, data, std::nullopt, out_exemplar, log);
  const auto random = cmd_eval(c, ModelKind::kRandom, data, std::nullopt, scratch("eval_random"), log);
  CHECK(simnet.sets.size() == 1);
  for (const auto* r : {&simnet, &exemplar, &random}) {
    CHECK(r->sets.front().ap >= 0.0);
    CHECK(r->sets.front().ap <= 1.0);
  }
  CHECK(fs::exists(out_simnet / "report.json"));
  CHECK(slurp(out_simnet / "truths_test_3way.csv") == slurp(out_exemplar / "truths_test_3way.csv"));

  CHECK_THROWS_WITH(cmd_eval(c, ModelKind::kDtw, data, std::nullopt, scratch("eval_dtw"), log),
                    doctest::Contains("sequence track"));
  CHECK_THROWS_WITH(cmd_eval(c, ModelKind::kSimnet, data, std::nullopt, scratch("eval_nockpt"), log),
                    doctest::Contains("--checkpoint"));
}

TEST_CASE("sweep is deterministic and non-increasing in the IoU threshold") {
  RunConfig c = tiny_sequence();
  c.eval.sweep_thresholds = {0.1, 0.2, 0.3, 0.4, 0.5, 0.7};
  const fs::path data = scratch("sweep_data"), a = scratch("sweep_a"), b = scratch("sweep_b");
  std::ostringstream log;
  cmd_synth(c, data, log);
  cmd_sweep(c, ModelKind::kDtw, data, std::nullopt, a, log);
  cmd_sweep(c, ModelKind::kDtw, data, std::nullopt, b, log);
  const std::string text = slurp(a / "sweep_test_3way.csv");
  CHECK(text == slurp(b / "sweep_test_3way.csv"));

  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iou_threshold,AP");
  double previous = 2.0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const double ap = std::stod(line.substr(line.find(',') + 1));
    CHECK(ap <= previous);
    previous = ap;
    ++rows;
  }
  CHECK(rows == 6);
}

TEST_CASE("gradcheck passes and catches a sign error in the closed form") {
  std::ostringstream good, bad;
  CHECK(cmd_gradcheck(3, good));
  CHECK(good.str().find("tolerance 1e-09") != std::string::npos);
  CHECK(good.str().find("tolerance 0.0001") != std::string::npos);
  CHECK_FALSE(cmd_gradcheck(3, bad, true));
  CHECK(bad.str().find("FAIL") != std::string::npos);
}
