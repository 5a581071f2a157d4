#include <doctest.h>

#include <chrono>
#include <cmath>
#include <functional>

#include "oneshot/baselines/dtw.hpp"
#include "oneshot/baselines/exemplar.hpp"
#include "oneshot/core/random.hpp"
#include "oneshot/synth/episodes.hpp"

using namespace oneshot;
using namespace oneshot::baselines;

namespace {

core::Tensor random_sequence(core::Rng& rng, std::size_t channels, std::size_t len) {
  core::Tensor t({channels, len});
  for (double& v : t.values()) v = core::normal(rng, 0.0, 1.0);
  return t;
}

core::Tensor image_from(std::size_t h, std::size_t w, const std::function<double(std::size_t, std::size_t)>& f) {
  core::Tensor t({1, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) t.values()[y * w + x] = f(y, x);
  }
  return t;
}

}  // namespace

TEST_CASE("dtw dynamic program equals exhaustive path enumeration") {
  core::Rng rng(17);
  int instances = 0;
  for (std::size_t la = 1; la <= 5; ++la) {
    for (std::size_t lb = 1; lb <= 5; ++lb) {
      for (int trial = 0; trial < 10; ++trial) {
        const core::Tensor a = random_sequence(rng, 3, la), b = random_sequence(rng, 3, lb);
        REQUIRE(dtw_cost(a, b) == dtw_cost_brute_force(a, b));
        ++instances;
      }
    }
  }
  CHECK(instances >= 200);
}

TEST_CASE("dtw cost basic properties") {
  core::Rng rng(3);
  const core::Tensor a = random_sequence(rng, 4, 7), b = random_sequence(rng, 4, 9);
  CHECK(dtw_cost(a, a) == 0.0);
  CHECK(dtw_cost(a, b) == doctest::Approx(dtw_cost(b, a)).epsilon(1e-12));
  CHECK(dtw_cost(a, b) > 0.0);

  core::Tensor x({2, 1}, {0.0, 0.0}), y({2, 1}, {3.0, 4.0});
  CHECK(dtw_cost(x, y) == 5.0);

  // No worse than the diagonal alignment for equal lengths.
  const core::Tensor c = random_sequence(rng, 4, 7);
  double diagonal = 0.0;
  for (std::size_t i = 0; i < 7; ++i) diagonal += frame_distance(a, i, c, i);
  CHECK(dtw_cost(a, c) <= diagonal);

  CHECK_THROWS(dtw_cost(core::Tensor({4, 0}), a));
  CHECK_THROWS(dtw_cost(random_sequence(rng, 3, 4), a));
}

TEST_CASE("dtw similarity maps cost to (0, 1]") {
  CHECK(dtw_similarity(0.0, 50.0) == 1.0);
  CHECK(dtw_similarity(50.0, 50.0) == doctest::Approx(0.36787944117144233));
  CHECK(dtw_similarity(10.0, 50.0) > dtw_similarity(11.0, 50.0));
  CHECK_THROWS(dtw_similarity(1.0, 0.0));
}

TEST_CASE("dtw scan finds inserted keywords") {
  synth::SequenceStyle style;
  style.noise_std = 0.0;
  style.min_warp = style.max_warp = 1.0;
  const core::Tensor tmpl = synth::make_sequence_template(9, style);
  SUBCASE("exact copy scores 1 at its offset") {
    // Search a seed whose start lies on the scan grid.
    for (std::uint64_t seed = 0;; ++seed) {
      const auto t = synth::gen_sequence_target(tmpl, 0, true, seed, style);
      if (t.embedded->start % 4 != 0) continue;
      const auto map = dtw_scan(tmpl, t.features, DtwConfig{});
      const std::size_t best = eval::argmax_location(map.scores);
      CHECK(map.scores[best] == 1.0);
      CHECK(map.boxes[best] == eval::Box::interval(static_cast<double>(t.embedded->start), static_cast<double>(tmpl.dim(1))));
      for (double s : map.scores) {
        CHECK(s > 0.0);
        CHECK(s <= 1.0);
      }
      break;
    }
  }
  SUBCASE("warped noiseless inserts are located within two steps") {
    synth::SequenceStyle warped = style;
    warped.min_warp = 0.8;
    warped.max_warp = 1.25;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto t = synth::gen_sequence_target(tmpl, 0, true, seed, warped);
      const auto map = dtw_scan(tmpl, t.features, DtwConfig{});
      const double found = map.boxes[eval::argmax_location(map.scores)].offset[0];
      CHECK(std::abs(found - static_cast<double>(t.embedded->start)) <= 2.0 * 4.0);
    }
  }
  CHECK_THROWS(dtw_scan(core::Tensor({16, 300}), core::Tensor({16, 200}), DtwConfig{}));
  CHECK_THROWS(validate(DtwConfig{0.0}));
}

TEST_CASE("hog descriptor geometry and orientation") {
  const HogConfig cfg;
  const core::Tensor flat = image_from(32, 32, [](auto, auto) { return 0.4; });
  const auto cells = hog_cells(flat, cfg);
  CHECK(cells.size() == 8 * 8 * 9);
  for (double v : cells) CHECK(v == 0.0);
  CHECK(hog_features(flat, cfg).size() == 7 * 7 * 36);
  CHECK(hog_feature_length(32, 32, cfg) == 1764);

  // Intensity changes along x only: all energy in the 0-degree bin.
  const core::Tensor step = image_from(32, 32, [](auto, std::size_t x) { return x < 16 ? 0.0 : 1.0; });
  const auto h = hog_cells(step, cfg);
  double bin0 = 0.0, other = 0.0;
  for (std::size_t c = 0; c < 64; ++c) {
    bin0 += h[c * 9];
    for (std::size_t b = 1; b < 9; ++b) other += h[c * 9 + b];
  }
  CHECK(bin0 > 0.0);
  CHECK(other == 0.0);

  // A 45-degree gradient lands between bins 2 (40 deg) and 3 (60 deg).
  const core::Tensor diag = image_from(32, 32, [](std::size_t y, std::size_t x) { return 0.01 * static_cast<double>(x + y); });
  const auto d = hog_cells(diag, cfg);
  const std::size_t centre = (3 * 8 + 3) * 9;
  CHECK(d[centre + 2] == doctest::Approx(0.75 * std::sqrt(2.0) * 0.02 * 16));
  CHECK(d[centre + 3] == doctest::Approx(0.25 * std::sqrt(2.0) * 0.02 * 16));

  CHECK_THROWS(hog_cells(core::Tensor({1, 30, 32}), cfg));
}

TEST_CASE("hog features ignore a constant offset and stay unit-bounded") {
  core::Rng rng(5);
  core::Tensor img({1, 32, 32});
  for (double& v : img.values()) v = core::uniform(rng);
  core::Tensor shifted = img.clone();
  for (double& v : shifted.values()) v += 0.3;
  const auto a = hog_features(img), b = hog_features(shifted);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  for (std::size_t blk = 0; blk < 49; ++blk) {
    double sq = 0.0;
    for (std::size_t k = 0; k < 36; ++k) sq += a[blk * 36 + k] * a[blk * 36 + k];
    CHECK(sq == doctest::Approx(1.0));
  }
}

TEST_CASE("exemplar classifier on a separable toy set") {
  const std::vector<double> positive{2.0, 2.0};
  const std::vector<std::vector<double>> negatives{{-1.0, -0.5}, {-0.5, -1.5}, {0.5, -1.0}, {-1.0, 0.8}};
  ExemplarClfConfig cfg;
  cfg.negative_weight = 1.0;
  const NegativePool pool = make_negative_pool(negatives, cfg.bias);
  FitReport report;
  const LinearClassifier clf = train_exemplar_classifier(positive, pool, cfg, &report);
  CHECK(report.converged);
  CHECK(report.gradient_norm <= 1e-6);
  CHECK(exemplar_objective(clf.weights, positive, pool, cfg) < exemplar_objective({0.0, 0.0, 0.0}, positive, pool, cfg));
  for (const auto& n : negatives) CHECK(clf.logit(positive) > clf.logit(n));
  for (std::size_t i = 1; i < report.objective.size(); ++i) CHECK(report.objective[i] <= report.objective[i - 1]);

  // Doubling both class weights and halving the regulariser keeps the
  // hardest negative the hardest.
  auto hardest = [&](const LinearClassifier& c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < negatives.size(); ++i) {
      if (c.logit(negatives[i]) > c.logit(negatives[best])) best = i;
    }
    return best;
  };
  ExemplarClfConfig scaled = cfg;
  scaled.positive_weight *= 2.0;
  scaled.negative_weight *= 2.0;
  scaled.l2 *= 0.5;
  CHECK(hardest(train_exemplar_classifier(positive, pool, scaled)) == hardest(clf));

  ExemplarClfConfig capped = cfg;
  capped.max_iterations = 1;
  FitReport short_report;
  train_exemplar_classifier(positive, pool, capped, &short_report);
  CHECK_FALSE(short_report.converged);
  CHECK_THROWS(make_negative_pool({}, 1.0));
}

TEST_CASE("exemplar classifier on glyph descriptors converges monotonically") {
  const synth::SyntheticGlyphs glyphs(40, 8);
  std::vector<std::vector<double>> negatives;
  for (std::size_t c = 1; c < 40; ++c) {
    for (std::uint64_t k = 0; k < 10; ++k) negatives.push_back(hog_features(glyphs.instance(c, k)));
  }
  const ExemplarClfConfig cfg;
  const NegativePool pool = make_negative_pool(negatives, cfg.bias);
  FitReport report;
  const auto start = std::chrono::steady_clock::now();
  const LinearClassifier clf = train_exemplar_classifier(hog_features(glyphs.instance(0, 0)), pool, cfg, &report);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("glyph fit: " << report.iterations << " iterations, " << seconds << " s");
  CHECK(report.converged);
  for (std::size_t i = 1; i < report.objective.size(); ++i) REQUIRE(report.objective[i] <= report.objective[i - 1]);
  CHECK(clf.logit(hog_features(glyphs.instance(0, 0))) > clf.logit(negatives.front()));
}

TEST_CASE("exemplar scan locates the exact exemplar in a tiled target") {
  const auto glyphs = std::make_shared<synth::SyntheticGlyphs>(30, 4);
  const std::vector<std::int64_t> ids{0, 1, 2, 3};
  const std::vector<std::uint64_t> inst{7, 7, 7, 7};
  const auto tiled = synth::tile_target(*glyphs, ids, inst, 2, 5);
  std::vector<std::vector<double>> negatives;
  for (std::size_t c = 4; c < 30; ++c) negatives.push_back(hog_features(glyphs->instance(c, 0)));
  const ExemplarBaseline baseline{HogConfig{}, ExemplarClfConfig{}, make_negative_pool(negatives, 1.0)};
  const auto clf = train_exemplar_classifier(hog_features(glyphs->instance(2, 7)), baseline.negatives, baseline.clf);
  const auto map = exemplar_scan(clf, tiled.image, 32, baseline.hog);
  REQUIRE(map.scores.size() == 81);
  for (double s : map.scores) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  eval::Box truth;
  for (const auto& cell : tiled.cells) {
    if (cell.class_id == 2) truth = cell.box;
  }
  CHECK(map.boxes[eval::argmax_location(map.scores)] == truth);
}

TEST_CASE("baseline scorers reject the wrong track") {
  synth::SequenceStyle style;
  const auto gen = synth::sequence_generator(10, 1, style);
  const auto seq = synth::build_nway_eval(gen, std::vector<std::int64_t>{0, 1, 2, 3, 4}, 2, 1, 1);
  const auto glyph_gen = synth::image_generator(std::make_shared<synth::SyntheticGlyphs>(10, 1), 1);
  const auto img = synth::build_nway_eval(glyph_gen, std::vector<std::int64_t>{0, 1, 2, 3}, 2, 1, 1);
  CHECK(dtw_score_episodes(seq, DtwConfig{}, 1).size() == 2);
  CHECK_THROWS_WITH(dtw_score_episodes(img, DtwConfig{}, 1), doctest::Contains("sequence track"));
  const auto baseline = make_exemplar_baseline(img, HogConfig{}, ExemplarClfConfig{}, 10);
  CHECK(baseline.negatives.count == 2);
  CHECK_THROWS_WITH(exemplar_score_episodes(seq, baseline, 1), doctest::Contains("image track"));
}
