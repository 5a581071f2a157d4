#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oneshot/core/random.hpp"
#include "oneshot/simnet/gradsuite.hpp"
#include "oneshot/simnet/network.hpp"
#include "oneshot/simnet/train.hpp"

using namespace oneshot;
using core::Tensor;

TEST_CASE("closed-form score gradient") {
  SUBCASE("agrees with autograd and finite differences; sum rule; restricted ordering") {
    const auto instances = simnet::random_score_instances(2024, 150);
    const auto report = simnet::check_score_gradients(instances, simnet::analytic_score_gradient);
    CHECK(report.instances == 150);
    CHECK(report.closed_form_error < 1e-9);
    CHECK(report.finite_difference_error < 1e-4);
    CHECK(report.sum_rule_error < 1e-9);
    CHECK(report.ordering_pairs > 1000);
    CHECK(report.ordering_violations == 0);
  }
  SUBCASE("constant map with a positive label") {
    const std::vector<double> s(8, 0.3);
    for (double g : simnet::analytic_score_gradient(s, 1, 1.0 / 3.0)) {
      CHECK(g == doctest::Approx(2.0 * (0.3 - 1.0) / 8.0).epsilon(1e-14));
    }
  }
  SUBCASE("a sign error is detected") {
    const auto instances = simnet::random_score_instances(5, 20);
    const simnet::ScoreGradientFn flipped = [](std::span<const double> s, int y, double t) {
      auto g = simnet::analytic_score_gradient(s, y, t);
      for (double& v : g) v = -v;
      return g;
    };
    CHECK(simnet::check_score_gradients(instances, flipped).closed_form_error > 1e-3);
  }
  SUBCASE("the unrestricted ordering can fail below y_hat - T") {
    // Far below y_hat - T the factor 1 + (s - y_hat)/T turns negative, so a
    // higher score can receive a smaller push.
    const std::vector<double> s{1.0, 0.0, 0.05};
    const auto g = simnet::analytic_score_gradient(s, 1, 0.1);
    CHECK(s[2] > s[1]);
    CHECK_FALSE(-g[2] > -g[1]);
  }
  CHECK_THROWS(simnet::analytic_score_gradient(std::vector<double>{0.1}, 1, 0.0));
}

TEST_CASE("network loss gradient against finite differences") {
  CHECK(simnet::check_network_gradient(simnet::gradcheck_config(2), 1, 24) < 1e-4);
  CHECK(simnet::check_network_gradient(simnet::gradcheck_config(1), 2, 24) < 1e-4);
}

namespace {

std::vector<simnet::Episode> repeated_positive(std::size_t count) {
  core::Rng rng(12);
  Tensor target = core::rand_uniform(rng, {1, 40, 40});
  Tensor exemplar({1, 32, 32});
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) exemplar[y * 32 + x] = std::clamp(target[(4 + y) * 40 + 8 + x] + 0.2, 0.0, 1.0);
  std::vector<simnet::Episode> eps(count);
  for (std::size_t i = 0; i < count; ++i) {
    eps[i].id = static_cast<std::int64_t>(i);
    eps[i].exemplar = exemplar;
    eps[i].target = target;
    eps[i].label = 1;
  }
  return eps;
}

}  // namespace

TEST_CASE("train_epoch") {
  const auto cfg = simnet::EmbedConfig::desk(2, 1);
  const auto episodes = repeated_positive(64);
  core::SgdConfig sgd{0.1, 8};

  SUBCASE("loss decreases over one epoch on identical episodes") {
    auto params = simnet::init_params(cfg, 3);
    const auto losses = simnet::train_epoch(episodes, cfg, params, sgd, 1, 0);
    REQUIRE(losses.size() == 8);
    CHECK(losses.back() < losses.front());
  }
  SUBCASE("fixed seed gives a bit-identical trace") {
    auto a = simnet::init_params(cfg, 3);
    auto b = simnet::init_params(cfg, 3);
    const auto la = simnet::train_epoch(std::span(episodes).first(16), cfg, a, sgd, 9, 2);
    const auto lb = simnet::train_epoch(std::span(episodes).first(16), cfg, b, sgd, 9, 2);
    CHECK(la == lb);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto va = a.entries()[i].tensor.values();
      const auto vb = b.entries()[i].tensor.values();
      CHECK(std::equal(va.begin(), va.end(), vb.begin()));
    }
  }
  SUBCASE("zero learning rate leaves trainable parameters untouched") {
    auto params = simnet::init_params(cfg, 3);
    const auto before = params.clone();
    simnet::train_epoch(std::span(episodes).first(8), cfg, params, core::SgdConfig{0.0, 8}, 1, 0);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params.entries()[i].trainable) continue;
      const auto va = params.entries()[i].tensor.values();
      const auto vb = before.entries()[i].tensor.values();
      CHECK(std::equal(va.begin(), va.end(), vb.begin()));
    }
  }
  SUBCASE("empty stream") {
    auto params = simnet::init_params(cfg, 3);
    CHECK_THROWS_AS(simnet::train_epoch({}, cfg, params, sgd, 1, 0), std::invalid_argument);
  }
}

TEST_CASE("score_episodes") {
  const auto cfg = simnet::EmbedConfig::desk(2, 1);
  auto params = simnet::init_params(cfg, 5);
  auto episodes = repeated_positive(3);
  core::Rng rng(4);
  episodes[2].target = core::rand_uniform(rng, {1, 40, 40});
  const auto serial = simnet::score_episodes(episodes, cfg, params, 1);
  const auto threaded = simnet::score_episodes(episodes, cfg, params, 3);
  REQUIRE(serial.size() == 3);
  CHECK(serial[0].scores.size() == 9);
  CHECK(serial[0].pooling == eval::Pooling::kAttention);
  for (std::size_t i = 0; i < 3; ++i) CHECK(serial[i].scores == threaded[i].scores);
  CHECK(serial[0].scores == serial[1].scores);
  for (const auto& map : serial) {
    for (double s : map.scores) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0 + 1e-12);
    }
    const double y_hat = eval::pooled_confidence(map);
    CHECK(y_hat >= *std::min_element(map.scores.begin(), map.scores.end()));
    CHECK(y_hat <= *std::max_element(map.scores.begin(), map.scores.end()));
  }
}
