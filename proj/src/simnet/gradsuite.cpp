#include "oneshot/simnet/gradsuite.hpp"

#include <algorithm>
#include <cmath>

#include "oneshot/core/gradcheck.hpp"
#include "oneshot/core/random.hpp"
#include "oneshot/simnet/network.hpp"
#include "oneshot/simnet/train.hpp"

namespace oneshot::simnet {

double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::max(1.0, std::abs(reference));
}

std::vector<ScoreInstance> random_score_instances(std::uint64_t seed, std::size_t count) {
  static constexpr double kTemperatures[] = {1.0 / 3.0, 1.0, 3.0};
  core::Rng rng(core::mix_seed({seed, 0x73636f7265ULL}));
  std::vector<ScoreInstance> out(count);
  for (auto& inst : out) {
    const auto len = static_cast<std::size_t>(core::uniform_int(rng, 5, 50));
    inst.scores.resize(len);
    for (double& s : inst.scores) s = core::uniform(rng);
    inst.temperature = kTemperatures[core::uniform_int(rng, 0, 2)];
    inst.label = static_cast<int>(core::uniform_int(rng, 0, 1));
  }
  return out;
}

ScoreGradientReport check_score_gradients(const std::vector<ScoreInstance>& instances,
                                          const ScoreGradientFn& closed_form, double h) {
  ScoreGradientReport report;
  for (const auto& inst : instances) {
    const std::size_t len = inst.scores.size();
    const core::Tensor labels({1}, static_cast<double>(inst.label));
    const core::ScalarFn loss_fn = [&](const core::Tensor& s, core::Tape* tape) {
      return squared_error(attention_pool(s, inst.temperature, tape), labels, tape);
    };
    const core::ScalarFn pooled_fn = [&](const core::Tensor& s, core::Tape* tape) {
      return attention_pool(s, inst.temperature, tape);
    };
    const core::Tensor point({len}, inst.scores);
    const auto autograd = core::autograd_gradient(loss_fn, point);
    const auto numeric = core::central_difference(loss_fn, point, h);
    const auto reference = closed_form(inst.scores, inst.label, inst.temperature);
    const auto pooled_grad = core::autograd_gradient(pooled_fn, point);
    ++report.instances;

    double pooled_sum = 0.0;
    for (std::size_t l = 0; l < len; ++l) {
      report.closed_form_error = std::max(report.closed_form_error, relative_error(autograd[l], reference.at(l)));
      report.finite_difference_error = std::max(report.finite_difference_error, relative_error(autograd[l], numeric[l]));
      pooled_sum += pooled_grad[l];
    }
    report.sum_rule_error = std::max(report.sum_rule_error, std::abs(pooled_sum - 1.0));

    if (inst.label != 1) continue;
    const double y_hat = pooled_fn(point, nullptr).item();
    if (!(y_hat < 1.0)) continue;
    const double floor = y_hat - inst.temperature;
    for (std::size_t l = 0; l < len; ++l) {
      for (std::size_t m = 0; m < len; ++m) {
        if (inst.scores[l] > inst.scores[m] && inst.scores[m] >= floor) {
          ++report.ordering_pairs;
          if (!(-autograd[l] > -autograd[m])) ++report.ordering_violations;
        }
      }
    }
  }
  return report;
}

EmbedConfig gradcheck_config(std::size_t spatial_rank) {
  EmbedConfig cfg;
  cfg.spatial_rank = spatial_rank;
  cfg.input_channels = spatial_rank == 1 ? 3 : 1;
  cfg.layers = {LayerSpec{4, 3, 1, false}, LayerSpec{4, 3, 1, true}};
  return cfg;
}

double check_network_gradient(const EmbedConfig& config, std::uint64_t seed, std::size_t coordinates, double h) {
  core::Rng rng(core::mix_seed({seed, 0x6e6574ULL}));
  core::ParamStore params = init_params(config, seed);
  const std::size_t ex_extent = min_input_extent(config) + 2 * total_stride(config);
  const std::size_t tg_extent = ex_extent + 2 * total_stride(config);
  std::vector<Episode> episodes;
  for (int i = 0; i < 3; ++i) {
    Episode e;
    core::Shape ex_shape{config.input_channels}, tg_shape{config.input_channels};
    for (std::size_t a = 0; a < config.spatial_rank; ++a) {
      ex_shape.push_back(ex_extent);
      tg_shape.push_back(tg_extent);
    }
    e.exemplar = core::rand_uniform(rng, ex_shape);
    e.target = core::rand_uniform(rng, tg_shape);
    e.label = i % 2 == 0 ? 1 : 0;
    episodes.push_back(e);
  }
  EmbedConfig cfg = config;
  cfg.exemplar_extent = 0;
  const std::vector<std::size_t> all{0, 1, 2};
  const Batch batch = make_batch(episodes, all, cfg);

  // Train mode normalises with batch statistics; the running-moment update
  // it performs does not feed back into the loss.
  auto loss_value = [&] { return batch_loss(batch, cfg, params, core::Mode::kTrain, nullptr).item(); };
  params.zero_grad();
  core::Tape tape;
  tape.backward(batch_loss(batch, cfg, params, core::Mode::kTrain, &tape));

  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    if (params.entries()[i].trainable) trainable.push_back(i);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < coordinates; ++k) {
    auto& entry = params.entries()[trainable[core::uniform_int(rng, 0, static_cast<std::int64_t>(trainable.size()) - 1)]];
    const auto index = static_cast<std::size_t>(core::uniform_int(rng, 0, static_cast<std::int64_t>(entry.tensor.size()) - 1));
    const double analytic = entry.tensor.grad()[index];
    const double saved = entry.tensor[index];
    entry.tensor[index] = saved + h;
    const double plus = loss_value();
    entry.tensor[index] = saved - h;
    const double minus = loss_value();
    entry.tensor[index] = saved;
    worst = std::max(worst, relative_error(analytic, (plus - minus) / (2.0 * h)));
  }
  return worst;
}

}  // namespace oneshot::simnet
