#include "oneshot/simnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "oneshot/core/parallel.hpp"
#include "oneshot/core/random.hpp"

namespace oneshot::simnet {

namespace {

core::Tensor prepared_exemplar(const Episode& episode, const EmbedConfig& config) {
  if (config.spatial_rank == 1 && config.exemplar_extent) return fit_last_axis(episode.exemplar, config.exemplar_extent);
  return episode.exemplar;
}

core::Tensor with_batch_axis(const core::Tensor& t) {
  core::Shape shape{1};
  shape.insert(shape.end(), t.shape().begin(), t.shape().end());
  return core::Tensor(shape, std::vector<double>(t.values().begin(), t.values().end()));
}

core::Tensor drop_batch_axis(const core::Tensor& t) { return core::select(t, 0); }

}  // namespace

Batch make_batch(std::span<const Episode> episodes, std::span<const std::size_t> indices, const EmbedConfig& config) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  std::vector<core::Tensor> exemplars, targets;
  std::vector<double> labels;
  for (std::size_t i : indices) {
    const Episode& e = episodes[i];
    exemplars.push_back(prepared_exemplar(e, config));
    targets.push_back(e.target);
    labels.push_back(static_cast<double>(e.label));
  }
  for (const auto& t : targets) {
    if (t.shape() != targets.front().shape()) {
      throw std::invalid_argument("make_batch: targets in one minibatch must share a shape, got " +
                                  core::shape_string(t.shape()) + " and " + core::shape_string(targets.front().shape()));
    }
  }
  for (const auto& x : exemplars) {
    if (x.shape() != exemplars.front().shape()) {
      throw std::invalid_argument("make_batch: exemplars in one minibatch must share a shape");
    }
  }
  return Batch{core::stack(exemplars), core::stack(targets), core::Tensor({labels.size()}, labels)};
}

core::Tensor batch_loss(const Batch& batch, const EmbedConfig& config, core::ParamStore& params, core::Mode mode,
                        core::Tape* tape) {
  const core::Tensor ex = embed(batch.exemplars, config, params, mode, tape);
  const core::Tensor tg = embed(batch.targets, config, params, mode, tape);
  const core::Tensor scores = similarity_scores(ex, tg, tape);
  return squared_error(attention_pool(scores, config.temperature, tape), batch.labels, tape);
}

std::vector<double> train_epoch(std::span<const Episode> episodes, const EmbedConfig& config, core::ParamStore& params,
                                const core::SgdConfig& sgd, std::uint64_t seed, std::uint64_t epoch) {
  if (episodes.empty()) throw std::invalid_argument("train_epoch: empty episode stream");
  // A zero learning rate is allowed here: it runs the forward/backward
  // passes and moment updates while holding the weights fixed.
  if (!(sgd.learning_rate >= 0.0) || !std::isfinite(sgd.learning_rate)) {
    throw std::invalid_argument("train_epoch: learning rate must be finite and nonnegative");
  }
  if (sgd.minibatch_size == 0) throw std::invalid_argument("train_epoch: minibatch size must be positive");
  validate(config);
  std::vector<std::size_t> order(episodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  core::Rng rng(core::mix_seed({seed, 0x65706f6368ULL, epoch}));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> losses;
  for (std::size_t start = 0; start < order.size(); start += sgd.minibatch_size) {
    const std::size_t end = std::min(order.size(), start + sgd.minibatch_size);
    const Batch batch = make_batch(episodes, std::span(order).subspan(start, end - start), config);
    core::Tape tape;
    const core::Tensor loss = batch_loss(batch, config, params, core::Mode::kTrain, &tape);
    tape.backward(loss);
    core::sgd_step(params, sgd);
    losses.push_back(loss.item());
  }
  return losses;
}

std::vector<eval::SimilarityMap> score_episodes(std::span<const Episode> episodes, const EmbedConfig& config,
                                                const core::ParamStore& params, std::size_t workers) {
  // Inference never writes to the store; the clone only provides the
  // mutable reference embed() takes.
  core::ParamStore frozen = params.clone();

  std::unordered_map<std::uintptr_t, std::size_t> target_slot;
  std::vector<std::size_t> episode_target(episodes.size());
  std::vector<const core::Tensor*> targets;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto [it, inserted] = target_slot.try_emplace(episodes[i].target.id(), targets.size());
    if (inserted) targets.push_back(&episodes[i].target);
    episode_target[i] = it->second;
  }

  std::vector<core::Tensor> target_emb(targets.size());
  core::parallel_for(targets.size(), workers, [&](std::size_t t) {
    target_emb[t] = drop_batch_axis(embed(with_batch_axis(*targets[t]), config, frozen, core::Mode::kInfer));
  });

  std::vector<eval::SimilarityMap> maps(episodes.size());
  core::parallel_for(episodes.size(), workers, [&](std::size_t i) {
    const core::Tensor ex = prepared_exemplar(episodes[i], config);
    const core::Tensor ex_emb = drop_batch_axis(embed(with_batch_axis(ex), config, frozen, core::Mode::kInfer));
    const MapGeometry geometry = map_geometry(config, ex.shape(), episodes[i].target.shape());
    maps[i] = similarity_map(ex_emb, target_emb[episode_target[i]], geometry);
    maps[i].pooling = eval::Pooling::kAttention;
    maps[i].temperature = config.temperature;
  });
  return maps;
}

}  // namespace oneshot::simnet
