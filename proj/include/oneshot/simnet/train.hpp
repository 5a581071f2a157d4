#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oneshot/core/params.hpp"
#include "oneshot/simnet/config.hpp"
#include "oneshot/simnet/episode.hpp"
#include "oneshot/simnet/network.hpp"

namespace oneshot::simnet {

/// Stacks the exemplars and targets of `episodes[indices]` into batches,
/// fitting sequence exemplars to config.exemplar_extent.
struct Batch {
  core::Tensor exemplars;
  core::Tensor targets;
  core::Tensor labels;
};
Batch make_batch(std::span<const Episode> episodes, std::span<const std::size_t> indices, const EmbedConfig& config);

/// Mean squared pair loss of a batch. Exemplars and targets are embedded in
/// two invocations that share parameters and running moments.
core::Tensor batch_loss(const Batch& batch, const EmbedConfig& config, core::ParamStore& params, core::Mode mode,
                        core::Tape* tape);

/// One pass over `episodes` in an order shuffled by (seed, epoch), one SGD
/// step per minibatch. Returns the mean loss of every minibatch.
std::vector<double> train_epoch(std::span<const Episode> episodes, const EmbedConfig& config, core::ParamStore& params,
                                const core::SgdConfig& sgd, std::uint64_t seed, std::uint64_t epoch);

/// Inference-mode similarity maps with input-space boxes, pooled by
/// attention. Each distinct target tensor is embedded once. Results do not
/// depend on `workers`.
std::vector<eval::SimilarityMap> score_episodes(std::span<const Episode> episodes, const EmbedConfig& config,
                                                const core::ParamStore& params, std::size_t workers = 1);

}  // namespace oneshot::simnet
