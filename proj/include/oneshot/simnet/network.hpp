#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "oneshot/core/ops.hpp"
#include "oneshot/core/params.hpp"
#include "oneshot/eval/types.hpp"
#include "oneshot/simnet/config.hpp"

namespace oneshot::simnet {

// Parameter names per layer i (1-based): layer<i>.weight [O, C, k(, k)],
// layer<i>.gamma, layer<i>.beta and the buffers layer<i>.running_mean,
// layer<i>.running_var. Convolutions carry no bias; batch norm's beta
// plays that role.

/// He-normal weights (std = sqrt(2 / fan_in)), gamma 1, beta 0, running
/// mean 0, running variance 1.
core::ParamStore init_params(const EmbedConfig& config, std::uint64_t seed);

/// Shared-weight embedding of a batch [B, C, spatial...]. Every layer ends
/// in ReLU, so outputs are elementwise nonnegative. Throws with the
/// minimum input extent when the input is too small.
core::Tensor embed(const core::Tensor& input, const EmbedConfig& config, core::ParamStore& params, core::Mode mode,
                   core::Tape* tape = nullptr);

/// Centre-crops or zero-pads the last axis of `x` to `extent`.
core::Tensor fit_last_axis(const core::Tensor& x, std::size_t extent);

/// Spatial extents of the similarity map for the given embedding extents.
std::vector<std::size_t> map_extents(const core::Shape& exemplar_emb, const core::Shape& target_emb);

/// Cosine similarity of each exemplar embedding [B, C, h(, w)] with every
/// equally sized patch of the matching target embedding [B, C, H(, W)].
/// Output [B, L] with locations in row-major map order. Differentiable in
/// both arguments.
core::Tensor similarity_scores(const core::Tensor& exemplar_emb, const core::Tensor& target_emb,
                               core::Tape* tape = nullptr);

/// Maps location indices to input-space boxes: location (i, j) covers
/// [i * stride, i * stride + box_extent[0]) along axis 0, and so on.
struct MapGeometry {
  std::size_t rank = 2;
  std::size_t stride = 1;
  std::array<double, 2> box_extent{};
  std::array<double, 2> target_extent{};
};

MapGeometry map_geometry(const EmbedConfig& config, const core::Shape& exemplar_input, const core::Shape& target_input);

/// Similarity map of one exemplar embedding [C, h(, w)] against one target
/// embedding [C, H(, W)]. Without a geometry, boxes are in embedding units.
eval::SimilarityMap similarity_map(const core::Tensor& exemplar_emb, const core::Tensor& target_emb);
eval::SimilarityMap similarity_map(const core::Tensor& exemplar_emb, const core::Tensor& target_emb,
                                   const MapGeometry& geometry);

struct PairScore {
  double y_hat = 0.0;
  std::vector<double> weights;
  std::size_t argmax_location = 0;
};

std::vector<double> attention_weights(const eval::SimilarityMap& map, double temperature);
/// y_hat = sum_l w_l s_l; argmax ties go to the lowest index.
PairScore pair_score(const eval::SimilarityMap& map, std::span<const double> weights);
double pair_loss(const PairScore& score, int label);

/// d loss / d s_l = 2 (y_hat - y) w_l (1 + (s_l - y_hat) / T), in closed form.
std::vector<double> analytic_score_gradient(std::span<const double> scores, int label, double temperature);

/// Attention pooling on the tape: scores [B, L] -> y_hat [B].
core::Tensor attention_pool(const core::Tensor& scores, double temperature, core::Tape* tape = nullptr);
/// mean_b (y_hat_b - label_b)^2 as a [1] tensor.
core::Tensor squared_error(const core::Tensor& y_hat, const core::Tensor& labels, core::Tape* tape = nullptr);

}  // namespace oneshot::simnet
