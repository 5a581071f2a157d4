#pragma once

#include <cstddef>
#include <vector>

#include "oneshot/core/tape.hpp"
#include "oneshot/core/tensor.hpp"

namespace oneshot::core {

enum class Mode { kTrain, kInfer };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kNormEpsilon = 1e-12;

// Every op records itself on `tape` when one is given and at least one input
// requires a gradient; otherwise it is a plain forward computation.

/// Valid cross-correlation. input [N, C, L] with kernel [O, C, k], or input
/// [N, C, H, W] with kernel [O, C, kh, kw]. `stride` has one entry per
/// spatial axis, or a single entry applied to all of them.
Tensor conv(const Tensor& input, const Tensor& kernel, const std::vector<std::size_t>& stride,
            Tape* tape = nullptr);

/// Max pooling with window 2 and stride 2 over the spatial axes of a rank-3
/// or rank-4 input. Gradient goes to the first maximum of each window.
Tensor max_pool(const Tensor& input, Tape* tape = nullptr);

/// Per-channel batch normalisation over the batch and spatial axes.
/// Train mode normalises with batch statistics and folds them into the
/// running moments; infer mode normalises with the running moments.
Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, Mode mode, Tape* tape = nullptr);

Tensor relu(const Tensor& input, Tape* tape = nullptr);

/// Divides every vector along `axis` by max(||v||_2, kNormEpsilon).
Tensor l2_normalize(const Tensor& input, std::size_t axis, Tape* tape = nullptr);

/// Softmax of input / temperature along the last axis.
Tensor softmax_temp(const Tensor& input, double temperature, Tape* tape = nullptr);

Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor sub(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor scale(const Tensor& a, double factor, Tape* tape = nullptr);
Tensor square(const Tensor& a, Tape* tape = nullptr);

Tensor sum(const Tensor& a, Tape* tape = nullptr);
Tensor mean(const Tensor& a, Tape* tape = nullptr);
Tensor dot(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
/// Sums out the last axis; a rank-1 input yields shape [1].
Tensor sum_last(const Tensor& a, Tape* tape = nullptr);

Tensor reshape(const Tensor& a, Shape shape, Tape* tape = nullptr);
/// Stacks equally shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts, Tape* tape = nullptr);
/// Slice `index` of the leading axis, with that axis removed.
Tensor select(const Tensor& a, std::size_t index, Tape* tape = nullptr);

}  // namespace oneshot::core
