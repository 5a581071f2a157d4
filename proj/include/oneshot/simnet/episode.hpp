#pragma once

#include <cstdint>
#include <optional>

#include "oneshot/core/tensor.hpp"
#include "oneshot/eval/types.hpp"

namespace oneshot::simnet {

/// One exemplar/target pair. Tensors are channel-first without a batch axis:
/// [C, H, W] for images, [C, frames] for sequences. Episodes that share a
/// target share the tensor handle, which lets scorers embed it once.
struct Episode {
  std::int64_t id = 0;
  core::Tensor exemplar;
  core::Tensor target;
  int label = 0;
  /// Present for positive evaluation episodes.
  std::optional<eval::Box> truth_box;
  /// Bookkeeping only; never an input to any model.
  std::int64_t class_id = -1;
  std::int64_t target_index = -1;
};

}  // namespace oneshot::simnet
