#pragma once

#include <functional>
#include <vector>

#include "oneshot/core/tensor.hpp"

namespace oneshot::core {

/// Ordered record of differentiable operations for one forward pass.
///
/// Operations append themselves in execution order, so the record is
/// topologically sorted by construction. backward() visits it once in
/// reverse. A tape is not thread-safe; concurrent evaluations use distinct
/// tapes.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  /// True when an op over `inputs` should be recorded on `tape`.
  static bool wants(const Tape* tape, std::initializer_list<const Tensor*> inputs);

  /// Append an operation. `output` is marked requires_grad; `fn` reads
  /// output.grad() and accumulates into the inputs' gradients.
  void record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

  /// Seed d(loss)/d(loss) = 1 and sweep the record in reverse. Gradients of
  /// intermediate results are reset at the start of each sweep; gradients of
  /// leaf tensors accumulate across sweeps.
  void backward(const Tensor& loss);

  std::size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }

 private:
  struct Op {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };
  std::vector<Op> ops_;
};

}  // namespace oneshot::core
