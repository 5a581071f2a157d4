#include "oneshot/core/tape.hpp"

#include <stdexcept>

namespace oneshot::core {

bool Tape::wants(const Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->requires_grad()) return true;
  }
  return false;
}

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
  output.set_requires_grad(true);
  ops_.push_back(Op{std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got " +
                                (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  bool on_tape = false;
  for (auto& op : ops_) {
    op.output.zero_grad();
    if (op.output.same_as(loss)) on_tape = true;
  }
  if (!on_tape) throw std::invalid_argument("backward: loss was not produced on this tape");

  Tensor seed = loss;
  seed.grad()[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not on the path to the loss
    it->fn();
  }
}

}  // namespace oneshot::core
