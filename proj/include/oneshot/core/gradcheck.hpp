#pragma once

#include <functional>

#include "oneshot/core/tape.hpp"
#include "oneshot/core/tensor.hpp"

namespace oneshot::core {

/// A scalar function of one tensor. It records on `tape` when given one and
/// must be pure: same point, same value.
using ScalarFn = std::function<Tensor(const Tensor& point, Tape* tape)>;

/// Autograd gradient of `fn` at `point`.
std::vector<double> autograd_gradient(const ScalarFn& fn, const Tensor& point);

/// Central-difference gradient of `fn` at `point` with step `h`.
std::vector<double> central_difference(const ScalarFn& fn, const Tensor& point, double h);

/// max_i |autograd_i - fd_i| / max(1, |fd_i|).
double finite_diff_gradcheck(const ScalarFn& fn, const Tensor& point, double h = 1e-5);

}  // namespace oneshot::core
