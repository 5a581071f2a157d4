#include "oneshot/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace oneshot::core {

std::vector<double> autograd_gradient(const ScalarFn& fn, const Tensor& point) {
  Tensor x = point.clone();
  x.drop_grad();
  x.set_requires_grad(true);
  Tape tape;
  Tensor loss = fn(x, &tape);
  tape.backward(loss);
  auto g = x.grad();
  return {g.begin(), g.end()};
}

std::vector<double> central_difference(const ScalarFn& fn, const Tensor& point, double h) {
  Tensor x = point.clone();
  x.drop_grad();
  x.set_requires_grad(false);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = fn(x, nullptr).item();
    x[i] = saved - h;
    const double down = fn(x, nullptr).item();
    x[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

double finite_diff_gradcheck(const ScalarFn& fn, const Tensor& point, double h) {
  const auto analytic = autograd_gradient(fn, point);
  const auto numeric = central_difference(fn, point, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / std::max(1.0, std::abs(numeric[i])));
  }
  return worst;
}

}  // namespace oneshot::core
