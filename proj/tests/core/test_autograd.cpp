#include <cmath>

#include "doctest.h"
#include "oneshot/core/gradcheck.hpp"
#include "oneshot/core/ops.hpp"
#include "oneshot/core/random.hpp"

using namespace oneshot::core;

TEST_CASE("backward: sum and dot") {
  Tensor x({4}, {1, -2, 3, 0.5}, true);
  Tape tape;
  Tensor loss = sum(x, &tape);
  tape.backward(loss);
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor a({3}, {1, 2, 3}, true), b({3}, {4, 5, 6}, true);
  Tape t2;
  Tensor d = dot(a, b, &t2);
  CHECK(d.item() == 32.0);
  t2.backward(d);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.grad()[i] == b[i]);
    CHECK(b.grad()[i] == a[i]);
  }
}

TEST_CASE("backward: repeated sweeps accumulate into leaves only") {
  Tensor x({3}, {1, 2, 3}, true);
  Tape tape;
  Tensor y = square(x, &tape);
  Tensor loss = sum(y, &tape);
  tape.backward(loss);
  tape.backward(loss);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(4.0 * x[i]));
}

TEST_CASE("backward: rejects non-scalar or foreign loss") {
  Tensor x({3}, 1.0, true);
  Tape tape;
  Tensor y = square(x, &tape);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
  CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0)), std::invalid_argument);
}

TEST_CASE("gradcheck: sum of squares") {
  Rng rng(1);
  ScalarFn fn = [](const Tensor& x, Tape* t) { return sum(square(x, t), t); };
  CHECK(finite_diff_gradcheck(fn, randn(rng, {10}), 1e-5) < 1e-9);
}

TEST_CASE("gradcheck: softmax_temp then dot with constants") {
  Rng rng(2);
  Tensor weights = randn(rng, {12});
  ScalarFn fn = [&](const Tensor& x, Tape* t) { return dot(softmax_temp(x, 1.0 / 3.0, t), weights, t); };
  CHECK(finite_diff_gradcheck(fn, rand_uniform(rng, {12}), 1e-5) < 1e-6);
}

TEST_CASE("gradcheck: every differentiable op") {
  Rng rng(42);
  const double tol = 1e-4;
  auto probe = [&](const Shape& s) { return randn(rng, s); };

  SUBCASE("conv w.r.t. input and kernel, 2-D strided") {
    Tensor w = probe({3, 2, 3, 3});
    Tensor x = probe({2, 2, 7, 6});
    Tensor r = probe({2, 3, 3, 2});
    CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return dot(conv(p, w, {2}, t), r, t); }, x) < tol);
    CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return dot(conv(x, p, {2}, t), r, t); }, w) < tol);
  }
  SUBCASE("conv 1-D") {
    Tensor w = probe({4, 3, 5});
    Tensor x = probe({2, 3, 12});
    Tensor r = probe({2, 4, 8});
    CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return dot(conv(p, w, {1}, t), r, t); }, x) < tol);
    CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return dot(conv(x, p, {1}, t), r, t); }, w) < tol);
  }
  SUBCASE("max_pool away from ties") {
    Tensor x = probe({1, 2, 6, 4});
    Tensor r = probe({1, 2, 3, 2});
    CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return dot(max_pool(p, t), r, t); }, x) < tol);
  }
  SUBCASE("batch_norm train and infer") {
    Tensor x = probe({3, 2, 4});
    Tensor g = probe({2}), b = probe({2});
    Tensor r = probe({3, 2, 4});
    for (Mode mode : {Mode::kTrain, Mode::kInfer}) {
      auto run = [&](const Tensor& xi, const Tensor& gi, const Tensor& bi, Tape* t) {
        Tensor rm({2}, 0.3), rv({2}, 1.7);
        return dot(batch_norm(xi, gi, bi, rm, rv, mode, t), r, t);
      };
      CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return run(p, g, b, t); }, x) < tol);
      CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return run(x, p, b, t); }, g) < tol);
      CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return run(x, g, p, t); }, b) < tol);
    }
  }
  SUBCASE("relu away from zero") {
    Tensor x = probe({20});
    for (double& v : x.values()) v += v > 0 ? 0.1 : -0.1;
    Tensor r = probe({20});
    CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return dot(relu(p, t), r, t); }, x) < tol);
  }
  SUBCASE("l2_normalize along channels") {
    Tensor x = probe({2, 5, 3});
    Tensor r = probe({2, 5, 3});
    CHECK(finite_diff_gradcheck([&](const Tensor& p, Tape* t) { return dot(l2_normalize(p, 1, t), r, t); }, x) < tol);
  }
  SUBCASE("softmax rows, elementwise and reductions") {
    Tensor x = probe({3, 7});
    Tensor c = probe({3, 7});
    ScalarFn fn = [&](const Tensor& p, Tape* t) {
      Tensor w = softmax_temp(p, 0.7, t);
      Tensor rows = sum_last(mul(w, sub(add(p, c, t), scale(c, 0.5, t), t), t), t);
      Tensor picked = select(reshape(rows, {3, 1}, t), 1, t);
      return add(mean(square(rows, t), t), sum(stack({picked, picked}, t), t), t);
    };
    CHECK(finite_diff_gradcheck(fn, x) < tol);
  }
}

TEST_CASE("determinism: identical seeds give bit-identical forward and backward") {
  auto run = [] {
    Rng rng(99);
    Tensor x = randn(rng, {2, 3, 9, 9});
    Tensor w = randn(rng, {4, 3, 3, 3}, 1.0, true);
    Tensor g({4}, 1.0, true), b({4}, 0.0, true), rm({4}, 0.0), rv({4}, 1.0);
    Tape tape;
    Tensor h = relu(batch_norm(conv(x, w, {1}, &tape), g, b, rm, rv, Mode::kTrain, &tape), &tape);
    Tensor loss = mean(square(max_pool(h, &tape), &tape), &tape);
    tape.backward(loss);
    std::vector<double> out(w.grad().begin(), w.grad().end());
    out.push_back(loss.item());
    return out;
  };
  CHECK(run() == run());
}
