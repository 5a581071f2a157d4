#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oneshot/core/ops.hpp"
#include "oneshot/core/random.hpp"

using namespace oneshot::core;

namespace {

// Direct cross-correlation: sum over (c, ky, kx) in that order from zero.
Tensor conv_oracle(const Tensor& x, const Tensor& w, std::size_t sh, std::size_t sw) {
  const bool two_d = x.rank() == 4;
  const std::size_t n = x.dim(0), c = x.dim(1), h = two_d ? x.dim(2) : 1, wd = x.shape().back();
  const std::size_t o = w.dim(0), kh = two_d ? w.dim(2) : 1, kw = w.shape().back();
  if (!two_d) sh = 1;
  const std::size_t oh = (h - kh) / sh + 1, ow = (wd - kw) / sw + 1;
  Shape shape{n, o};
  if (two_d) shape.push_back(oh);
  shape.push_back(ow);
  Tensor out(shape);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oc = 0; oc < o; ++oc)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xo = 0; xo < ow; ++xo) {
          double s = 0.0;
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t ky = 0; ky < kh; ++ky)
              for (std::size_t kx = 0; kx < kw; ++kx)
                s += w[((oc * c + ic) * kh + ky) * kw + kx] * x[((b * c + ic) * h + y * sh + ky) * wd + xo * sw + kx];
          out[((b * o + oc) * oh + y) * ow + xo] = s;
        }
  return out;
}

Tensor pool_oracle(const Tensor& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out({n, c, h / 2, w / 2});
  for (std::size_t p = 0; p < n * c; ++p)
    for (std::size_t y = 0; y < h / 2; ++y)
      for (std::size_t xo = 0; xo < w / 2; ++xo) {
        double m = -INFINITY;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) m = std::max(m, x[(p * h + 2 * y + dy) * w + 2 * xo + dx]);
        out[(p * (h / 2) + y) * (w / 2) + xo] = m;
      }
  return out;
}

}  // namespace

TEST_CASE("conv: scaling and summing kernels") {
  Tensor x({1, 1, 3}, {1, 2, 3});
  Tensor scaled = conv(x, Tensor({1, 1, 1}, {2}), {1});
  CHECK(scaled.shape() == Shape{1, 1, 3});
  CHECK(scaled[0] == 2);
  CHECK(scaled[1] == 4);
  CHECK(scaled[2] == 6);

  Tensor summed = conv(x, Tensor({1, 1, 3}, {1, 1, 1}), {1});
  CHECK(summed.shape() == Shape{1, 1, 1});
  CHECK(summed[0] == 6);
}

TEST_CASE("conv: matches nested-loop oracle exactly") {
  Rng rng(7);
  SUBCASE("1x2x7x7 with 3x2x5x5 kernel") {
    Tensor x = randn(rng, {1, 2, 7, 7});
    Tensor w = randn(rng, {3, 2, 5, 5});
    Tensor y = conv(x, w, {1});
    CHECK(y.shape() == Shape{1, 3, 3, 3});
    Tensor ref = conv_oracle(x, w, 1, 1);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == ref[i]);
  }
  SUBCASE("2x4x16x16, strided, 20 output channels") {
    Tensor x = randn(rng, {2, 4, 16, 16});
    Tensor w = randn(rng, {20, 4, 5, 3});
    Tensor y = conv(x, w, {2, 3});
    Tensor ref = conv_oracle(x, w, 2, 3);
    REQUIRE(y.shape() == ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == ref[i]);
  }
  SUBCASE("1-D") {
    Tensor x = randn(rng, {3, 5, 40});
    Tensor w = randn(rng, {9, 5, 5});
    Tensor y = conv(x, w, {1});
    Tensor ref = conv_oracle(x, w, 1, 1);
    REQUIRE(y.shape() == ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == ref[i]);
  }
}

TEST_CASE("conv: shape errors") {
  CHECK_THROWS_AS(conv(Tensor({1, 2, 4}), Tensor({1, 3, 3}), {1}), std::invalid_argument);
  CHECK_THROWS_AS(conv(Tensor({1, 1, 4}), Tensor({1, 1, 5}), {1}), std::invalid_argument);
  CHECK_THROWS_AS(conv(Tensor({1, 1, 4, 4}), Tensor({1, 1, 3}), {1}), std::invalid_argument);
  CHECK_THROWS_AS(conv(Tensor({1, 1, 8}), Tensor({1, 1, 3}), {0}), std::invalid_argument);
}

TEST_CASE("max_pool") {
  Tensor y = max_pool(Tensor({1, 1, 4}, {1, 3, 2, 4}));
  CHECK(y.shape() == Shape{1, 1, 2});
  CHECK(y[0] == 3);
  CHECK(y[1] == 4);

  SUBCASE("ties send the gradient to the first element") {
    Tensor x({1, 1, 4, 4}, 0.5, true);
    Tape tape;
    Tensor loss = sum(max_pool(x, &tape), &tape);
    tape.backward(loss);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) CHECK(x.grad()[r * 4 + c] == ((r % 2 == 0 && c % 2 == 0) ? 1.0 : 0.0));
  }
  SUBCASE("random 8x8 equals brute force") {
    Rng rng(3);
    Tensor x = randn(rng, {2, 3, 8, 8});
    Tensor got = max_pool(x);
    Tensor ref = pool_oracle(x);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == ref[i]);
  }
  CHECK_THROWS_AS(max_pool(Tensor({1, 1, 1})), std::invalid_argument);
  CHECK_THROWS_AS(max_pool(Tensor({1, 1, 1, 4})), std::invalid_argument);
}

TEST_CASE("batch_norm") {
  Rng rng(11);
  Tensor x = randn(rng, {4, 3, 5, 5}, 2.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 3.0;
  Tensor gamma({3}, 1.0), beta({3}, 0.0), rm({3}, 0.0), rv({3}, 1.0);

  SUBCASE("train mode standardises each channel") {
    Tensor y = batch_norm(x, gamma, beta, rm, rv, Mode::kTrain);
    for (std::size_t c = 0; c < 3; ++c) {
      double m = 0, v = 0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) m += y[(n * 3 + c) * 25 + i];
      m /= 100;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) v += std::pow(y[(n * 3 + c) * 25 + i] - m, 2);
      v /= 100;
      CHECK(std::abs(m) < 1e-6);
      CHECK(std::abs(v - 1.0) < 1e-4);
    }
  }
  SUBCASE("two-pass reference and running moments") {
    Tensor g = randn(rng, {3}), b = randn(rng, {3});
    Tensor y = batch_norm(x, g, b, rm, rv, Mode::kTrain);
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<double> vals;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) vals.push_back(x[(n * 3 + c) * 25 + i]);
      const double mu = std::accumulate(vals.begin(), vals.end(), 0.0) / 100.0;
      double var = 0;
      for (double v : vals) var += (v - mu) * (v - mu);
      var /= 100.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) {
          const double want = g[c] * (x[(n * 3 + c) * 25 + i] - mu) / std::sqrt(var + 1e-5) + b[c];
          CHECK(y[(n * 3 + c) * 25 + i] == doctest::Approx(want).epsilon(1e-12));
        }
      CHECK(rm[c] == doctest::Approx(0.1 * mu).epsilon(1e-12));
      CHECK(rv[c] == doctest::Approx(0.9 + 0.1 * var * 100.0 / 99.0).epsilon(1e-12));
    }
  }
  SUBCASE("infer mode with unit moments is the identity up to epsilon") {
    Tensor y = batch_norm(x, gamma, beta, rm, rv, Mode::kInfer);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i] / std::sqrt(1.0 + 1e-5)));
    CHECK(rm[0] == 0.0);
  }
  CHECK_THROWS_AS(batch_norm(x, Tensor({2}), beta, rm, rv, Mode::kTrain), std::invalid_argument);
}

TEST_CASE("relu") {
  Tensor y = relu(Tensor({3}, {-1, 0, 2}));
  CHECK(y[0] == 0);
  CHECK(y[1] == 0);
  CHECK(y[2] == 2);

  Tensor neg({4}, {-1, -2, -3, -0.5}, true);
  Tape tape;
  Tensor loss = sum(relu(neg, &tape), &tape);
  CHECK(loss.item() == 0.0);
  tape.backward(loss);
  for (double g : neg.grad()) CHECK(g == 0.0);
}

TEST_CASE("l2_normalize") {
  Tensor y = l2_normalize(Tensor({2}, {3, 4}), 0);
  CHECK(y[0] == doctest::Approx(0.6));
  CHECK(y[1] == doctest::Approx(0.8));

  Tensor z = l2_normalize(Tensor({3}, 0.0), 0);
  for (double v : z.values()) CHECK(v == 0.0);

  Rng rng(5);
  Tensor x = randn(rng, {2, 6, 3});
  Tensor n = l2_normalize(x, 1);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 3; ++i) {
      double sq = 0;
      for (std::size_t c = 0; c < 6; ++c) sq += n[(b * 6 + c) * 3 + i] * n[(b * 6 + c) * 3 + i];
      CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-9);
    }
}

TEST_CASE("softmax_temp") {
  Tensor c = softmax_temp(Tensor({5}, 0.7), 0.25);
  for (double v : c.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

  // 1/(1+e^3) and e^3/(1+e^3) evaluated at 30 digits.
  Tensor w = softmax_temp(Tensor({2}, {0.0, 1.0}), 1.0 / 3.0);
  CHECK(w[0] == doctest::Approx(0.0474258731775667808788).epsilon(1e-13));
  CHECK(w[1] == doctest::Approx(0.9525741268224332191212).epsilon(1e-13));

  Tensor flat = softmax_temp(Tensor({3}, {0.0, 0.5, 1.0}), 1e6);
  for (double v : flat.values()) CHECK(std::abs(v - 1.0 / 3.0) < 1e-5);

  CHECK_THROWS_AS(softmax_temp(Tensor({2}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax_temp(Tensor({2}), -1.0), std::invalid_argument);

  SUBCASE("positivity, normalisation and shift invariance") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor x = randn(rng, {17}, 3.0);
      Tensor shifted(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] + 12.5;
      Tensor a = softmax_temp(x, 0.5), b = softmax_temp(shifted, 0.5);
      double total = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] > 0.0);
        total += a[i];
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("shape plumbing") {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor s = sum_last(a);
  CHECK(s.shape() == Shape{2});
  CHECK(s[0] == 6);
  CHECK(s[1] == 15);
  Tensor st = stack({a, a});
  CHECK(st.shape() == Shape{2, 2, 3});
  Tensor row = select(a, 1);
  CHECK(row.shape() == Shape{3});
  CHECK(row[2] == 6);
  CHECK_THROWS_AS(reshape(a, {4}), std::invalid_argument);
  CHECK_THROWS_AS(add(a, Tensor({3, 2})), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}
