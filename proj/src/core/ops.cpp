#include "oneshot/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "oneshot/core/gemm.hpp"

namespace oneshot::core {

namespace {

[[noreturn]] void fail(const std::string& op, const std::string& what) {
  throw std::invalid_argument(op + ": " + what);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(op, "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

// Spatial layout shared by conv and pooling: rank-3 tensors are treated as
// rank-4 with a unit height axis.
struct Spatial {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 1;
  std::size_t width = 0;
};

Spatial spatial_of(const char* op, const Tensor& t) {
  if (t.rank() == 3) return {t.dim(0), t.dim(1), 1, t.dim(2)};
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
  fail(op, "expected a rank-3 [N,C,L] or rank-4 [N,C,H,W] tensor, got " + shape_string(t.shape()));
}

struct ConvGeometry {
  Spatial in;
  std::size_t out_channels = 0;
  std::size_t kh = 1, kw = 0;
  std::size_t sh = 1, sw = 1;
  std::size_t oh = 1, ow = 0;

  std::size_t patch() const { return in.channels * kh * kw; }
  std::size_t positions() const { return oh * ow; }
};

void im2col(const ConvGeometry& g, const double* in, double* col) {
  const std::size_t p = g.positions();
  for (std::size_t c = 0; c < g.in.channels; ++c) {
    const double* plane = in + c * g.in.height * g.in.width;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col + ((c * g.kh + ky) * g.kw + kx) * p;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const double* src = plane + (oy * g.sh + ky) * g.in.width + kx;
          double* dst = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) dst[ox] = src[ox * g.sw];
        }
      }
    }
  }
}

// Row-per-position layout: col_t[p][(c*kh + ky)*kw + kx], the transpose of
// im2col's output.
void im2col_t(const ConvGeometry& g, const double* in, double* col_t) {
  const std::size_t k = g.patch();
  for (std::size_t oy = 0; oy < g.oh; ++oy) {
    for (std::size_t ox = 0; ox < g.ow; ++ox) {
      double* dst = col_t + (oy * g.ow + ox) * k;
      for (std::size_t c = 0; c < g.in.channels; ++c) {
        const double* plane = in + c * g.in.height * g.in.width;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const double* src = plane + (oy * g.sh + ky) * g.in.width + ox * g.sw;
          for (std::size_t kx = 0; kx < g.kw; ++kx) *dst++ = src[kx];
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* col, double* in) {
  const std::size_t p = g.positions();
  for (std::size_t c = 0; c < g.in.channels; ++c) {
    double* plane = in + c * g.in.height * g.in.width;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col + ((c * g.kh + ky) * g.kw + kx) * p;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          double* dst = plane + (oy * g.sh + ky) * g.in.width + kx;
          const double* src = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) dst[ox * g.sw] += src[ox];
        }
      }
    }
  }
}

}  // namespace

Tensor conv(const Tensor& input, const Tensor& kernel, const std::vector<std::size_t>& stride, Tape* tape) {
  ConvGeometry g;
  g.in = spatial_of("conv", input);
  if (kernel.rank() != input.rank()) {
    fail("conv", "kernel rank " + std::to_string(kernel.rank()) + " does not match input rank " +
                     std::to_string(input.rank()));
  }
  const std::size_t spatial_rank = input.rank() - 2;
  g.out_channels = kernel.dim(0);
  if (kernel.dim(1) != g.in.channels) {
    fail("conv", "kernel expects " + std::to_string(kernel.dim(1)) + " input channels, input " +
                     shape_string(input.shape()) + " has " + std::to_string(g.in.channels));
  }
  if (spatial_rank == 2) {
    g.kh = kernel.dim(2);
    g.kw = kernel.dim(3);
  } else {
    g.kw = kernel.dim(2);
  }
  if (stride.size() != 1 && stride.size() != spatial_rank) {
    fail("conv", "stride needs 1 or " + std::to_string(spatial_rank) + " entries");
  }
  for (std::size_t s : stride) {
    if (s == 0) fail("conv", "stride must be positive");
  }
  g.sw = stride.back();
  g.sh = spatial_rank == 2 ? stride.front() : 1;
  if (g.in.height < g.kh || g.in.width < g.kw) {
    fail("conv", "input " + shape_string(input.shape()) + " is smaller than kernel " + shape_string(kernel.shape()));
  }
  g.oh = (g.in.height - g.kh) / g.sh + 1;
  g.ow = (g.in.width - g.kw) / g.sw + 1;

  Shape out_shape{g.in.batch, g.out_channels};
  if (spatial_rank == 2) out_shape.push_back(g.oh);
  out_shape.push_back(g.ow);
  Tensor out(out_shape);

  const std::size_t k = g.patch();
  const std::size_t p = g.positions();
  const std::size_t in_stride = g.in.channels * g.in.height * g.in.width;
  const std::size_t out_stride = g.out_channels * p;
  std::vector<double> col(k * p);
  {
    const double* x = input.values().data();
    const double* w = kernel.values().data();
    double* y = out.values().data();
    for (std::size_t n = 0; n < g.in.batch; ++n) {
      im2col(g, x + n * in_stride, col.data());
      gemm(g.out_channels, p, k, w, col.data(), y + n * out_stride);
    }
  }

  if (Tape::wants(tape, {&input, &kernel})) {
    tape->record({input, kernel}, out, [input, kernel, out, g]() mutable {
      const std::size_t k = g.patch();
      const std::size_t p = g.positions();
      const std::size_t in_stride = g.in.channels * g.in.height * g.in.width;
      const std::size_t out_stride = g.out_channels * p;
      const double* gy = out.grad().data();
      std::vector<double> col(k * p);
      if (kernel.requires_grad()) {
        double* gw = kernel.grad().data();
        const double* x = input.values().data();
        for (std::size_t n = 0; n < g.in.batch; ++n) {
          im2col_t(g, x + n * in_stride, col.data());
          gemm(g.out_channels, k, p, gy + n * out_stride, col.data(), gw, true);
        }
      }
      if (input.requires_grad()) {
        std::vector<double> w_t(k * g.out_channels);
        transpose(g.out_channels, k, kernel.values().data(), w_t.data());
        double* gx = input.grad().data();
        for (std::size_t n = 0; n < g.in.batch; ++n) {
          gemm(k, p, g.out_channels, w_t.data(), gy + n * out_stride, col.data());
          col2im_add(g, col.data(), gx + n * in_stride);
        }
      }
    });
  }
  return out;
}

Tensor max_pool(const Tensor& input, Tape* tape) {
  const Spatial s = spatial_of("max_pool", input);
  const bool two_d = input.rank() == 4;
  const std::size_t wh = two_d ? 2 : 1;
  if (s.width < 2 || (two_d && s.height < 2)) {
    fail("max_pool", "spatial extent below window 2 in " + shape_string(input.shape()));
  }
  const std::size_t oh = s.height / wh;
  const std::size_t ow = s.width / 2;
  Shape out_shape{s.batch, s.channels};
  if (two_d) out_shape.push_back(oh);
  out_shape.push_back(ow);
  Tensor out(out_shape);

  const std::size_t planes = s.batch * s.channels;
  std::vector<std::size_t> argmax(planes * oh * ow);
  const double* x = input.values().data();
  double* y = out.values().data();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const double* src = x + pl * s.height * s.width;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (oy * wh) * s.width + ox * 2;
        for (std::size_t dy = 0; dy < wh; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (oy * wh + dy) * s.width + ox * 2 + dx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = (pl * oh + oy) * ow + ox;
        y[o] = src[best];
        argmax[o] = pl * s.height * s.width + best;
      }
    }
  }

  if (Tape::wants(tape, {&input})) {
    tape->record({input}, out, [input, out, argmax = std::move(argmax)]() mutable {
      const auto gy = out.grad();
      auto gx = input.grad();
      for (std::size_t o = 0; o < gy.size(); ++o) gx[argmax[o]] += gy[o];
    });
  }
  return out;
}

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, Mode mode, Tape* tape) {
  if (input.rank() < 2) fail("batch_norm", "expected [N, C, ...], got " + shape_string(input.shape()));
  const std::size_t batch = input.dim(0);
  const std::size_t channels = input.dim(1);
  const std::size_t spatial = input.size() / (batch * channels);
  const std::size_t count = batch * spatial;
  if (batch == 0 || count == 0) fail("batch_norm", "zero-size batch");
  for (const Tensor* t : {&gamma, &beta, static_cast<const Tensor*>(&running_mean), static_cast<const Tensor*>(&running_var)}) {
    if (t->size() != channels) {
      fail("batch_norm", "per-channel tensor " + shape_string(t->shape()) + " does not match " +
                             std::to_string(channels) + " channels");
    }
  }

  Tensor out(input.shape());
  std::vector<double> xhat(input.size());
  std::vector<double> inv_std(channels);
  const double* x = input.values().data();
  double* y = out.values().data();
  auto rm = running_mean.values();
  auto rv = running_var.values();

  for (std::size_t c = 0; c < channels; ++c) {
    double mu;
    double var;
    if (mode == Mode::kTrain) {
      double acc = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* p = x + (n * channels + c) * spatial;
        for (std::size_t i = 0; i < spatial; ++i) acc += p[i];
      }
      mu = acc / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* p = x + (n * channels + c) * spatial;
        for (std::size_t i = 0; i < spatial; ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(count);
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      rm[c] = kBatchNormMomentum * rm[c] + (1.0 - kBatchNormMomentum) * mu;
      rv[c] = kBatchNormMomentum * rv[c] + (1.0 - kBatchNormMomentum) * unbiased;
    } else {
      mu = rm[c];
      var = rv[c];
    }
    const double is = 1.0 / std::sqrt(var + kBatchNormEpsilon);
    inv_std[c] = is;
    const double g = gamma[c];
    const double b = beta[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t base = (n * channels + c) * spatial;
      for (std::size_t i = 0; i < spatial; ++i) {
        const double h = (x[base + i] - mu) * is;
        xhat[base + i] = h;
        y[base + i] = g * h + b;
      }
    }
  }

  if (Tape::wants(tape, {&input, &gamma, &beta})) {
    tape->record({input, gamma, beta}, out,
                 [input, gamma, beta, out, mode, batch, channels, spatial, count, xhat = std::move(xhat),
                  inv_std = std::move(inv_std)]() mutable {
                   const double* gy = out.grad().data();
                   for (std::size_t c = 0; c < channels; ++c) {
                     double sum_gy = 0.0;
                     double sum_gy_xhat = 0.0;
                     for (std::size_t n = 0; n < batch; ++n) {
                       const std::size_t base = (n * channels + c) * spatial;
                       for (std::size_t i = 0; i < spatial; ++i) {
                         sum_gy += gy[base + i];
                         sum_gy_xhat += gy[base + i] * xhat[base + i];
                       }
                     }
                     if (gamma.requires_grad()) gamma.grad()[c] += sum_gy_xhat;
                     if (beta.requires_grad()) beta.grad()[c] += sum_gy;
                     if (!input.requires_grad()) continue;
                     double* gx = input.grad().data();
                     const double scale_c = gamma[c] * inv_std[c];
                     const double mean_gy = sum_gy / static_cast<double>(count);
                     const double mean_gy_xhat = sum_gy_xhat / static_cast<double>(count);
                     for (std::size_t n = 0; n < batch; ++n) {
                       const std::size_t base = (n * channels + c) * spatial;
                       for (std::size_t i = 0; i < spatial; ++i) {
                         const double d = mode == Mode::kTrain
                                              ? gy[base + i] - mean_gy - xhat[base + i] * mean_gy_xhat
                                              : gy[base + i];
                         gx[base + i] += scale_c * d;
                       }
                     }
                   }
                 });
  }
  return out;
}

Tensor relu(const Tensor& input, Tape* tape) {
  Tensor out(input.shape());
  const auto x = input.values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (Tape::wants(tape, {&input})) {
    tape->record({input}, out, [input, out]() mutable {
      const auto x = input.values();
      const auto gy = out.grad();
      auto gx = input.grad();
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) gx[i] += gy[i];
      }
    });
  }
  return out;
}

Tensor l2_normalize(const Tensor& input, std::size_t axis, Tape* tape) {
  if (axis >= input.rank()) fail("l2_normalize", "axis out of range for " + shape_string(input.shape()));
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= input.dim(i);
  for (std::size_t i = axis + 1; i < input.rank(); ++i) inner *= input.dim(i);
  const std::size_t len = input.dim(axis);

  Tensor out(input.shape());
  std::vector<double> norms(outer * inner);
  const auto x = input.values();
  auto y = out.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double sq = 0.0;
      for (std::size_t j = 0; j < len; ++j) sq += x[base + j * inner] * x[base + j * inner];
      const double norm = std::sqrt(sq);
      norms[o * inner + i] = norm;
      const double denom = std::max(norm, kNormEpsilon);
      for (std::size_t j = 0; j < len; ++j) y[base + j * inner] = x[base + j * inner] / denom;
    }
  }

  if (Tape::wants(tape, {&input})) {
    tape->record({input}, out, [input, out, outer, inner, len, norms = std::move(norms)]() mutable {
      const auto y = out.values();
      const auto gy = out.grad();
      auto gx = input.grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t base = o * len * inner + i;
          const double norm = norms[o * inner + i];
          if (norm > kNormEpsilon) {
            double proj = 0.0;
            for (std::size_t j = 0; j < len; ++j) proj += y[base + j * inner] * gy[base + j * inner];
            for (std::size_t j = 0; j < len; ++j) {
              gx[base + j * inner] += (gy[base + j * inner] - y[base + j * inner] * proj) / norm;
            }
          } else {
            for (std::size_t j = 0; j < len; ++j) gx[base + j * inner] += gy[base + j * inner] / kNormEpsilon;
          }
        }
      }
    });
  }
  return out;
}

Tensor softmax_temp(const Tensor& input, double temperature, Tape* tape) {
  if (!(temperature > 0.0)) fail("softmax_temp", "temperature must be positive, got " + std::to_string(temperature));
  const std::size_t len = input.shape().back();
  const std::size_t rows = input.size() / len;
  Tensor out(input.shape());
  const auto x = input.values();
  auto w = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * len;
    double* wr = w.data() + r * len;
    const double peak = *std::max_element(xr, xr + len);
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      wr[i] = std::exp((xr[i] - peak) / temperature);
      total += wr[i];
    }
    for (std::size_t i = 0; i < len; ++i) wr[i] /= total;
  }
  if (Tape::wants(tape, {&input})) {
    tape->record({input}, out, [input, out, rows, len, temperature]() mutable {
      const auto w = out.values();
      const auto gw = out.grad();
      auto gx = input.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * len;
        double inner = 0.0;
        for (std::size_t i = 0; i < len; ++i) inner += w[base + i] * gw[base + i];
        for (std::size_t i = 0; i < len; ++i) gx[base + i] += w[base + i] * (gw[base + i] - inner) / temperature;
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b, Tape* tape) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  if (Tape::wants(tape, {&a, &b})) {
    tape->record({a, b}, out, [a, b, out]() mutable {
      const auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b, Tape* tape) {
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  if (Tape::wants(tape, {&a, &b})) {
    tape->record({a, b}, out, [a, b, out]() mutable {
      const auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b, Tape* tape) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  if (Tape::wants(tape, {&a, &b})) {
    tape->record({a, b}, out, [a, b, out]() mutable {
      const auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor, Tape* tape) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  if (Tape::wants(tape, {&a})) {
    tape->record({a}, out, [a, out, factor]() mutable {
      const auto g = out.grad();
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor square(const Tensor& a, Tape* tape) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * a[i];
  if (Tape::wants(tape, {&a})) {
    tape->record({a}, out, [a, out]() mutable {
      const auto g = out.grad();
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * a[i] * g[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& a, Tape* tape) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (Tape::wants(tape, {&a})) {
    tape->record({a}, out, [a, out]() mutable {
      const double g = out.grad()[0];
      for (double& ga : a.grad()) ga += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& a, Tape* tape) {
  return scale(sum(a, tape), 1.0 / static_cast<double>(a.size()), tape);
}

Tensor dot(const Tensor& a, const Tensor& b, Tape* tape) {
  require_same_shape("dot", a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  Tensor out = Tensor::scalar(total);
  if (Tape::wants(tape, {&a, &b})) {
    tape->record({a, b}, out, [a, b, out]() mutable {
      const double g = out.grad()[0];
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * b[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * a[i];
      }
    });
  }
  return out;
}

Tensor sum_last(const Tensor& a, Tape* tape) {
  const std::size_t len = a.shape().back();
  const std::size_t rows = a.size() / len;
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  if (shape.empty()) shape.push_back(1);
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) total += a[r * len + i];
    out[r] = total;
  }
  if (Tape::wants(tape, {&a})) {
    tape->record({a}, out, [a, out, rows, len]() mutable {
      const auto g = out.grad();
      auto ga = a.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < len; ++i) ga[r * len + i] += g[r];
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape, Tape* tape) {
  if (shape_size(shape) != a.size()) {
    fail("reshape", "cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(a.values().begin(), a.values().end()));
  if (Tape::wants(tape, {&a})) {
    tape->record({a}, out, [a, out]() mutable {
      const auto g = out.grad();
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

Tensor stack(const std::vector<Tensor>& parts, Tape* tape) {
  if (parts.empty()) fail("stack", "no tensors to stack");
  const Shape& part_shape = parts.front().shape();
  for (const Tensor& p : parts) {
    if (p.shape() != part_shape) {
      fail("stack", "shape mismatch " + shape_string(part_shape) + " vs " + shape_string(p.shape()));
    }
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), part_shape.begin(), part_shape.end());
  Tensor out(shape);
  const std::size_t chunk = shape_size(part_shape);
  bool any_grad = false;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::copy(parts[i].values().begin(), parts[i].values().end(), out.values().begin() + i * chunk);
    any_grad = any_grad || parts[i].requires_grad();
  }
  if (tape != nullptr && any_grad) {
    tape->record(parts, out, [parts, out, chunk]() mutable {
      const auto g = out.grad();
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!parts[i].requires_grad()) continue;
        auto gp = parts[i].grad();
        for (std::size_t j = 0; j < chunk; ++j) gp[j] += g[i * chunk + j];
      }
    });
  }
  return out;
}

Tensor select(const Tensor& a, std::size_t index, Tape* tape) {
  if (index >= a.dim(0)) fail("select", "index " + std::to_string(index) + " out of range for " + shape_string(a.shape()));
  Shape shape(a.shape().begin() + 1, a.shape().end());
  if (shape.empty()) shape.push_back(1);
  const std::size_t chunk = shape_size(shape);
  Tensor out(shape, std::vector<double>(a.values().begin() + index * chunk, a.values().begin() + (index + 1) * chunk));
  if (Tape::wants(tape, {&a})) {
    tape->record({a}, out, [a, out, index, chunk]() mutable {
      const auto g = out.grad();
      auto ga = a.grad();
      for (std::size_t j = 0; j < chunk; ++j) ga[index * chunk + j] += g[j];
    });
  }
  return out;
}

}  // namespace oneshot::core
