#include "oneshot/core/gemm.hpp"

#include <algorithm>
#include <vector>

namespace oneshot::core {

namespace {

constexpr std::size_t kNr = 16;

// GCC/Clang vector extension; lanes accumulate independently, so per-element
// summation order is unchanged from the scalar loop.
typedef double Lane8 __attribute__((vector_size(64)));

template <std::size_t Mr>
void micro_kernel(std::size_t k, const double* a, std::size_t lda, const double* panel, double* c,
                  std::size_t ldc, std::size_t ncols, bool accumulate) {
  Lane8 lo[Mr];
  Lane8 hi[Mr];
  for (std::size_t r = 0; r < Mr; ++r) {
    lo[r] = Lane8{};
    hi[r] = Lane8{};
  }
  for (std::size_t p = 0; p < k; ++p) {
    Lane8 b0;
    Lane8 b1;
    __builtin_memcpy(&b0, panel + p * kNr, sizeof(Lane8));
    __builtin_memcpy(&b1, panel + p * kNr + 8, sizeof(Lane8));
    for (std::size_t r = 0; r < Mr; ++r) {
      const double av = a[r * lda + p];
      lo[r] += av * b0;
      hi[r] += av * b1;
    }
  }
  for (std::size_t r = 0; r < Mr; ++r) {
    double sum[kNr];
    __builtin_memcpy(sum, &lo[r], sizeof(Lane8));
    __builtin_memcpy(sum + 8, &hi[r], sizeof(Lane8));
    double* row = c + r * ldc;
    if (accumulate) {
      for (std::size_t j = 0; j < ncols; ++j) row[j] += sum[j];
    } else {
      for (std::size_t j = 0; j < ncols; ++j) row[j] = sum[j];
    }
  }
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
          bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    return;
  }
  std::vector<double> panel(k * kNr);
  for (std::size_t j0 = 0; j0 < n; j0 += kNr) {
    const std::size_t nc = std::min(kNr, n - j0);
    for (std::size_t p = 0; p < k; ++p) {
      const double* src = b + p * n + j0;
      double* dst = panel.data() + p * kNr;
      std::size_t j = 0;
      for (; j < nc; ++j) dst[j] = src[j];
      for (; j < kNr; ++j) dst[j] = 0.0;
    }
    std::size_t i = 0;
    for (; i + 8 <= m; i += 8) micro_kernel<8>(k, a + i * k, k, panel.data(), c + i * n + j0, n, nc, accumulate);
    for (; i + 4 <= m; i += 4) micro_kernel<4>(k, a + i * k, k, panel.data(), c + i * n + j0, n, nc, accumulate);
    for (; i < m; ++i) micro_kernel<1>(k, a + i * k, k, panel.data(), c + i * n + j0, n, nc, accumulate);
  }
}

void transpose(std::size_t rows, std::size_t cols, const double* src, double* dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kBlock) {
    const std::size_t i1 = std::min(rows, i0 + kBlock);
    for (std::size_t j0 = 0; j0 < cols; j0 += kBlock) {
      const std::size_t j1 = std::min(cols, j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
      }
    }
  }
}

}  // namespace oneshot::core
