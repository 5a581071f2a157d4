#pragma once

#include <cstddef>

namespace oneshot::core {

/// C (m x n) = A (m x k) * B (k x n), all row-major and densely packed.
///
/// Each output element is summed over k in increasing order starting from
/// zero, so results are bit-identical to a plain triple loop with the same
/// summation order. With `accumulate` the finished sum is added to C.
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
          bool accumulate = false);

/// dst (cols x rows) = transpose of src (rows x cols).
void transpose(std::size_t rows, std::size_t cols, const double* src, double* dst);

}  // namespace oneshot::core
