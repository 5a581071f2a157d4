#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "oneshot/core/tensor.hpp"

namespace oneshot::core {

using Rng = std::mt19937_64;

/// Order-sensitive mix of 64-bit words (splitmix64 finaliser), used to
/// derive independent child seeds such as (global_seed, episode_index).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words);

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);
double normal(Rng& rng, double mean = 0.0, double stddev = 1.0);
/// Uniform integer in [lo, hi].
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

Tensor randn(Rng& rng, Shape shape, double stddev = 1.0, bool requires_grad = false);
Tensor rand_uniform(Rng& rng, Shape shape, double lo = 0.0, double hi = 1.0, bool requires_grad = false);

}  // namespace oneshot::core
