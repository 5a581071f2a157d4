#include "oneshot/core/random.hpp"

namespace oneshot::core {

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t w : words) {
    std::uint64_t z = h ^ (w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    h = z ^ (z >> 31);
  }
  return h;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double normal(Rng& rng, double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(rng); }

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

Tensor randn(Rng& rng, Shape shape, double stddev, bool requires_grad) {
  Tensor t(std::move(shape), 0.0, requires_grad);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Tensor rand_uniform(Rng& rng, Shape shape, double lo, double hi, bool requires_grad) {
  Tensor t(std::move(shape), 0.0, requires_grad);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace oneshot::core
