#include "oneshot/baselines/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "oneshot/core/parallel.hpp"

namespace oneshot::baselines {

namespace {

void require_sequence(const core::Tensor& t, const char* what) {
  if (t.rank() != 2) throw std::invalid_argument(std::string(what) + " must be [channels, frames]");
  if (t.dim(1) == 0) throw std::invalid_argument(std::string(what) + " is empty");
}

double brute_force(const core::Tensor& a, const core::Tensor& b, std::size_t i, std::size_t j, double so_far) {
  const double here = so_far + frame_distance(a, i, b, j);
  const std::size_t la = a.dim(1), lb = b.dim(1);
  if (i + 1 == la && j + 1 == lb) return here;
  double best = std::numeric_limits<double>::infinity();
  if (i + 1 < la) best = std::min(best, brute_force(a, b, i + 1, j, here));
  if (j + 1 < lb) best = std::min(best, brute_force(a, b, i, j + 1, here));
  if (i + 1 < la && j + 1 < lb) best = std::min(best, brute_force(a, b, i + 1, j + 1, here));
  return best;
}

}  // namespace

void validate(const DtwConfig& config) {
  if (!(config.sigma > 0.0)) throw std::invalid_argument("dtw sigma must be positive");
  if (config.step == 0) throw std::invalid_argument("dtw step must be positive");
  if (config.length_factors.empty()) throw std::invalid_argument("dtw needs at least one length factor");
  for (double f : config.length_factors) {
    if (!(f > 0.0)) throw std::invalid_argument("dtw length factors must be positive");
  }
}

double frame_distance(const core::Tensor& a, std::size_t i, const core::Tensor& b, std::size_t j) {
  const std::size_t channels = a.dim(0), la = a.dim(1), lb = b.dim(1);
  const auto va = a.values(), vb = b.values();
  double sq = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double d = va[c * la + i] - vb[c * lb + j];
    sq += d * d;
  }
  return std::sqrt(sq);
}

double dtw_cost(const core::Tensor& a, const core::Tensor& b) {
  require_sequence(a, "dtw_cost: first sequence");
  require_sequence(b, "dtw_cost: second sequence");
  if (a.dim(0) != b.dim(0)) throw std::invalid_argument("dtw_cost: channel counts differ");
  const std::size_t la = a.dim(1), lb = b.dim(1);
  std::vector<double> prev(lb), cur(lb);
  for (std::size_t i = 0; i < la; ++i) {
    for (std::size_t j = 0; j < lb; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = std::numeric_limits<double>::infinity();
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = best + frame_distance(a, i, b, j);
    }
    std::swap(prev, cur);
  }
  return prev[lb - 1];
}

double dtw_cost_brute_force(const core::Tensor& a, const core::Tensor& b) {
  require_sequence(a, "dtw_cost_brute_force: first sequence");
  require_sequence(b, "dtw_cost_brute_force: second sequence");
  return brute_force(a, b, 0, 0, 0.0);
}

double dtw_similarity(double cost, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("dtw_similarity: sigma must be positive");
  return std::exp(-cost / sigma);
}

eval::SimilarityMap dtw_scan(const core::Tensor& keyword, const core::Tensor& utterance, const DtwConfig& config) {
  validate(config);
  require_sequence(keyword, "dtw_scan: keyword");
  require_sequence(utterance, "dtw_scan: utterance");
  if (keyword.dim(0) != utterance.dim(0)) throw std::invalid_argument("dtw_scan: channel counts differ");
  const std::size_t K = keyword.dim(1), frames = utterance.dim(1);
  if (K >= frames) throw std::invalid_argument("dtw_scan: keyword must be shorter than the utterance");

  std::vector<std::size_t> lengths;
  for (double f : config.length_factors) {
    lengths.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(f * static_cast<double>(K)))));
  }
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  const std::size_t shortest = lengths.front();

  eval::SimilarityMap map;
  map.pooling = eval::Pooling::kMax;
  map.target_extent = {static_cast<double>(frames), 0.0};
  // One DP against the longest segment that fits yields the cost of every
  // shorter prefix in its last row.
  std::vector<double> prev, cur;
  for (std::size_t start = 0; start + shortest <= frames; start += config.step) {
    const std::size_t span = std::min(lengths.back(), frames - start);
    prev.assign(span, 0.0);
    cur.assign(span, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < span; ++j) {
        double best;
        if (i == 0 && j == 0) {
          best = 0.0;
        } else {
          best = std::numeric_limits<double>::infinity();
          if (i > 0) best = std::min(best, prev[j]);
          if (j > 0) best = std::min(best, cur[j - 1]);
          if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
        }
        cur[j] = best + frame_distance(keyword, i, utterance, start + j);
      }
      std::swap(prev, cur);
    }
    double best_score = -1.0;
    std::size_t best_len = 0;
    for (std::size_t len : lengths) {
      if (len > span) break;
      const double s = dtw_similarity(prev[len - 1], config.sigma);
      if (s > best_score) {
        best_score = s;
        best_len = len;
      }
    }
    map.scores.push_back(best_score);
    map.boxes.push_back(eval::Box::interval(static_cast<double>(start), static_cast<double>(best_len)));
  }
  return map;
}

std::vector<eval::SimilarityMap> dtw_score_episodes(const std::vector<simnet::Episode>& episodes, const DtwConfig& config,
                                                    std::size_t workers) {
  validate(config);
  std::vector<eval::SimilarityMap> maps(episodes.size());
  core::parallel_for(episodes.size(), workers, [&](std::size_t i) {
    if (episodes[i].target.rank() != 2) throw std::invalid_argument("dtw applies to the sequence track only");
    maps[i] = dtw_scan(episodes[i].exemplar, episodes[i].target, config);
  });
  return maps;
}

}  // namespace oneshot::baselines
