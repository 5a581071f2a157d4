#include "oneshot/baselines/exemplar.hpp"

#include <atomic>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>

#include "oneshot/core/gemm.hpp"
#include "oneshot/core/parallel.hpp"

namespace oneshot::baselines {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> augment(const std::vector<double>& features, double bias) {
  std::vector<double> x = features;
  x.push_back(bias);
  return x;
}

// Objective value, and its gradient when `grad` is non-null.
double evaluate(const std::vector<double>& w, const std::vector<double>& pos, const NegativePool& neg,
                const ExemplarClfConfig& cfg, std::vector<double>* grad) {
  const std::size_t d = w.size();
  std::vector<double> z(neg.count);
  if (neg.count) core::gemm(neg.count, 1, d, neg.rows.data(), w.data(), z.data());
  const double zp = dot(w, pos);
  double f = 0.5 * cfg.l2 * dot(w, w) + cfg.positive_weight * softplus(-zp);
  for (double zi : z) f += cfg.negative_weight * softplus(zi);
  if (grad) {
    std::vector<double> r(neg.count);
    for (std::size_t i = 0; i < neg.count; ++i) r[i] = cfg.negative_weight * sigmoid(z[i]);
    grad->assign(d, 0.0);
    if (neg.count) core::gemm(d, 1, neg.count, neg.columns.data(), r.data(), grad->data());
    const double cp = -cfg.positive_weight * sigmoid(-zp);
    for (std::size_t j = 0; j < d; ++j) (*grad)[j] += cfg.l2 * w[j] + cp * pos[j];
  }
  return f;
}

}  // namespace

void validate(const ExemplarClfConfig& config) {
  if (!(config.positive_weight > 0.0) || !(config.negative_weight > 0.0)) {
    throw std::invalid_argument("exemplar class weights must be positive");
  }
  if (!(config.l2 > 0.0)) throw std::invalid_argument("exemplar l2 must be positive");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("exemplar tolerance must be positive");
  if (config.max_iterations == 0 || config.memory == 0) {
    throw std::invalid_argument("exemplar max_iterations and memory must be positive");
  }
}

NegativePool make_negative_pool(const std::vector<std::vector<double>>& features, double bias) {
  if (features.empty()) throw std::invalid_argument("exemplar classifier needs at least one negative");
  NegativePool pool;
  pool.dim = features.front().size() + 1;
  pool.count = features.size();
  pool.rows.reserve(pool.dim * pool.count);
  for (const auto& f : features) {
    if (f.size() + 1 != pool.dim) throw std::invalid_argument("negative features differ in length");
    pool.rows.insert(pool.rows.end(), f.begin(), f.end());
    pool.rows.push_back(bias);
  }
  pool.columns.resize(pool.rows.size());
  core::transpose(pool.count, pool.dim, pool.rows.data(), pool.columns.data());
  return pool;
}

double LinearClassifier::logit(const std::vector<double>& features) const {
  if (features.size() + 1 != weights.size()) throw std::invalid_argument("classifier and features differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) s += weights[i] * features[i];
  return s + weights.back() * bias;
}

double exemplar_objective(const std::vector<double>& weights, const std::vector<double>& positive,
                          const NegativePool& negatives, const ExemplarClfConfig& config) {
  if (weights.size() != negatives.dim || positive.size() + 1 != negatives.dim) {
    throw std::invalid_argument("exemplar_objective: dimension mismatch");
  }
  return evaluate(weights, augment(positive, config.bias), negatives, config, nullptr);
}

LinearClassifier train_exemplar_classifier(const std::vector<double>& positive, const NegativePool& negatives,
                                           const ExemplarClfConfig& config, FitReport* report) {
  validate(config);
  if (negatives.count == 0) throw std::invalid_argument("exemplar classifier needs at least one negative");
  if (positive.size() + 1 != negatives.dim) throw std::invalid_argument("positive and negative features differ in length");
  const std::vector<double> pos = augment(positive, config.bias);
  const std::size_t d = negatives.dim;

  std::vector<double> w(d, 0.0), g, w_new(d), g_new;
  double f = evaluate(w, pos, negatives, config, &g);
  FitReport rep;
  rep.objective.push_back(f);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(d);

  for (rep.iterations = 0; rep.iterations < config.max_iterations; ++rep.iterations) {
    rep.gradient_norm = std::sqrt(dot(g, g));
    if (rep.gradient_norm <= config.tolerance) {
      rep.converged = true;
      break;
    }
    // Two-loop recursion for the quasi-Newton direction.
    dir = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t j = 0; j < d; ++j) dir[j] -= alpha[k] * y_hist[k][j];
    }
    const double gamma = s_hist.empty() ? 1.0 / std::max(1.0, rep.gradient_norm)
                                        : dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    for (double& v : dir) v *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t j = 0; j < d; ++j) dir[j] += (alpha[k] - beta) * s_hist[k][j];
    }
    for (double& v : dir) v = -v;
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      for (std::size_t j = 0; j < d; ++j) dir[j] = -g[j];
      slope = -dot(g, g);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = 1.0, f_new = f;
    bool accepted = false;
    for (int b = 0; b < kMaxBacktracks; ++b, step *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) w_new[j] = w[j] + step * dir[j];
      f_new = evaluate(w_new, pos, negatives, config, &g_new);
      if (f_new <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    std::vector<double> s(d), y(d);
    for (std::size_t j = 0; j < d; ++j) {
      s[j] = w_new[j] - w[j];
      y[j] = g_new[j] - g[j];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    std::swap(w, w_new);
    std::swap(g, g_new);
    f = f_new;
    rep.objective.push_back(f);
  }
  if (!rep.converged) {
    rep.gradient_norm = std::sqrt(dot(g, g));
    rep.converged = rep.gradient_norm <= config.tolerance;
  }
  if (report) *report = std::move(rep);
  return LinearClassifier{std::move(w), config.bias};
}

eval::SimilarityMap exemplar_scan(const LinearClassifier& clf, const core::Tensor& target, std::size_t window,
                                  const HogConfig& hog) {
  validate(hog);
  if (target.rank() != 3 || target.dim(0) != 1) throw std::invalid_argument("exemplar_scan: target must be [1, H, W]");
  const std::size_t h = target.dim(1), w = target.dim(2);
  if (h < window || w < window) {
    throw std::invalid_argument("exemplar_scan: target smaller than the " + std::to_string(window) + "-pixel window");
  }
  eval::SimilarityMap map;
  map.pooling = eval::Pooling::kMax;
  map.target_extent = {static_cast<double>(h), static_cast<double>(w)};
  const auto src = target.values();
  core::Tensor patch({1, window, window});
  auto dst = patch.values();
  for (std::size_t r = 0; r + window <= h; r += hog.cell) {
    for (std::size_t c = 0; c + window <= w; c += hog.cell) {
      for (std::size_t y = 0; y < window; ++y) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((r + y) * w + c), window,
                    dst.begin() + static_cast<std::ptrdiff_t>(y * window));
      }
      map.scores.push_back(sigmoid(clf.logit(hog_features(patch, hog))));
      map.boxes.push_back(eval::Box::rect(static_cast<double>(r), static_cast<double>(c), static_cast<double>(window),
                                          static_cast<double>(window)));
    }
  }
  return map;
}

ExemplarBaseline make_exemplar_baseline(const std::vector<simnet::Episode>& training, const HogConfig& hog,
                                        const ExemplarClfConfig& clf, std::size_t max_negatives) {
  validate(hog);
  validate(clf);
  std::set<std::uint64_t> seen;
  std::vector<std::vector<double>> features;
  for (const auto& e : training) {
    if (features.size() >= max_negatives) break;
    if (!seen.insert(e.exemplar.id()).second) continue;
    features.push_back(hog_features(e.exemplar, hog));
  }
  return ExemplarBaseline{hog, clf, make_negative_pool(features, clf.bias)};
}

std::vector<eval::SimilarityMap> exemplar_score_episodes(const std::vector<simnet::Episode>& episodes,
                                                         const ExemplarBaseline& baseline, std::size_t workers,
                                                         std::size_t* unconverged) {
  std::vector<eval::SimilarityMap> maps(episodes.size());
  std::atomic<std::size_t> failures{0};
  core::parallel_for(episodes.size(), workers, [&](std::size_t i) {
    const auto& e = episodes[i];
    if (e.exemplar.rank() != 3) throw std::invalid_argument("the exemplar classifier applies to the image track only");
    FitReport report;
    const LinearClassifier clf =
        train_exemplar_classifier(hog_features(e.exemplar, baseline.hog), baseline.negatives, baseline.clf, &report);
    if (!report.converged) ++failures;
    maps[i] = exemplar_scan(clf, e.target, e.exemplar.dim(1), baseline.hog);
  });
  if (unconverged) *unconverged = failures.load();
  return maps;
}

}  // namespace oneshot::baselines
