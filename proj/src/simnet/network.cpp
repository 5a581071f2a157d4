#include "oneshot/simnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "oneshot/core/random.hpp"

namespace oneshot::simnet {

namespace {

std::string layer_key(std::size_t index, const char* field) {
  return "layer" + std::to_string(index + 1) + "." + field;
}

// Rank-3 tensors are viewed as rank-4 with a unit height axis.
struct Plane {
  std::size_t batch = 0, channels = 0, height = 1, width = 0;
  std::size_t size() const { return channels * height * width; }
};

Plane plane_of(const core::Tensor& t, const char* what) {
  if (t.rank() == 3) return {t.dim(0), t.dim(1), 1, t.dim(2)};
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
  throw std::invalid_argument(std::string("similarity_scores: ") + what + " must be [B,C,L] or [B,C,H,W], got " +
                              core::shape_string(t.shape()));
}

struct MapShape {
  Plane ex, tg;
  std::size_t lh = 1, lw = 1;
  std::size_t locations() const { return lh * lw; }
};

MapShape map_shape(const core::Tensor& exemplar_emb, const core::Tensor& target_emb) {
  if (exemplar_emb.rank() != target_emb.rank()) {
    throw std::invalid_argument("similarity_scores: exemplar " + core::shape_string(exemplar_emb.shape()) +
                                " and target " + core::shape_string(target_emb.shape()) + " differ in rank");
  }
  MapShape m{plane_of(exemplar_emb, "exemplar"), plane_of(target_emb, "target")};
  if (m.ex.batch != m.tg.batch) throw std::invalid_argument("similarity_scores: batch sizes differ");
  if (m.ex.channels != m.tg.channels) {
    throw std::invalid_argument("similarity_scores: exemplar has " + std::to_string(m.ex.channels) +
                                " channels, target has " + std::to_string(m.tg.channels));
  }
  if (m.ex.height > m.tg.height || m.ex.width > m.tg.width) {
    throw std::invalid_argument("similarity_scores: exemplar embedding " + core::shape_string(exemplar_emb.shape()) +
                                " exceeds target embedding " + core::shape_string(target_emb.shape()));
  }
  m.lh = m.tg.height - m.ex.height + 1;
  m.lw = m.tg.width - m.ex.width + 1;
  return m;
}

double norm_of(const double* v, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += v[i] * v[i];
  return std::sqrt(total);
}

// Dot product of the exemplar with the target patch at (ly, lx) and the
// patch's squared norm.
void patch_moments(const MapShape& m, const double* e, const double* t, std::size_t ly, std::size_t lx, double& dot,
                   double& norm_sq) {
  dot = 0.0;
  norm_sq = 0.0;
  for (std::size_t c = 0; c < m.ex.channels; ++c) {
    for (std::size_t y = 0; y < m.ex.height; ++y) {
      const double* er = e + (c * m.ex.height + y) * m.ex.width;
      const double* tr = t + (c * m.tg.height + ly + y) * m.tg.width + lx;
      for (std::size_t x = 0; x < m.ex.width; ++x) {
        dot += er[x] * tr[x];
        norm_sq += tr[x] * tr[x];
      }
    }
  }
}

}  // namespace

core::ParamStore init_params(const EmbedConfig& config, std::uint64_t seed) {
  validate(config);
  core::ParamStore params;
  std::size_t in_channels = config.input_channels;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& layer = config.layers[i];
    core::Shape shape{layer.channels, in_channels, layer.kernel};
    if (config.spatial_rank == 2) shape.push_back(layer.kernel);
    const std::size_t fan_in = core::shape_size(shape) / layer.channels;
    core::Rng rng(core::mix_seed({seed, 0x6c61796572ULL, i}));
    params.add(layer_key(i, "weight"), core::randn(rng, shape, std::sqrt(2.0 / static_cast<double>(fan_in))));
    params.add(layer_key(i, "gamma"), core::Tensor({layer.channels}, 1.0));
    params.add(layer_key(i, "beta"), core::Tensor({layer.channels}, 0.0));
    params.add(layer_key(i, "running_mean"), core::Tensor({layer.channels}, 0.0), false);
    params.add(layer_key(i, "running_var"), core::Tensor({layer.channels}, 1.0), false);
    in_channels = layer.channels;
  }
  return params;
}

core::Tensor embed(const core::Tensor& input, const EmbedConfig& config, core::ParamStore& params, core::Mode mode,
                   core::Tape* tape) {
  if (input.rank() != config.spatial_rank + 2) {
    throw std::invalid_argument("embed: expected a rank-" + std::to_string(config.spatial_rank + 2) +
                                " batch, got " + core::shape_string(input.shape()));
  }
  if (input.dim(1) != config.input_channels) {
    throw std::invalid_argument("embed: expected " + std::to_string(config.input_channels) + " input channels, got " +
                                core::shape_string(input.shape()));
  }
  const std::size_t needed = min_input_extent(config);
  for (std::size_t axis = 2; axis < input.rank(); ++axis) {
    if (embedded_extent(config, input.dim(axis)) == 0) {
      throw std::invalid_argument("embed: input " + core::shape_string(input.shape()) +
                                  " is too small for the layer stack; each spatial extent must be at least " +
                                  std::to_string(needed));
    }
  }
  core::Tensor x = input;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& layer = config.layers[i];
    x = core::conv(x, params.get(layer_key(i, "weight")), {layer.stride}, tape);
    x = core::batch_norm(x, params.get(layer_key(i, "gamma")), params.get(layer_key(i, "beta")),
                         params.get(layer_key(i, "running_mean")), params.get(layer_key(i, "running_var")), mode,
                         tape);
    x = core::relu(x, tape);
    if (layer.pool_after) x = core::max_pool(x, tape);
  }
  return x;
}

core::Tensor fit_last_axis(const core::Tensor& x, std::size_t extent) {
  if (extent == 0) throw std::invalid_argument("fit_last_axis: extent must be positive");
  const std::size_t len = x.shape().back();
  if (len == extent) return x;
  core::Shape shape = x.shape();
  shape.back() = extent;
  core::Tensor out(shape);
  const std::size_t rows = x.size() / len;
  const auto src = x.values();
  auto dst = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    if (len > extent) {
      const std::size_t skip = (len - extent) / 2;
      std::copy_n(src.begin() + r * len + skip, extent, dst.begin() + r * extent);
    } else {
      const std::size_t pad = (extent - len) / 2;
      std::copy_n(src.begin() + r * len, len, dst.begin() + r * extent + pad);
    }
  }
  return out;
}

std::vector<std::size_t> map_extents(const core::Shape& exemplar_emb, const core::Shape& target_emb) {
  if (exemplar_emb.size() != target_emb.size() || exemplar_emb.size() < 2) {
    throw std::invalid_argument("map_extents: embeddings must be [C, spatial...] of equal rank");
  }
  std::vector<std::size_t> out;
  for (std::size_t axis = 1; axis < exemplar_emb.size(); ++axis) {
    if (exemplar_emb[axis] > target_emb[axis]) throw std::invalid_argument("map_extents: exemplar exceeds target");
    out.push_back(target_emb[axis] - exemplar_emb[axis] + 1);
  }
  return out;
}

core::Tensor similarity_scores(const core::Tensor& exemplar_emb, const core::Tensor& target_emb, core::Tape* tape) {
  const MapShape m = map_shape(exemplar_emb, target_emb);
  const std::size_t locations = m.locations();
  core::Tensor out({m.ex.batch, locations});
  {
    const double* ex = exemplar_emb.values().data();
    const double* tg = target_emb.values().data();
    double* s = out.values().data();
    for (std::size_t b = 0; b < m.ex.batch; ++b) {
      const double* e = ex + b * m.ex.size();
      const double* t = tg + b * m.tg.size();
      const double ne = std::max(norm_of(e, m.ex.size()), core::kNormEpsilon);
      for (std::size_t ly = 0; ly < m.lh; ++ly) {
        for (std::size_t lx = 0; lx < m.lw; ++lx) {
          double dot = 0.0, norm_sq = 0.0;
          patch_moments(m, e, t, ly, lx, dot, norm_sq);
          const double np = std::max(std::sqrt(norm_sq), core::kNormEpsilon);
          s[b * locations + ly * m.lw + lx] = dot / (ne * np);
        }
      }
    }
  }
  if (core::Tape::wants(tape, {&exemplar_emb, &target_emb})) {
    tape->record({exemplar_emb, target_emb}, out, [exemplar_emb, target_emb, out, m]() {
      // s = e.p / (|e| |p|) with each norm clamped below at epsilon; a
      // clamped norm is constant, so its derivative term drops out.
      const std::size_t locations = m.locations();
      const bool want_e = exemplar_emb.requires_grad();
      const bool want_t = target_emb.requires_grad();
      const double* ex = exemplar_emb.values().data();
      const double* tg = target_emb.values().data();
      const double* s = out.values().data();
      const double* gs = out.grad().data();
      double* gex = want_e ? exemplar_emb.grad().data() : nullptr;
      double* gtg = want_t ? target_emb.grad().data() : nullptr;
      for (std::size_t b = 0; b < m.ex.batch; ++b) {
        const double* e = ex + b * m.ex.size();
        const double* t = tg + b * m.tg.size();
        const double ne_raw = norm_of(e, m.ex.size());
        const double ne = std::max(ne_raw, core::kNormEpsilon);
        double s_weighted = 0.0;
        for (std::size_t ly = 0; ly < m.lh; ++ly) {
          for (std::size_t lx = 0; lx < m.lw; ++lx) {
            const std::size_t l = b * locations + ly * m.lw + lx;
            const double g = gs[l];
            if (g == 0.0) continue;
            double dot = 0.0, norm_sq = 0.0;
            patch_moments(m, e, t, ly, lx, dot, norm_sq);
            const double np_raw = std::sqrt(norm_sq);
            const double np = std::max(np_raw, core::kNormEpsilon);
            const double a = g / (ne * np);
            const double cp = np_raw > core::kNormEpsilon ? g * s[l] / (np * np) : 0.0;
            s_weighted += g * s[l];
            for (std::size_t c = 0; c < m.ex.channels; ++c) {
              for (std::size_t y = 0; y < m.ex.height; ++y) {
                const std::size_t eo = (c * m.ex.height + y) * m.ex.width;
                const std::size_t to = (c * m.tg.height + ly + y) * m.tg.width + lx;
                for (std::size_t x = 0; x < m.ex.width; ++x) {
                  if (gex) gex[b * m.ex.size() + eo + x] += a * t[to + x];
                  if (gtg) gtg[b * m.tg.size() + to + x] += a * e[eo + x] - cp * t[to + x];
                }
              }
            }
          }
        }
        if (gex && ne_raw > core::kNormEpsilon) {
          const double ce = s_weighted / (ne * ne);
          for (std::size_t i = 0; i < m.ex.size(); ++i) gex[b * m.ex.size() + i] -= ce * e[i];
        }
      }
    });
  }
  return out;
}

MapGeometry map_geometry(const EmbedConfig& config, const core::Shape& exemplar_input, const core::Shape& target_input) {
  if (exemplar_input.size() != config.spatial_rank + 1 || target_input.size() != config.spatial_rank + 1) {
    throw std::invalid_argument("map_geometry: inputs must be [C, spatial...] with " +
                                std::to_string(config.spatial_rank) + " spatial axes");
  }
  MapGeometry g;
  g.rank = config.spatial_rank;
  g.stride = total_stride(config);
  for (std::size_t axis = 0; axis < g.rank; ++axis) {
    std::size_t ex_extent = exemplar_input[axis + 1];
    if (g.rank == 1 && config.exemplar_extent) ex_extent = config.exemplar_extent;
    const std::size_t emb = embedded_extent(config, ex_extent);
    if (emb == 0) throw std::invalid_argument("map_geometry: exemplar too small for the layer stack");
    g.box_extent[axis] = static_cast<double>(receptive_extent(config, emb));
    g.target_extent[axis] = static_cast<double>(target_input[axis + 1]);
  }
  return g;
}

eval::SimilarityMap similarity_map(const core::Tensor& exemplar_emb, const core::Tensor& target_emb) {
  MapGeometry g;
  g.rank = exemplar_emb.rank() - 1;
  for (std::size_t axis = 0; axis < g.rank && axis < 2; ++axis) {
    g.box_extent[axis] = static_cast<double>(exemplar_emb.dim(axis + 1));
    g.target_extent[axis] = static_cast<double>(target_emb.dim(axis + 1));
  }
  return similarity_map(exemplar_emb, target_emb, g);
}

eval::SimilarityMap similarity_map(const core::Tensor& exemplar_emb, const core::Tensor& target_emb,
                                   const MapGeometry& geometry) {
  if (exemplar_emb.rank() < 2 || exemplar_emb.rank() > 3 || exemplar_emb.rank() != geometry.rank + 1) {
    throw std::invalid_argument("similarity_map: embeddings must be [C, L] or [C, H, W] matching the geometry rank");
  }
  auto batched = [](const core::Tensor& t) {
    core::Shape shape{1};
    shape.insert(shape.end(), t.shape().begin(), t.shape().end());
    return core::reshape(t, shape);
  };
  const core::Tensor scores = similarity_scores(batched(exemplar_emb), batched(target_emb));
  const auto extents = map_extents(exemplar_emb.shape(), target_emb.shape());
  eval::SimilarityMap map;
  map.scores.assign(scores.values().begin(), scores.values().end());
  map.target_extent = geometry.target_extent;
  const double stride = static_cast<double>(geometry.stride);
  if (geometry.rank == 1) {
    for (std::size_t l = 0; l < extents[0]; ++l) {
      map.boxes.push_back(eval::Box::interval(static_cast<double>(l) * stride, geometry.box_extent[0]));
    }
  } else {
    for (std::size_t i = 0; i < extents[0]; ++i) {
      for (std::size_t j = 0; j < extents[1]; ++j) {
        map.boxes.push_back(eval::Box::rect(static_cast<double>(i) * stride, static_cast<double>(j) * stride,
                                            geometry.box_extent[0], geometry.box_extent[1]));
      }
    }
  }
  return map;
}

std::vector<double> attention_weights(const eval::SimilarityMap& map, double temperature) {
  if (map.scores.empty()) throw std::invalid_argument("attention_weights: empty similarity map");
  const core::Tensor s({map.scores.size()}, map.scores);
  const core::Tensor w = core::softmax_temp(s, temperature);
  return {w.values().begin(), w.values().end()};
}

PairScore pair_score(const eval::SimilarityMap& map, std::span<const double> weights) {
  if (weights.size() != map.scores.size()) {
    throw std::invalid_argument("pair_score: weights and scores differ in length");
  }
  PairScore out;
  out.weights.assign(weights.begin(), weights.end());
  for (std::size_t l = 0; l < weights.size(); ++l) out.y_hat += weights[l] * map.scores[l];
  out.argmax_location = eval::argmax_location(map.scores);
  return out;
}

double pair_loss(const PairScore& score, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("pair_loss: label must be 0 or 1");
  const double d = score.y_hat - label;
  return d * d;
}

std::vector<double> analytic_score_gradient(std::span<const double> scores, int label, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("analytic_score_gradient: temperature must be positive");
  if (scores.empty()) throw std::invalid_argument("analytic_score_gradient: empty score vector");
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    w[l] = std::exp((scores[l] - peak) / temperature);
    total += w[l];
  }
  double y_hat = 0.0;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    w[l] /= total;
    y_hat += w[l] * scores[l];
  }
  std::vector<double> grad(scores.size());
  for (std::size_t l = 0; l < scores.size(); ++l) {
    grad[l] = 2.0 * (y_hat - label) * w[l] * (1.0 + (scores[l] - y_hat) / temperature);
  }
  return grad;
}

core::Tensor attention_pool(const core::Tensor& scores, double temperature, core::Tape* tape) {
  const core::Tensor w = core::softmax_temp(scores, temperature, tape);
  return core::sum_last(core::mul(w, scores, tape), tape);
}

core::Tensor squared_error(const core::Tensor& y_hat, const core::Tensor& labels, core::Tape* tape) {
  return core::mean(core::square(core::sub(y_hat, labels, tape), tape), tape);
}

}  // namespace oneshot::simnet
