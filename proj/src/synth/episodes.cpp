#include "oneshot/synth/episodes.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "oneshot/core/random.hpp"

namespace oneshot::synth {

namespace {

constexpr std::uint64_t kTrainTag = 0x747261696eULL;
constexpr std::uint64_t kEvalTag = 0x6576616cULL;

std::vector<std::int64_t> sample_distinct(core::Rng& rng, std::span<const std::int64_t> pool, std::size_t count,
                                          const std::set<std::int64_t>& exclude = {}) {
  std::vector<std::int64_t> candidates;
  for (std::int64_t c : pool) {
    if (!exclude.count(c)) candidates.push_back(c);
  }
  if (candidates.size() < count) {
    throw std::invalid_argument("need " + std::to_string(count) + " distinct classes, only " +
                                std::to_string(candidates.size()) + " available");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(core::uniform_int(rng, static_cast<std::int64_t>(i),
                                                              static_cast<std::int64_t>(candidates.size() - 1)));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  return candidates;
}

// Instance ordinal for `class_id` that differs from `avoid` when given.
std::uint64_t draw_instance(core::Rng& rng, const ImageSource& source, std::int64_t class_id,
                            std::optional<std::uint64_t> avoid = std::nullopt) {
  const std::size_t available = source.instances(static_cast<std::size_t>(class_id));
  if (available == 0) {
    std::uint64_t k = rng();
    if (avoid && k == *avoid) ++k;
    return k;
  }
  if (avoid && available < 2) {
    throw std::invalid_argument("class " + std::to_string(class_id) + " needs at least two instances");
  }
  for (;;) {
    const auto k = static_cast<std::uint64_t>(core::uniform_int(rng, 0, static_cast<std::int64_t>(available) - 1));
    if (!avoid || k != *avoid) return k;
  }
}

struct ImageTarget {
  TiledTarget tiled;
  std::vector<std::uint64_t> instances;
};

ImageTarget image_target(const Generator& gen, core::Rng& rng, std::span<const std::int64_t> classes) {
  ImageTarget out;
  const auto ids = sample_distinct(rng, classes, gen.n * gen.n);
  for (std::int64_t c : ids) out.instances.push_back(draw_instance(rng, *gen.images, c));
  out.tiled = tile_target(*gen.images, ids, out.instances, gen.n, rng());
  return out;
}

std::vector<Distractor> distractors_for(const Generator& gen, core::Rng& rng, std::span<const std::int64_t> classes,
                                        std::size_t count, const std::set<std::int64_t>& exclude) {
  std::vector<Distractor> out;
  for (std::int64_t c : sample_distinct(rng, classes, count, exclude)) {
    out.push_back(Distractor{c, gen.templates.at(static_cast<std::size_t>(c))});
  }
  return out;
}

eval::Box interval_box(const Placement& p) {
  return eval::Box::interval(static_cast<double>(p.start), static_cast<double>(p.length));
}

}  // namespace

Track parse_track(const std::string& name) {
  if (name == "image") return Track::kImage;
  if (name == "sequence") return Track::kSequence;
  throw std::invalid_argument("unknown track '" + name + "' (expected image or sequence)");
}

std::string track_name(Track track) { return track == Track::kImage ? "image" : "sequence"; }

SplitSpec make_split(std::size_t train, std::size_t validation, std::size_t test, std::uint64_t seed) {
  std::vector<std::int64_t> ids(train + validation + test);
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  core::Rng rng(core::mix_seed({seed, 0x73706c6974ULL}));
  std::shuffle(ids.begin(), ids.end(), rng);
  SplitSpec split;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train));
  split.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(train),
                          ids.begin() + static_cast<std::ptrdiff_t>(train + validation));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(train + validation), ids.end());
  validate(split);
  return split;
}

void validate(const SplitSpec& split) {
  std::set<std::int64_t> seen;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (std::int64_t c : *part) {
      if (c < 0) throw std::invalid_argument("class ids must be nonnegative");
      if (!seen.insert(c).second) throw std::invalid_argument("class " + std::to_string(c) + " appears twice in the split");
    }
  }
}

std::size_t Generator::num_classes() const {
  return track == Track::kImage ? (images ? images->num_classes() : 0) : templates.size();
}

Generator image_generator(std::shared_ptr<const ImageSource> images, std::size_t n) {
  if (!images) throw std::invalid_argument("image_generator: missing image source");
  if (n == 0 || n > 8) throw std::invalid_argument("image_generator: grid size must be in 1..8");
  Generator gen;
  gen.track = Track::kImage;
  gen.n = n;
  gen.images = std::move(images);
  return gen;
}

Generator sequence_generator(std::size_t num_classes, std::uint64_t seed, const SequenceStyle& style) {
  validate(style);
  if (style.max_template >= style.frames) throw std::invalid_argument("templates must be shorter than targets");
  Generator gen;
  gen.track = Track::kSequence;
  gen.style = style;
  for (std::size_t c = 0; c < num_classes; ++c) {
    gen.templates.push_back(make_sequence_template(core::mix_seed({seed, 0x736571ULL, c}), style));
  }
  return gen;
}

std::vector<simnet::Episode> build_training_pairs(const Generator& gen, const SplitSpec& split, std::size_t count,
                                                  std::uint64_t seed) {
  validate(split);
  if (split.train.empty()) throw std::invalid_argument("build_training_pairs: empty training split");
  if (count % 2 != 0) throw std::invalid_argument("build_training_pairs: count must be even");
  for (std::int64_t c : split.train) {
    if (static_cast<std::size_t>(c) >= gen.num_classes()) throw std::invalid_argument("class id outside the generator");
  }
  std::vector<simnet::Episode> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    core::Rng rng(core::mix_seed({seed, kTrainTag, i}));
    simnet::Episode e;
    e.id = static_cast<std::int64_t>(i);
    e.target_index = static_cast<std::int64_t>(i);
    e.label = i % 2 == 0 ? 1 : 0;
    if (gen.track == Track::kImage) {
      const ImageTarget t = image_target(gen, rng, split.train);
      std::set<std::int64_t> present;
      for (const auto& cell : t.tiled.cells) present.insert(cell.class_id);
      if (e.label == 1) {
        const auto slot = static_cast<std::size_t>(core::uniform_int(rng, 0, static_cast<std::int64_t>(t.tiled.cells.size()) - 1));
        const Cell& cell = t.tiled.cells[slot];
        e.class_id = cell.class_id;
        e.truth_box = cell.box;
        e.exemplar = gen.images->instance(static_cast<std::size_t>(cell.class_id),
                                          draw_instance(rng, *gen.images, cell.class_id, cell.instance));
      } else {
        e.class_id = sample_distinct(rng, split.train, 1, present).front();
        e.exemplar = gen.images->instance(static_cast<std::size_t>(e.class_id), draw_instance(rng, *gen.images, e.class_id));
      }
      e.target = t.tiled.image;
    } else {
      e.class_id = sample_distinct(rng, split.train, 1).front();
      const core::Tensor& tmpl = gen.templates.at(static_cast<std::size_t>(e.class_id));
      const std::size_t available = split.train.size() - 1;
      // Negatives carry one extra distractor so the number of inserted
      // patterns never reveals the label.
      const std::size_t wanted = gen.style.distractors + (e.label == 1 ? 0 : 1);
      const auto distractors = distractors_for(gen, rng, split.train, std::min(wanted, available), {e.class_id});
      const SequenceTarget t = gen_sequence_target(tmpl, e.class_id, e.label == 1, rng(), gen.style, distractors);
      e.target = t.features;
      if (t.embedded) e.truth_box = interval_box(*t.embedded);
      e.exemplar = keyword_instance(tmpl, rng(), gen.style);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<simnet::Episode> build_nway_eval(const Generator& gen, std::span<const std::int64_t> classes, std::size_t N,
                                             std::size_t targets, std::uint64_t seed) {
  if (N == 0) throw std::invalid_argument("build_nway_eval: N must be positive");
  if (classes.empty()) throw std::invalid_argument("build_nway_eval: empty class set");
  const std::size_t occupied = gen.track == Track::kImage ? gen.n * gen.n : 1;
  if (classes.size() < occupied || N - 1 > classes.size() - occupied) {
    throw std::invalid_argument("build_nway_eval: " + std::to_string(N) + "-way needs " +
                                std::to_string(occupied + N - 1) + " classes, the split has " +
                                std::to_string(classes.size()));
  }
  std::vector<simnet::Episode> out;
  out.reserve(N * targets);
  for (std::size_t t = 0; t < targets; ++t) {
    core::Rng rng(core::mix_seed({seed, kEvalTag, N, t}));
    core::Tensor target;
    std::set<std::int64_t> present;
    std::int64_t positive_class = -1;
    eval::Box truth;
    core::Tensor positive_exemplar;
    if (gen.track == Track::kImage) {
      const ImageTarget it = image_target(gen, rng, classes);
      for (const auto& cell : it.tiled.cells) present.insert(cell.class_id);
      const auto slot = static_cast<std::size_t>(core::uniform_int(rng, 0, static_cast<std::int64_t>(it.tiled.cells.size()) - 1));
      const Cell& cell = it.tiled.cells[slot];
      positive_class = cell.class_id;
      truth = cell.box;
      positive_exemplar = gen.images->instance(static_cast<std::size_t>(cell.class_id),
                                               draw_instance(rng, *gen.images, cell.class_id, cell.instance));
      target = it.tiled.image;
    } else {
      positive_class = sample_distinct(rng, classes, 1).front();
      const core::Tensor& tmpl = gen.templates.at(static_cast<std::size_t>(positive_class));
      const std::size_t room = classes.size() - N;
      const auto distractors = distractors_for(gen, rng, classes, std::min(gen.style.distractors, room), {positive_class});
      const SequenceTarget st = gen_sequence_target(tmpl, positive_class, true, rng(), gen.style, distractors);
      present.insert(positive_class);
      for (const auto& d : st.distractors) present.insert(d.class_id);
      truth = interval_box(*st.embedded);
      positive_exemplar = keyword_instance(tmpl, rng(), gen.style);
      target = st.features;
    }
    const auto negatives = sample_distinct(rng, classes, N - 1, present);
    const auto positive_slot = static_cast<std::size_t>(core::uniform_int(rng, 0, static_cast<std::int64_t>(N) - 1));
    std::size_t next_negative = 0;
    for (std::size_t j = 0; j < N; ++j) {
      simnet::Episode e;
      e.id = static_cast<std::int64_t>(t * N + j);
      e.target = target;
      e.target_index = static_cast<std::int64_t>(t);
      if (j == positive_slot) {
        e.label = 1;
        e.class_id = positive_class;
        e.truth_box = truth;
        e.exemplar = positive_exemplar;
      } else {
        e.label = 0;
        e.class_id = negatives[next_negative++];
        if (gen.track == Track::kImage) {
          e.exemplar = gen.images->instance(static_cast<std::size_t>(e.class_id), draw_instance(rng, *gen.images, e.class_id));
        } else {
          e.exemplar = keyword_instance(gen.templates.at(static_cast<std::size_t>(e.class_id)), rng(), gen.style);
        }
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace oneshot::synth
