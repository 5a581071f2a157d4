#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oneshot/simnet/episode.hpp"
#include "oneshot/synth/glyph.hpp"
#include "oneshot/synth/sequence.hpp"

namespace oneshot::synth {

enum class Track { kImage, kSequence };

Track parse_track(const std::string& name);
std::string track_name(Track track);

/// Class ids for training, validation (calibration and model selection) and
/// test. Pairwise disjoint.
struct SplitSpec {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> validation;
  std::vector<std::int64_t> test;
};

/// Ids 0..train+validation+test-1, shuffled by `seed`, then cut in order.
SplitSpec make_split(std::size_t train, std::size_t validation, std::size_t test, std::uint64_t seed);
void validate(const SplitSpec& split);

/// Class material for one track. Image classes index into `images`;
/// sequence classes index into `templates`.
struct Generator {
  Track track = Track::kImage;
  std::size_t n = 2;
  std::shared_ptr<const ImageSource> images;
  SequenceStyle style;
  std::vector<core::Tensor> templates;

  std::size_t num_classes() const;
};

Generator image_generator(std::shared_ptr<const ImageSource> images, std::size_t n);
Generator sequence_generator(std::size_t num_classes, std::uint64_t seed, const SequenceStyle& style);

/// `count` episodes from the training classes, alternating positive (even
/// index) and negative. Episode i is a pure function of (seed, i). The
/// exemplar is always a different instance from anything in the target.
std::vector<simnet::Episode> build_training_pairs(const Generator& gen, const SplitSpec& split, std::size_t count,
                                                  std::uint64_t seed);

/// `targets` targets from `classes`, each paired with `N` exemplars of which
/// exactly one is positive; negatives are classes absent from the target.
/// Episodes of one target share its tensor and have ids target * N + j.
std::vector<simnet::Episode> build_nway_eval(const Generator& gen, std::span<const std::int64_t> classes, std::size_t N,
                                             std::size_t targets, std::uint64_t seed);

}  // namespace oneshot::synth
