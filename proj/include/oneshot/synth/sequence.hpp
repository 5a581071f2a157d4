#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oneshot/core/tensor.hpp"

namespace oneshot::synth {

struct SequenceStyle {
  std::size_t channels = 16;
  std::size_t min_template = 20;
  std::size_t max_template = 40;
  std::size_t frames = 200;
  /// Additive noise on every frame of an utterance or keyword instance.
  double noise_std = 0.1;
  double min_warp = 0.8;
  double max_warp = 1.25;
  std::size_t distractors = 2;
  /// Stationary std of the AR(1) background.
  double background_std = 0.6;
  double background_rho = 0.9;
  /// Per-recording channel gains are drawn from 1 +- gain_jitter.
  double gain_jitter = 0.0;
};

void validate(const SequenceStyle& style);

/// Class template [channels, L] with L in [min_template, max_template]:
/// per-channel offset plus three random sinusoids.
core::Tensor make_sequence_template(std::uint64_t class_seed, const SequenceStyle& style);

/// Linear-interpolation resampling of [C, L] to [C, length].
core::Tensor time_warp(const core::Tensor& sequence, std::size_t length);

/// One spoken instance of a template: warped by a factor in
/// [min_warp, max_warp], channel gains, additive noise.
core::Tensor keyword_instance(const core::Tensor& tmpl, std::uint64_t seed, const SequenceStyle& style);

struct Placement {
  std::int64_t class_id = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

struct SequenceTarget {
  core::Tensor features;
  std::optional<Placement> embedded;
  std::vector<Placement> distractors;
};

struct Distractor {
  std::int64_t class_id = 0;
  core::Tensor tmpl;
};

/// Background of `style.frames` frames. With `contains`, a warped instance
/// of `tmpl` overwrites a random interval of length round(L * warp), which
/// is recorded. Distractor templates are inserted at non-overlapping
/// positions when they fit. Noise and gains apply to the whole utterance.
SequenceTarget gen_sequence_target(const core::Tensor& tmpl, std::int64_t class_id, bool contains, std::uint64_t seed,
                                   const SequenceStyle& style, std::span<const Distractor> distractors = {});

}  // namespace oneshot::synth
