#include "oneshot/synth/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "oneshot/core/random.hpp"

namespace oneshot::synth {

namespace {

constexpr std::uint64_t kTemplateTag = 0x746d706cULL;
constexpr std::uint64_t kUtteranceTag = 0x75747465ULL;
constexpr std::uint64_t kKeywordTag = 0x6b657977ULL;
constexpr int kPlacementAttempts = 50;

std::size_t warped_length(std::size_t length, double factor) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(length) * factor)));
}

double draw_warp(core::Rng& rng, const SequenceStyle& style) {
  return style.min_warp == style.max_warp ? style.min_warp : core::uniform(rng, style.min_warp, style.max_warp);
}

void apply_gain_and_noise(core::Tensor& x, core::Rng& rng, const SequenceStyle& style) {
  const std::size_t channels = x.dim(0), len = x.dim(1);
  auto v = x.values();
  for (std::size_t c = 0; c < channels; ++c) {
    const double gain = style.gain_jitter > 0.0 ? 1.0 + core::uniform(rng, -style.gain_jitter, style.gain_jitter) : 1.0;
    for (std::size_t t = 0; t < len; ++t) {
      double& value = v[c * len + t];
      value *= gain;
      if (style.noise_std > 0.0) value += core::normal(rng, 0.0, style.noise_std);
    }
  }
}

void overwrite(core::Tensor& target, const core::Tensor& insert, std::size_t start) {
  const std::size_t channels = target.dim(0), frames = target.dim(1), len = insert.dim(1);
  auto dst = target.values();
  const auto src = insert.values();
  for (std::size_t c = 0; c < channels; ++c) {
    std::copy_n(src.begin() + c * len, len, dst.begin() + c * frames + start);
  }
}

bool overlaps(std::size_t start, std::size_t length, const std::vector<Placement>& taken) {
  for (const auto& p : taken) {
    if (start < p.start + p.length && p.start < start + length) return true;
  }
  return false;
}

}  // namespace

void validate(const SequenceStyle& style) {
  if (style.channels == 0) throw std::invalid_argument("sequence channels must be positive");
  if (style.min_template == 0 || style.min_template > style.max_template) {
    throw std::invalid_argument("template length range must satisfy 0 < min <= max");
  }
  if (!(style.min_warp > 0.0) || style.min_warp > style.max_warp) {
    throw std::invalid_argument("warp range must satisfy 0 < min <= max");
  }
  if (style.noise_std < 0.0 || style.background_std < 0.0 || style.gain_jitter < 0.0 || style.gain_jitter >= 1.0) {
    throw std::invalid_argument("noise, background and gain jitter must be nonnegative (gain jitter < 1)");
  }
  if (std::abs(style.background_rho) >= 1.0) throw std::invalid_argument("background_rho must lie in (-1, 1)");
}

core::Tensor make_sequence_template(std::uint64_t class_seed, const SequenceStyle& style) {
  validate(style);
  core::Rng rng(core::mix_seed({class_seed, kTemplateTag}));
  const auto len = static_cast<std::size_t>(core::uniform_int(rng, static_cast<std::int64_t>(style.min_template),
                                                              static_cast<std::int64_t>(style.max_template)));
  core::Tensor tmpl({style.channels, len});
  auto v = tmpl.values();
  for (std::size_t c = 0; c < style.channels; ++c) {
    const double offset = core::normal(rng, 0.0, 0.5);
    double amp[3], freq[3], phase[3];
    for (int j = 0; j < 3; ++j) {
      amp[j] = core::normal(rng, 0.0, 0.7);
      freq[j] = core::uniform(rng, 0.5, 3.0);
      phase[j] = core::uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }
    for (std::size_t t = 0; t < len; ++t) {
      const double u = static_cast<double>(t) / static_cast<double>(len);
      double value = offset;
      for (int j = 0; j < 3; ++j) value += amp[j] * std::sin(2.0 * std::numbers::pi * freq[j] * u + phase[j]);
      v[c * len + t] = value;
    }
  }
  return tmpl;
}

core::Tensor time_warp(const core::Tensor& sequence, std::size_t length) {
  if (sequence.rank() != 2) throw std::invalid_argument("time_warp: expected [C, L]");
  if (length == 0) throw std::invalid_argument("time_warp: length must be positive");
  const std::size_t channels = sequence.dim(0), len = sequence.dim(1);
  if (length == len) return sequence.clone();
  core::Tensor out({channels, length});
  const auto src = sequence.values();
  auto dst = out.values();
  for (std::size_t t = 0; t < length; ++t) {
    // Endpoints map to endpoints.
    const double pos = length == 1 ? 0.0
                                   : static_cast<double>(t) * static_cast<double>(len - 1) / static_cast<double>(length - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, len - 1);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t c = 0; c < channels; ++c) {
      dst[c * length + t] = (1.0 - frac) * src[c * len + lo] + frac * src[c * len + hi];
    }
  }
  return out;
}

core::Tensor keyword_instance(const core::Tensor& tmpl, std::uint64_t seed, const SequenceStyle& style) {
  validate(style);
  core::Rng rng(core::mix_seed({seed, kKeywordTag}));
  core::Tensor out = time_warp(tmpl, warped_length(tmpl.dim(1), draw_warp(rng, style)));
  apply_gain_and_noise(out, rng, style);
  return out;
}

SequenceTarget gen_sequence_target(const core::Tensor& tmpl, std::int64_t class_id, bool contains, std::uint64_t seed,
                                   const SequenceStyle& style, std::span<const Distractor> distractors) {
  validate(style);
  if (tmpl.rank() != 2 || tmpl.dim(0) != style.channels) {
    throw std::invalid_argument("gen_sequence_target: template must be [" + std::to_string(style.channels) + ", L]");
  }
  if (tmpl.dim(1) >= style.frames) {
    throw std::invalid_argument("gen_sequence_target: template of " + std::to_string(tmpl.dim(1)) +
                                " frames does not fit a target of " + std::to_string(style.frames));
  }
  core::Rng rng(core::mix_seed({seed, kUtteranceTag}));
  SequenceTarget out;
  out.features = core::Tensor({style.channels, style.frames});
  {
    auto v = out.features.values();
    const double innovation = style.background_std * std::sqrt(1.0 - style.background_rho * style.background_rho);
    for (std::size_t c = 0; c < style.channels; ++c) {
      double state = core::normal(rng, 0.0, style.background_std);
      for (std::size_t t = 0; t < style.frames; ++t) {
        v[c * style.frames + t] = state;
        state = style.background_rho * state + core::normal(rng, 0.0, innovation);
      }
    }
  }

  std::vector<Placement> taken;
  if (contains) {
    const std::size_t len = std::min(warped_length(tmpl.dim(1), draw_warp(rng, style)), style.frames);
    const auto start = static_cast<std::size_t>(core::uniform_int(rng, 0, static_cast<std::int64_t>(style.frames - len)));
    overwrite(out.features, time_warp(tmpl, len), start);
    out.embedded = Placement{class_id, start, len};
    taken.push_back(*out.embedded);
  }
  for (const Distractor& d : distractors) {
    if (d.class_id == class_id && contains) {
      throw std::invalid_argument("gen_sequence_target: distractor repeats the embedded class");
    }
    const std::size_t len = std::min(warped_length(d.tmpl.dim(1), draw_warp(rng, style)), style.frames);
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const auto start = static_cast<std::size_t>(core::uniform_int(rng, 0, static_cast<std::int64_t>(style.frames - len)));
      if (overlaps(start, len, taken)) continue;
      overwrite(out.features, time_warp(d.tmpl, len), start);
      taken.push_back(Placement{d.class_id, start, len});
      out.distractors.push_back(taken.back());
      break;
    }
  }
  apply_gain_and_noise(out.features, rng, style);
  return out;
}

}  // namespace oneshot::synth
