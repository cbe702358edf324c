#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "soco/core.hpp"
#include "soco/rng.hpp"

namespace soco::modify {

enum class Kind { constant, random, partial, synth_remove, synth_introduce };
enum class Direction { remove, introduce };

std::string to_string(Kind kind);
std::string to_string(Direction dir);
Kind kind_from_string(const std::string& s);
Direction direction_from_string(const std::string& s);

/// A modification scheme. `magnitude` is the constant delta, the uniform
/// shift bound, or the largest introduced value; `fraction` is the share of
/// features touched by the synthetic schemes.
struct ModScheme {
  Kind kind = Kind::constant;
  Direction direction = Direction::remove;
  double magnitude = 0.6;
  double fraction = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Defaults used by the validation experiment.
ModScheme synth_remove_scheme(std::uint64_t seed);
ModScheme synth_introduce_scheme(std::uint64_t seed);

/// remove: values - delta clipped at 0; introduce: values + delta clipped at 1.
AttributionMap modify_constant(const AttributionMap& map, double delta, Direction dir);

/// Independent U(lo, hi) shift per feature, clipped to [0,1].
AttributionMap modify_random(const AttributionMap& map, double lo, double hi, rng::CounterEngine& engine);

/// remove: zero the features ranked in [0.6N, 0.8N); introduce: raise the
/// features ranked in [0, 0.4N) to the map's 0.8 quantile.
AttributionMap modify_partial(const AttributionMap& map, Direction dir);

/// Zeroes a uniformly random round(fraction * |A|) subset of the positive
/// support and renormalizes.
AttributionMap synth_remove(const AttributionMap& map, double fraction, rng::CounterEngine& engine);

/// Gives a uniformly random round(fraction * |C|) subset of the candidates C
/// (zero attribution and outside the predictive set) values drawn from
/// U(0, magnitude], then renormalizes.
AttributionMap synth_introduce(const AttributionMap& map, std::span<const std::size_t> predictive_set,
                               double fraction, double magnitude, rng::CounterEngine& engine);

/// Applies a scheme to the map of sample `sample_id`. Randomness comes from
/// the ("modify", sample_id, trial) stream of `scheme.seed`.
AttributionMap apply(const ModScheme& scheme, const AttributionMap& map,
                     std::span<const std::size_t> predictive_set, std::uint64_t sample_id, std::uint64_t trial = 0);

/// 1 inside an h x w rectangle centred on the attribution-weighted centroid
/// (clipped to the image), 0 elsewhere.
AttributionMap craft_rect(const AttributionMap& map, const Shape& shape, std::size_t rect_h, std::size_t rect_w);

/// Replaces each of `n_regions` horizontal bands by its mean; remainder rows
/// join the last band.
AttributionMap craft_pooling(const AttributionMap& map, const Shape& shape, std::size_t n_regions);

/// Linearly interpolated quantile of the map values.
double quantile(std::span<const double> values, double q);

}  // namespace soco::modify
