#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "soco/core.hpp"
#include "soco/perturb.hpp"

namespace soco::kernels {

/// Noise for sample i at `step` is drawn from the ("noise/<name>", sample_id,
/// step) stream of `seed`, so results do not depend on scheduling.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::string name;
  std::uint64_t step = 0;
};

/// Imputes every sample under its mask. OpenMP over samples.
std::vector<Sample> perturb_batch(const Dataset& data, std::span<const Mask> masks, const perturb::Imputer& imputer,
                                  const NoiseStream& noise, int workers);

/// Serial reference for `perturb_batch`.
std::vector<Sample> perturb_batch_serial(const Dataset& data, std::span<const Mask> masks,
                                         const perturb::Imputer& imputer, const NoiseStream& noise);

/// Ascending rankings of every map. OpenMP over maps.
std::vector<std::vector<std::size_t>> rank_all(std::span<const AttributionMap> maps, int workers);

/// Area-ratio masks from precomputed rankings. OpenMP over maps.
std::vector<Mask> ratio_masks(std::span<const std::vector<std::size_t>> ranks, double m, int workers);

/// Threshold masks. OpenMP over maps.
std::vector<Mask> threshold_masks(std::span<const AttributionMap> maps, double t, int workers);

}  // namespace soco::kernels
