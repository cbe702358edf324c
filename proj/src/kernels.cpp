#include "soco/kernels.hpp"

#include "soco/parallel.hpp"
#include "soco/rng.hpp"

namespace soco::kernels {

namespace {

void check_batch(const Dataset& data, std::span<const Mask> masks) {
  if (masks.size() != data.size()) fail("one mask per sample required");
}

Sample perturb_one(const Dataset& data, std::size_t i, const Mask& mask, const perturb::Imputer& imputer,
                   const NoiseStream& noise) {
  const Sample& x = data.sample(i);
  rng::CounterEngine engine(noise.seed, "noise/" + noise.name, x.id, noise.step);
  return perturb::impute(imputer, x, mask, data.feature_means(), engine);
}

}  // namespace

std::vector<Sample> perturb_batch(const Dataset& data, std::span<const Mask> masks, const perturb::Imputer& imputer,
                                  const NoiseStream& noise, int workers) {
  check_batch(data, masks);
  std::vector<Sample> out(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) { out[i] = perturb_one(data, i, masks[i], imputer, noise); });
  return out;
}

std::vector<Sample> perturb_batch_serial(const Dataset& data, std::span<const Mask> masks,
                                         const perturb::Imputer& imputer, const NoiseStream& noise) {
  check_batch(data, masks);
  std::vector<Sample> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(perturb_one(data, i, masks[i], imputer, noise));
  return out;
}

std::vector<std::vector<std::size_t>> rank_all(std::span<const AttributionMap> maps, int workers) {
  std::vector<std::vector<std::size_t>> out(maps.size());
  parallel_for(maps.size(), workers, [&](std::size_t i) { out[i] = perturb::rank_features(maps[i]); });
  return out;
}

std::vector<Mask> ratio_masks(std::span<const std::vector<std::size_t>> ranks, double m, int workers) {
  std::vector<Mask> out(ranks.size());
  parallel_for(ranks.size(), workers, [&](std::size_t i) { out[i] = perturb::mask_by_ratio(ranks[i], m); });
  return out;
}

std::vector<Mask> threshold_masks(std::span<const AttributionMap> maps, double t, int workers) {
  std::vector<Mask> out(maps.size());
  parallel_for(maps.size(), workers, [&](std::size_t i) { out[i] = perturb::mask_by_threshold(maps[i], t); });
  return out;
}

}  // namespace soco::kernels
