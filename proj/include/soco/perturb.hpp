#pragma once

#include <span>
#include <vector>

#include "soco/core.hpp"
#include "soco/rng.hpp"

namespace soco::perturb {

enum class Order { MoRF, LeRF };
enum class SelectionKind { area_ratio, value_threshold };

struct SelectionRule {
  SelectionKind kind = SelectionKind::area_ratio;
  Order order = Order::LeRF;
  double parameter = 0.0;

  void validate() const;
};

enum class ImputerKind { mean, zero, noisy_linear };

struct Imputer {
  ImputerKind kind = ImputerKind::mean;
  double noise_std = 0.0;
};

std::string to_string(Order order);
std::string to_string(ImputerKind kind);
Order order_from_string(const std::string& s);
ImputerKind imputer_kind_from_string(const std::string& s);

/// 0.01 of the dataset's feature value range.
double default_noise_std(const Dataset& data);

/// Feature indices sorted ascending by attribution; ties by ascending index.
std::vector<std::size_t> rank_features(const AttributionMap& map);

/// Number of features selected for an area ratio `m` over `d` features,
/// rounded half away from zero.
std::size_t ratio_count(double m, std::size_t d);

/// Selects the round(m * d) lowest-ranked features (area-based LeRF masking).
Mask mask_by_ratio(const AttributionMap& map, double m);
/// Same, reusing a ranking computed by `rank_features`.
Mask mask_by_ratio(std::span<const std::size_t> ascending_rank, double m);

/// Selects every feature whose attribution is strictly greater than `t`.
Mask mask_by_threshold(const AttributionMap& map, double t);

Mask apply_rule(const AttributionMap& map, const SelectionRule& rule);

/// Masked features become mean + N(0, noise_std^2); the rest are untouched.
Sample impute_tabular(const Sample& x, const Mask& mask, std::span<const double> means, double noise_std,
                      rng::CounterEngine& noise);

/// Masked pixels solve v_p = sum_n w_pn v_n over the 8-neighbourhood
/// (direct 1/6, diagonal 1/12, renormalized at borders) with unmasked pixels
/// as boundary values, one solve per channel. Noise is added to imputed
/// pixels only. A fully masked grid has no boundary; its mean-zero solution
/// (all zeros) is used and a warning is logged once per process.
Sample impute_grid(const Sample& x, const Mask& mask, double noise_std, rng::CounterEngine& noise);

/// Dispatches on the imputer kind. `noisy_linear` requires grid samples.
Sample impute(const Imputer& imputer, const Sample& x, const Mask& mask, std::span<const double> means,
              rng::CounterEngine& noise);

/// Neighbour weights of pixel (r, c) on an h x w grid, already renormalized
/// to sum to one. Exposed for tests.
struct NeighbourWeight {
  std::size_t row, col;
  double weight;
};
std::vector<NeighbourWeight> neighbour_weights(std::size_t h, std::size_t w, std::size_t r, std::size_t c);

}  // namespace soco::perturb
