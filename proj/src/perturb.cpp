#include "soco/perturb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace soco::perturb {

void SelectionRule::validate() const {
  if (!(parameter >= 0.0 && parameter <= 1.0))
    fail(kind == SelectionKind::area_ratio ? "mask ratio outside [0,1]" : "attribution threshold outside [0,1]");
}

std::string to_string(Order order) { return order == Order::MoRF ? "MoRF" : "LeRF"; }

std::string to_string(ImputerKind kind) {
  switch (kind) {
    case ImputerKind::mean: return "mean";
    case ImputerKind::zero: return "zero";
    case ImputerKind::noisy_linear: return "noisy_linear";
  }
  return "unknown";
}

Order order_from_string(const std::string& s) {
  if (s == "MoRF" || s == "morf") return Order::MoRF;
  if (s == "LeRF" || s == "lerf") return Order::LeRF;
  fail(ErrorKind::config, "unknown order '" + s + "'");
}

ImputerKind imputer_kind_from_string(const std::string& s) {
  for (ImputerKind k : {ImputerKind::mean, ImputerKind::zero, ImputerKind::noisy_linear})
    if (to_string(k) == s) return k;
  fail(ErrorKind::config, "unknown imputer '" + s + "'");
}

double default_noise_std(const Dataset& data) {
  const auto [lo, hi] = data.value_range();
  return 0.01 * (hi - lo);
}

std::vector<std::size_t> rank_features(const AttributionMap& map) {
  std::vector<std::size_t> idx(map.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto values = map.values();
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return idx;
}

std::size_t ratio_count(double m, std::size_t d) {
  return static_cast<std::size_t>(std::llround(m * static_cast<double>(d)));
}

namespace {

void require_unit_range(const AttributionMap& map) {
  if (map.max() > 1.0) fail("attribution map must lie in [0,1]; normalize it first");
}

}  // namespace

Mask mask_by_ratio(std::span<const std::size_t> ascending_rank, double m) {
  if (!(m >= 0.0 && m <= 1.0)) fail("mask ratio outside [0,1]");
  Mask mask(ascending_rank.size());
  const std::size_t k = std::min(ratio_count(m, ascending_rank.size()), ascending_rank.size());
  for (std::size_t r = 0; r < k; ++r) mask.set(ascending_rank[r]);
  return mask;
}

Mask mask_by_ratio(const AttributionMap& map, double m) {
  require_unit_range(map);
  return mask_by_ratio(rank_features(map), m);
}

Mask mask_by_threshold(const AttributionMap& map, double t) {
  if (!(t >= 0.0 && t <= 1.0)) fail("attribution threshold outside [0,1]");
  require_unit_range(map);
  Mask mask(map.size());
  for (std::size_t j = 0; j < map.size(); ++j)
    if (map[j] > t) mask.set(j);
  return mask;
}

Mask apply_rule(const AttributionMap& map, const SelectionRule& rule) {
  rule.validate();
  Mask mask = rule.kind == SelectionKind::area_ratio ? mask_by_ratio(map, rule.parameter)
                                                     : mask_by_threshold(map, rule.parameter);
  // Ratio masks are LeRF by construction and threshold masks MoRF; the
  // opposite order selects the complementary set.
  const bool natural = (rule.kind == SelectionKind::area_ratio) == (rule.order == Order::LeRF);
  return natural ? mask : mask.complement();
}

Sample impute_tabular(const Sample& x, const Mask& mask, std::span<const double> means, double noise_std,
                      rng::CounterEngine& noise) {
  if (mask.size() != x.features.size() || means.size() != x.features.size())
    fail("shape mismatch between sample, mask and means");
  Sample out = x;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < out.features.size(); ++j) {
    if (!mask[j]) continue;
    out.features[j] = means[j];
    if (noise_std > 0.0) out.features[j] += noise_std * normal(noise);
  }
  return out;
}

std::vector<NeighbourWeight> neighbour_weights(std::size_t h, std::size_t w, std::size_t r, std::size_t c) {
  std::vector<NeighbourWeight> out;
  double total = 0.0;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
      if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) continue;
      const double weight = (dr == 0 || dc == 0) ? 1.0 / 6.0 : 1.0 / 12.0;
      out.push_back({static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), weight});
      total += weight;
    }
  for (NeighbourWeight& n : out) n.weight /= total;
  return out;
}

Sample impute_grid(const Sample& x, const Mask& mask, double noise_std, rng::CounterEngine& noise) {
  const Shape& shape = x.shape;
  if (!shape.grid) fail("noisy linear imputation requires grid-shaped samples");
  if (mask.size() != x.features.size()) fail("shape mismatch between sample and mask");

  const std::size_t h = shape.height, w = shape.width, ch = shape.channels;
  // Masks act on features; a pixel is unknown in channel k when its feature is masked.
  Sample out = x;
  for (std::size_t k = 0; k < ch; ++k) {
    std::vector<long> unknown(h * w, -1);
    long n_unknown = 0;
    for (std::size_t p = 0; p < h * w; ++p)
      if (mask[p * ch + k]) unknown[p] = n_unknown++;
    if (n_unknown == 0) continue;

    if (static_cast<std::size_t>(n_unknown) == h * w) {
      static std::atomic<bool> warned{false};
      if (!warned.exchange(true))
        std::cerr << "warning: fully masked grid (sample " << x.id << ", channel " << k
                  << "); using the mean-zero solution (reported once)\n";
      for (std::size_t p = 0; p < h * w; ++p) out.features[p * ch + k] = 0.0;
      continue;
    }

    // Solve for deviations from one known value so a constant field stays
    // exactly constant.
    double ref = 0.0;
    for (std::size_t p = 0; p < h * w; ++p)
      if (unknown[p] < 0) {
        ref = x.features[p * ch + k];
        break;
      }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n_unknown) * 9);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        const long row = unknown[r * w + c];
        if (row < 0) continue;
        triplets.emplace_back(row, row, 1.0);
        for (const NeighbourWeight& n : neighbour_weights(h, w, r, c)) {
          const std::size_t q = n.row * w + n.col;
          if (unknown[q] >= 0)
            triplets.emplace_back(row, unknown[q], -n.weight);
          else
            rhs[row] += n.weight * (x.features[q * ch + k] - ref);
        }
      }
    Eigen::SparseMatrix<double> system(n_unknown, n_unknown);
    system.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(system);
    if (solver.info() != Eigen::Success) fail(ErrorKind::data, "imputation system factorization failed");
    const Eigen::VectorXd solution = solver.solve(rhs);
    if (solver.info() != Eigen::Success) fail(ErrorKind::data, "imputation solve failed");
    for (std::size_t p = 0; p < h * w; ++p)
      if (unknown[p] >= 0) out.features[p * ch + k] = ref + solution[unknown[p]];
  }

  if (noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < out.features.size(); ++j)
      if (mask[j]) out.features[j] += noise_std * normal(noise);
  }
  return out;
}

Sample impute(const Imputer& imputer, const Sample& x, const Mask& mask, std::span<const double> means,
              rng::CounterEngine& noise) {
  switch (imputer.kind) {
    case ImputerKind::mean: return impute_tabular(x, mask, means, imputer.noise_std, noise);
    case ImputerKind::zero: {
      const std::vector<double> zeros(x.features.size(), 0.0);
      return impute_tabular(x, mask, zeros, imputer.noise_std, noise);
    }
    case ImputerKind::noisy_linear: return impute_grid(x, mask, imputer.noise_std, noise);
  }
  fail("unknown imputer");
}

}  // namespace soco::perturb
