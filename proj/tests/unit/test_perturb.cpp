#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "../common/oracles.hpp"
#include "soco/perturb.hpp"

namespace {

using namespace soco;
using namespace soco::perturb;

AttributionMap map_of(std::vector<double> v) { return AttributionMap(std::move(v), true); }

std::vector<std::size_t> selected(const Mask& m) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < m.size(); ++j)
    if (m[j]) out.push_back(j);
  return out;
}

TEST(Rank, AscendingWithIndexTieBreak) {
  EXPECT_EQ(rank_features(map_of({0.3, 0.1, 0.2})), (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(rank_features(map_of({0.5, 0.5})), (std::vector<std::size_t>{0, 1}));
}

TEST(Rank, PermutationEquivariant) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 100; ++t) {
    const AttributionMap m = oracle::random_map(20, gen);
    std::vector<std::size_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> pv(20);
    for (std::size_t j = 0; j < 20; ++j) pv[perm[j]] = m[j];
    const auto r = rank_features(m), pr = rank_features(map_of(pv));
    for (std::size_t k = 0; k < 20; ++k) EXPECT_EQ(pr[k], perm[r[k]]);
  }
}

TEST(MaskByRatio, Examples) {
  std::vector<double> v(10);
  for (int j = 0; j < 10; ++j) v[j] = j / 10.0;
  const auto m = map_of(v);
  EXPECT_EQ(selected(mask_by_ratio(m, 0.3)), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(mask_by_ratio(m, 0.0).count(), 0u);
  EXPECT_EQ(mask_by_ratio(m, 1.0).count(), 10u);
  EXPECT_THROW(mask_by_ratio(m, 1.2), Error);
  EXPECT_THROW(mask_by_ratio(m, -0.1), Error);
}

TEST(MaskByRatio, RoundsHalfAwayFromZero) {
  EXPECT_EQ(ratio_count(0.25, 2), 1u);
  EXPECT_EQ(ratio_count(0.125, 4), 1u);
  EXPECT_EQ(ratio_count(0.375, 4), 2u);
}

TEST(MaskByThreshold, Examples) {
  EXPECT_EQ(selected(mask_by_threshold(map_of({0.2, 0.95, 0.5}), 0.9)), (std::vector<std::size_t>{1}));
  EXPECT_EQ(mask_by_threshold(map_of({0.2, 1.0, 0.5}), 1.0).count(), 0u);
  EXPECT_EQ(mask_by_threshold(map_of({0.2, 1.0, 0.5}), 0.0).count(), 3u);
  EXPECT_THROW(mask_by_threshold(map_of({0.2}), 1.5), Error);
}

TEST(MaskByThreshold, RequiresUnitRange) {
  EXPECT_THROW(mask_by_threshold(AttributionMap({2.0, 1.0}), 0.5), Error);
}

TEST(ApplyRule, OppositeOrderIsComplement) {
  const auto m = map_of({0.1, 0.9, 0.5, 0.7});
  const Mask lerf = apply_rule(m, {SelectionKind::area_ratio, Order::LeRF, 0.5});
  const Mask morf = apply_rule(m, {SelectionKind::area_ratio, Order::MoRF, 0.5});
  EXPECT_EQ(lerf, morf.complement());
  EXPECT_EQ(selected(apply_rule(m, {SelectionKind::value_threshold, Order::MoRF, 0.6})),
            (std::vector<std::size_t>{1, 3}));
  EXPECT_THROW(apply_rule(m, {SelectionKind::value_threshold, Order::MoRF, 2.0}), Error);
}

TEST(MaskProperties, AntitoneAndMonotone) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const AttributionMap m = oracle::random_map(25, gen, 0.3);
    double a = u(gen), b = u(gen);
    if (a > b) std::swap(a, b);
    EXPECT_TRUE(mask_by_threshold(m, b).subset_of(mask_by_threshold(m, a)));
    EXPECT_TRUE(mask_by_ratio(m, a).subset_of(mask_by_ratio(m, b)));
  }
}

TEST(ImputeTabular, Examples) {
  rng::CounterEngine e(1);
  const Sample x{{1.0, 2.0}, Shape::flat(2), 0};
  Mask m(2);
  m.set(0);
  EXPECT_EQ(impute_tabular(x, m, std::vector<double>{0, 0}, 0.0, e).features, (std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(impute_tabular(x, Mask(2), std::vector<double>{5, 5}, 0.3, e).features, x.features);
  EXPECT_EQ(impute_tabular(x, Mask(2, true), std::vector<double>{7, 8}, 0.0, e).features,
            (std::vector<double>{7.0, 8.0}));
  EXPECT_THROW(impute_tabular(x, Mask(3), std::vector<double>{0, 0}, 0.0, e), Error);
}

TEST(ImputeTabular, NoiseOnlyOnMaskedAndDeterministic) {
  std::mt19937_64 gen(8);
  const Sample x{std::vector<double>(50, 3.0), Shape::flat(50), 9};
  const Mask m = oracle::random_mask(50, 0.5, gen);
  const std::vector<double> means(50, 0.0);
  rng::CounterEngine e1(77, "noise/test", 9, 4), e2(77, "noise/test", 9, 4);
  const Sample a = impute_tabular(x, m, means, 0.5, e1), b = impute_tabular(x, m, means, 0.5, e2);
  EXPECT_EQ(a.features, b.features);
  for (std::size_t j = 0; j < 50; ++j) {
    if (!m[j]) EXPECT_EQ(a.features[j], 3.0);
    else EXPECT_NE(a.features[j], 0.0);
  }
}

TEST(NeighbourWeights, InteriorAndCorner) {
  const auto inner = neighbour_weights(5, 5, 2, 2);
  ASSERT_EQ(inner.size(), 8u);
  double s = 0;
  for (const auto& n : inner) {
    s += n.weight;
    const bool direct = n.row == 2 || n.col == 2;
    EXPECT_NEAR(n.weight, direct ? 1.0 / 6.0 : 1.0 / 12.0, 1e-15);
  }
  EXPECT_NEAR(s, 1.0, 1e-15);
  const auto corner = neighbour_weights(5, 5, 0, 0);
  ASSERT_EQ(corner.size(), 3u);
  // 1/6 + 1/6 + 1/12 = 5/12 renormalized.
  for (const auto& n : corner) EXPECT_NEAR(n.weight, (n.row == 1 && n.col == 1) ? 0.2 : 0.4, 1e-15);
}

TEST(ImputeGrid, ConstantFieldPreserved) {
  std::mt19937_64 gen(4);
  rng::CounterEngine e(0);
  Sample x{std::vector<double>(36, 2.5), Shape::image(6, 6), 0};
  for (int t = 0; t < 20; ++t) {
    Mask m = oracle::random_mask(36, 0.6, gen);
    if (m.count() == 36) continue;
    const Sample y = impute_grid(x, m, 0.0, e);
    for (double v : y.features) EXPECT_NEAR(v, 2.5, 1e-12);
  }
}

TEST(ImputeGrid, SingleMaskedPixel) {
  rng::CounterEngine e(0);
  Sample x{std::vector<double>(9, 1.0), Shape::image(3, 3), 0};
  x.features[4] = -50.0;
  Mask m(9);
  m.set(4);
  EXPECT_NEAR(impute_grid(x, m, 0.0, e).features[4], 1.0, 1e-14);
}

TEST(ImputeGrid, MatchesDenseSolveOn4x4Block) {
  std::mt19937_64 gen(12);
  rng::CounterEngine e(0);
  const Sample x = oracle::random_grid(4, 4, 1, 0, gen);
  Mask m(16);
  for (std::size_t r = 1; r < 3; ++r)
    for (std::size_t c = 1; c < 3; ++c) m.set(r * 4 + c);
  const Sample a = impute_grid(x, m, 0.0, e), b = oracle::dense_impute(x, m);
  for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(a.features[j], b.features[j], 1e-9);
}

TEST(ImputeGrid, MultiChannelResidualAndUnmaskedUntouched) {
  std::mt19937_64 gen(13);
  rng::CounterEngine e(0);
  const Sample x = oracle::random_grid(7, 5, 3, 0, gen);
  const Mask m = oracle::random_mask(x.features.size(), 0.5, gen);
  const Sample y = impute_grid(x, m, 0.0, e);
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 5; ++c)
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t j = x.shape.index(r, c, k);
        if (m[j]) EXPECT_NEAR(y.features[j], oracle::neighbour_average(y, r, c, k), 1e-9);
        else EXPECT_EQ(y.features[j], x.features[j]);
      }
}

TEST(ImputeGrid, NoiseOnlyOnImputedPixels) {
  std::mt19937_64 gen(14);
  const Sample x = oracle::random_grid(6, 6, 1, 3, gen);
  const Mask m = oracle::random_mask(36, 0.4, gen);
  rng::CounterEngine e1(5, "noise/x", 3, 1), e0(0);
  const Sample noisy = impute_grid(x, m, 0.1, e1), clean = impute_grid(x, m, 0.0, e0);
  for (std::size_t j = 0; j < 36; ++j) {
    if (m[j]) EXPECT_NE(noisy.features[j], clean.features[j]);
    else EXPECT_EQ(noisy.features[j], x.features[j]);
  }
}

TEST(ImputeGrid, FullyMaskedGivesZeros) {
  rng::CounterEngine e(0);
  Sample x{std::vector<double>(16, 3.0), Shape::image(4, 4), 0};
  const Sample y = impute_grid(x, Mask(16, true), 0.0, e);
  for (double v : y.features) EXPECT_EQ(v, 0.0);
}

TEST(Impute, DispatchAndShapeChecks) {
  rng::CounterEngine e(0);
  const Sample flat{{1.0, 2.0}, Shape::flat(2), 0};
  Mask m(2, true);
  EXPECT_THROW(impute({ImputerKind::noisy_linear, 0.0}, flat, m, std::vector<double>{0, 0}, e), Error);
  EXPECT_EQ(impute({ImputerKind::zero, 0.0}, flat, m, std::vector<double>{4, 4}, e).features,
            (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(impute({ImputerKind::mean, 0.0}, flat, m, std::vector<double>{4, 5}, e).features,
            (std::vector<double>{4.0, 5.0}));
}

TEST(DefaultNoise, OnePercentOfRange) {
  std::vector<Sample> s{{{-1.0, 3.0}, Shape::flat(2), 0}, {{0.0, 1.0}, Shape::flat(2), 1}};
  const Dataset d(Shape::flat(2), s, {0, 1}, 2);
  EXPECT_NEAR(default_noise_std(d), 0.04, 1e-15);
}

}  // namespace
