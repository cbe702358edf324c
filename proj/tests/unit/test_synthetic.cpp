#include <gtest/gtest.h>

#include <cstring>

#include "soco/synthetic.hpp"

namespace {

using namespace soco;
using namespace soco::synthetic;

Sample flat(std::vector<double> v) {
  const std::size_t d = v.size();
  return {std::move(v), Shape::flat(d), 0};
}

TEST(Generate, DefaultShape) {
  const Dataset d = generate({1000, 200, 1});
  EXPECT_EQ(d.size(), 1000u);
  EXPECT_EQ(d.n_features(), 200u);
  EXPECT_EQ(d.n_classes(), 2u);
}

TEST(Generate, SameSeedBitIdentical) {
  const Dataset a = generate({100, 30, 42}), b = generate({100, 30, 42});
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(0, std::memcmp(a.sample(i).features.data(), b.sample(i).features.data(), 30 * sizeof(double)));
    EXPECT_EQ(a.label(i), b.label(i));
  }
  const Dataset c = generate({100, 30, 43});
  EXPECT_NE(a.sample(0).features, c.sample(0).features);
}

TEST(Generate, SamplesIndependentOfDatasetSize) {
  // Per-sample streams: the first samples do not depend on how many follow.
  const Dataset small = generate({10, 8, 5}), large = generate({50, 8, 5});
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(small.sample(i).features, large.sample(i).features);
}

TEST(Generate, LabelsFollowSumSign) {
  const Dataset d = generate({500, 10, 9});
  for (std::size_t i = 0; i < d.size(); ++i) {
    double s = 0.0;
    for (double v : d.sample(i).features) s += v;
    EXPECT_NE(s, 0.0);
    EXPECT_EQ(d.label(i), s > 0.0 ? 1 : 0);
  }
}

TEST(Generate, ClassBalance) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset d = generate({1000, 200, seed});
    double ones = 0;
    for (int l : d.labels()) ones += l;
    EXPECT_GE(ones / 1000.0, 0.4);
    EXPECT_LE(ones / 1000.0, 0.6);
  }
}

TEST(Generate, InvalidSpec) { EXPECT_THROW(generate({0, 5, 0}), Error); }

TEST(LinearStep, Examples) {
  EXPECT_EQ(linear_step_predict(flat({1.0, -0.5})), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(linear_step_predict(flat({-1.0, -1.0})), (std::vector<double>{1.0, 0.0}));
}

TEST(LinearStep, GridInputRejected) {
  Sample g{std::vector<double>(4, 1.0), Shape::image(2, 2), 0};
  try {
    linear_step_predict(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("tabular model"), std::string::npos);
  }
}

TEST(GroundTruth, PositiveAndNegativeRules) {
  const OracleInfo pos = oracle_info(flat({0.5, -0.3}), 1);
  EXPECT_EQ(pos.phi, (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(pos.predictive_set, (std::vector<std::size_t>{0}));
  const OracleInfo neg = oracle_info(flat({-0.5, 0.3}), 0);
  EXPECT_EQ(neg.phi, (std::vector<double>{0.5, 0.0}));
  const AttributionMap m = ground_truth_attribution(flat({0.5, -0.3}), 1);
  EXPECT_EQ(m[0], 1.0);
  EXPECT_EQ(m[1], 0.0);
}

TEST(GroundTruth, InconsistentLabel) {
  try {
    ground_truth_attribution(flat({-0.5, -0.3}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("inconsistent label"), std::string::npos);
  }
}

TEST(GroundTruth, SupportEqualsPredictiveSetAndOracleRatiosAreOne) {
  const Dataset d = generate({300, 50, 17});
  const auto maps = ground_truth_maps(d);
  const auto infos = oracle_infos(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(maps[i].support(), infos[i].predictive_set);
    double a = 0, a_and_i = 0, i_phi = 0, ai_phi = 0;
    std::vector<bool> in_i(50, false);
    for (std::size_t j : infos[i].predictive_set) in_i[j] = true;
    for (std::size_t j = 0; j < 50; ++j) {
      a += maps[i][j];
      if (in_i[j]) a_and_i += maps[i][j];
      if (in_i[j]) i_phi += infos[i].phi[j];
      if (in_i[j] && maps[i][j] > 0) ai_phi += infos[i].phi[j];
    }
    EXPECT_DOUBLE_EQ(a_and_i / a, 1.0);    // soundness
    EXPECT_DOUBLE_EQ(ai_phi / i_phi, 1.0);  // completeness
    EXPECT_DOUBLE_EQ(infos[i].total(), i_phi);
  }
}

TEST(LinearStep, PerfectAccuracyOnGeneratedData) {
  const Dataset d = generate({1000, 200, 0});
  LinearStepModel m;
  EXPECT_EQ(accuracy(m, d.samples(), d.labels()), 1.0);
}

}  // namespace
