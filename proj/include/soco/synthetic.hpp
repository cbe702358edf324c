#pragma once

#include <cstdint>
#include <vector>

#include "soco/core.hpp"

namespace soco::synthetic {

struct SyntheticSpec {
  std::size_t n_samples = 1000;
  std::size_t n_features = 200;
  std::uint64_t seed = 0;
};

/// Standard-normal features labeled by the sign of their sum. Each sample is
/// drawn from its own ("data", sample_id, attempt) stream, so generation is
/// order-independent. Values are rounded to single precision so that f32
/// containers round-trip them exactly; a sample whose rounded sum is exactly
/// zero is redrawn.
Dataset generate(const SyntheticSpec& spec);

/// Hard step on the feature sum: class 1 with probability 1 when the sum is
/// positive, otherwise class 0.
std::vector<double> linear_step_predict(const Sample& x);

class LinearStepModel final : public Model {
 public:
  std::size_t n_classes() const override { return 2; }
  ProbMatrix predict_probs(std::span<const Sample> batch) const override;
};

/// Per-feature predictive information for the transparent linear model: the
/// Shapley magnitude x_i for positive samples and -x_i for negative ones,
/// clipped at zero. The predictive set I is its positive support.
struct OracleInfo {
  std::vector<double> phi;
  std::vector<std::size_t> predictive_set;
  double total() const;
};

OracleInfo oracle_info(const Sample& x, int label);

/// Normalized version of `oracle_info(x, label).phi`.
AttributionMap ground_truth_attribution(const Sample& x, int label);

std::vector<AttributionMap> ground_truth_maps(const Dataset& data);
std::vector<OracleInfo> oracle_infos(const Dataset& data);

}  // namespace soco::synthetic
