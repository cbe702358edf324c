#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soco/core.hpp"

namespace soco::analysis {

/// Closed interval used to rescale one axis onto [0,1].
struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct Ranges {
  AxisRange x, y;
};

/// Labeled curves sharing metric kind and axis.
using CurveSet = std::map<std::string, EvalCurve>;

/// Symmetric Hausdorff distance between the point sets of two curves, with
/// each axis rescaled to [0,1]. Without explicit ranges the union's range is
/// used; a degenerate axis (zero span) is left unscaled.
double hausdorff(const EvalCurve& p, const EvalCurve& q, const std::optional<Ranges>& ranges = std::nullopt);

/// Union range of every curve's points, per axis.
Ranges union_ranges(std::span<const EvalCurve* const> curves);

struct PairwiseResult {
  double distance = 0.0;
  std::string first, second;
  Ranges ranges;
};

/// Minimum Hausdorff distance over unordered label pairs. All pairs share
/// the range of the whole set.
PairwiseResult min_pairwise_hausdorff(const CurveSet& set);

struct TrialSummary {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::size_t> count;  // curves covering each grid point
  std::size_t n_trials = 0;
};

/// Interpolates every curve onto `x_grid` and reports pointwise mean and
/// sample standard deviation. A grid point outside a curve's x-range gets no
/// contribution from that curve; points with no coverage have mean NaN.
TrialSummary aggregate_trials(std::span<const EvalCurve> curves, std::span<const double> x_grid);

}  // namespace soco::analysis
