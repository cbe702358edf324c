#include "soco/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace soco::analysis {

namespace {

double scale(double v, const AxisRange& r) {
  const double span = r.hi - r.lo;
  return span > 0.0 ? (v - r.lo) / span : v - r.lo;
}

// Largest distance from a point of `a` to its nearest point of `b`.
double directed(const std::vector<CurvePoint>& a, const std::vector<CurvePoint>& b) {
  double worst = 0.0;
  for (const CurvePoint& p : a) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const CurvePoint& q : b) nearest = std::min(nearest, std::hypot(p.x - q.x, p.y - q.y));
    worst = std::max(worst, nearest);
  }
  return worst;
}

std::vector<CurvePoint> rescaled(const EvalCurve& c, const Ranges& r) {
  std::vector<CurvePoint> out;
  out.reserve(c.points.size());
  for (const CurvePoint& p : c.points) out.push_back({scale(p.x, r.x), scale(p.y, r.y)});
  return out;
}

}  // namespace

Ranges union_ranges(std::span<const EvalCurve* const> curves) {
  Ranges r{{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()},
           {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const EvalCurve* c : curves)
    for (const CurvePoint& p : c->points) {
      r.x.lo = std::min(r.x.lo, p.x);
      r.x.hi = std::max(r.x.hi, p.x);
      r.y.lo = std::min(r.y.lo, p.y);
      r.y.hi = std::max(r.y.hi, p.y);
    }
  return r;
}

double hausdorff(const EvalCurve& p, const EvalCurve& q, const std::optional<Ranges>& ranges) {
  if (p.x_axis != q.x_axis) fail("axis mismatch between curves");
  if (p.points.empty() || q.points.empty()) fail("hausdorff needs non-empty curves");
  const EvalCurve* both[] = {&p, &q};
  const Ranges r = ranges ? *ranges : union_ranges(both);
  const auto a = rescaled(p, r), b = rescaled(q, r);
  return std::max(directed(a, b), directed(b, a));
}

PairwiseResult min_pairwise_hausdorff(const CurveSet& set) {
  if (set.size() < 2) fail("min_pairwise_hausdorff needs at least two curves");
  std::vector<const EvalCurve*> all;
  for (const auto& [label, c] : set) all.push_back(&c);
  PairwiseResult best;
  best.ranges = union_ranges(all);
  best.distance = std::numeric_limits<double>::infinity();
  for (auto i = set.begin(); i != set.end(); ++i)
    for (auto j = std::next(i); j != set.end(); ++j) {
      const double dist = hausdorff(i->second, j->second, best.ranges);
      if (dist < best.distance) {
        best.distance = dist;
        best.first = i->first;
        best.second = j->first;
      }
    }
  return best;
}

TrialSummary aggregate_trials(std::span<const EvalCurve> curves, std::span<const double> x_grid) {
  if (x_grid.empty()) fail("empty x grid");
  if (curves.size() < 2) fail("aggregation needs at least two curves");
  for (const EvalCurve& c : curves)
    if (c.metric_kind != curves[0].metric_kind || c.x_axis != curves[0].x_axis)
      fail("aggregated curves must share metric and axis");

  TrialSummary s;
  s.x.assign(x_grid.begin(), x_grid.end());
  s.n_trials = curves.size();
  const std::size_t g = x_grid.size();
  s.mean.assign(g, 0.0);
  s.std.assign(g, 0.0);
  s.count.assign(g, 0);
  std::vector<double> m2(g, 0.0);
  // Welford update in trial order.
  for (const EvalCurve& c : curves)
    for (std::size_t k = 0; k < g; ++k) {
      const auto y = interpolate_at(c, x_grid[k]);
      if (!y) continue;
      const double n = static_cast<double>(++s.count[k]);
      const double delta = *y - s.mean[k];
      s.mean[k] += delta / n;
      m2[k] += delta * (*y - s.mean[k]);
    }
  for (std::size_t k = 0; k < g; ++k) {
    if (s.count[k] == 0) s.mean[k] = std::numeric_limits<double>::quiet_NaN();
    s.std[k] = s.count[k] > 1 ? std::sqrt(std::max(0.0, m2[k] / static_cast<double>(s.count[k] - 1))) : 0.0;
  }
  return s;
}

}  // namespace soco::analysis
