#include "soco/core.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <numeric>

#include "soco/parallel.hpp"

namespace soco {

void fail(const std::string& what) { throw Error(ErrorKind::invalid_argument, what); }
void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

std::string to_string(const Shape& shape) {
  if (!shape.grid) return "(" + std::to_string(shape.width) + ")";
  return "(" + std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels) + ")";
}

Dataset::Dataset(Shape shape, std::vector<Sample> samples, std::vector<int> labels, std::size_t n_classes)
    : shape_(shape), samples_(std::move(samples)), labels_(std::move(labels)), n_classes_(n_classes) {
  if (samples_.size() != labels_.size()) fail(ErrorKind::data, "sample/label count mismatch");
  if (n_classes_ < 1) fail(ErrorKind::data, "dataset needs at least one class");
  const std::size_t d = shape_.size();
  feature_means_.assign(d, 0.0);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.shape != shape_ || s.features.size() != d)
      fail(ErrorKind::data, "sample " + std::to_string(s.id) + " has shape " + to_string(s.shape) +
                                ", dataset expects " + to_string(shape_));
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= n_classes_)
      fail(ErrorKind::data, "label out of range for sample " + std::to_string(s.id));
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(s.features[j])) fail(ErrorKind::data, "non-finite feature in sample " + std::to_string(s.id));
      feature_means_[j] += s.features[j];
    }
  }
  if (!samples_.empty())
    for (double& m : feature_means_) m /= static_cast<double>(samples_.size());
}

std::pair<double, double> Dataset::value_range() const {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const Sample& s : samples_)
    for (double v : s.features) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return {lo, hi};
}

void Dataset::validate() const {
  Dataset fresh(shape_, samples_, labels_, n_classes_);
  for (std::size_t j = 0; j < feature_means_.size(); ++j)
    if (std::abs(fresh.feature_means_[j] - feature_means_[j]) > 1e-12 * (1.0 + std::abs(feature_means_[j])))
      fail(ErrorKind::data, "cached feature means are stale");
}

AttributionMap::AttributionMap(std::vector<double> values, bool normalized)
    : values_(std::move(values)), normalized_(normalized) {
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite attribution");
    if (v < 0.0) fail(ErrorKind::data, "negative attribution value");
    if (normalized_ && v > 1.0) fail(ErrorKind::data, "normalized attribution value above 1");
  }
}

double AttributionMap::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double AttributionMap::total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::vector<std::size_t> AttributionMap::support() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] > 0.0) out.push_back(i);
  return out;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(selected_.begin(), selected_.end(), std::uint8_t{1}));
}

bool Mask::subset_of(const Mask& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < selected_.size(); ++i)
    if (selected_[i] && !other.selected_[i]) return false;
  return true;
}

Mask Mask::complement() const {
  Mask out(size());
  for (std::size_t i = 0; i < selected_.size(); ++i) out.selected_[i] = selected_[i] ? 0 : 1;
  return out;
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::soundness: return "soundness";
    case MetricKind::completeness: return "completeness";
    case MetricKind::deletion: return "deletion";
    case MetricKind::insertion: return "insertion";
    case MetricKind::road: return "road";
  }
  return "unknown";
}

std::string to_string(XAxis axis) {
  switch (axis) {
    case XAxis::accuracy_level: return "accuracy_level";
    case XAxis::attribution_threshold: return "attribution_threshold";
    case XAxis::removed_fraction: return "removed_fraction";
  }
  return "unknown";
}

MetricKind metric_kind_from_string(const std::string& s) {
  for (MetricKind k : {MetricKind::soundness, MetricKind::completeness, MetricKind::deletion,
                       MetricKind::insertion, MetricKind::road})
    if (to_string(k) == s) return k;
  fail(ErrorKind::config, "unknown metric '" + s + "'");
}

XAxis x_axis_from_string(const std::string& s) {
  for (XAxis a : {XAxis::accuracy_level, XAxis::attribution_threshold, XAxis::removed_fraction})
    if (to_string(a) == s) return a;
  fail(ErrorKind::data, "unknown x axis '" + s + "'");
}

void EvalCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const CurvePoint& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(ErrorKind::data, "non-finite curve point");
    if (i > 0 && !(points[i - 1].x < p.x)) fail(ErrorKind::data, "curve points not strictly ordered by x");
    if (metric_kind == MetricKind::soundness && (p.y < 0.0 || p.y > 1.0))
      fail(ErrorKind::data, "soundness value outside [0,1]");
  }
}

std::optional<double> interpolate_at(const EvalCurve& curve, double x) {
  const auto& pts = curve.points;
  if (pts.empty() || !(x >= pts.front().x) || !(x <= pts.back().x)) return std::nullopt;
  auto hi = std::lower_bound(pts.begin(), pts.end(), x, [](const CurvePoint& p, double v) { return p.x < v; });
  if (hi->x == x) return hi->y;
  auto lo = std::prev(hi);
  const double t = (x - lo->x) / (hi->x - lo->x);
  return lo->y + t * (hi->y - lo->y);
}

bool ProbMatrix::rows_are_distributions(double tol) const {
  for (std::size_t r = 0; r < rows_; ++r) {
    double sum = 0.0;
    for (double p : row(r)) {
      if (!std::isfinite(p) || p < 0.0) return false;
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

std::size_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k)
    if (probs[k] > probs[best]) best = k;
  return best;
}

namespace {

std::size_t count_correct(const ProbMatrix& probs, std::span<const int> labels, std::size_t offset) {
  std::size_t correct = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r)
    if (argmax(probs.row(r)) == static_cast<std::size_t>(labels[offset + r])) ++correct;
  return correct;
}

}  // namespace

double accuracy(const Model& model, std::span<const Sample> samples, std::span<const int> labels, int workers) {
  if (samples.empty()) fail("empty evaluation set");
  if (samples.size() != labels.size()) fail("sample/label count mismatch");

  const std::size_t n = samples.size();
  std::size_t correct = 0;
  if (workers <= 1 || !model.concurrent_safe() || n < 2) {
    ProbMatrix probs = model.predict_probs(samples);
    if (probs.rows() != n) fail(ErrorKind::model_bridge, "model returned wrong number of rows");
    correct = count_correct(probs, labels, 0);
  } else {
    // Fixed chunking; the integer fold over chunks is order-independent.
    const std::size_t chunks = static_cast<std::size_t>(workers);
    const std::size_t step = (n + chunks - 1) / chunks;
    std::vector<std::size_t> per_chunk(chunks, 0);
    parallel_for(chunks, workers, [&](std::size_t c) {
      const std::size_t lo = std::min(n, c * step), hi = std::min(n, lo + step);
      if (lo == hi) return;
      ProbMatrix probs = model.predict_probs(samples.subspan(lo, hi - lo));
      if (probs.rows() != hi - lo) fail(ErrorKind::model_bridge, "model returned wrong number of rows");
      per_chunk[c] = count_correct(probs, labels, lo);
    });
    correct = std::accumulate(per_chunk.begin(), per_chunk.end(), std::size_t{0});
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

std::string format_real(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

AttributionMap normalize_attribution(std::span<const double> raw) {
  std::vector<double> values(raw.begin(), raw.end());
  double peak = 0.0;
  for (double& v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite attribution");
    v = std::max(v, 0.0);
    peak = std::max(peak, v);
  }
  if (peak > 0.0)
    for (double& v : values) v /= peak;
  return AttributionMap(std::move(values), true);
}

AttributionMap normalize_attribution(const AttributionMap& map) { return normalize_attribution(map.values()); }

}  // namespace soco
