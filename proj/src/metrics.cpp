#include "soco/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "soco/kernels.hpp"
#include "soco/parallel.hpp"

namespace soco::metrics {

using perturb::Imputer;
using perturb::ImputerKind;

perturb::Imputer default_imputer(const Dataset& data) {
  const double sigma = perturb::default_noise_std(data);
  return data.shape().grid ? Imputer{ImputerKind::noisy_linear, sigma} : Imputer{ImputerKind::mean, sigma};
}

std::string to_string(Weighting w) { return w == Weighting::attribution_mass ? "attribution_mass" : "cardinality"; }

Weighting weighting_from_string(const std::string& s) {
  if (s == "attribution_mass") return Weighting::attribution_mass;
  if (s == "cardinality") return Weighting::cardinality;
  fail(ErrorKind::config, "unknown soundness weighting '" + s + "'");
}

std::string to_string(Mode mode) { return mode == Mode::deletion ? "deletion" : "insertion"; }

Mode mode_from_string(const std::string& s) {
  if (s == "deletion") return Mode::deletion;
  if (s == "insertion") return Mode::insertion;
  fail(ErrorKind::config, "unknown mode '" + s + "'");
}

std::vector<double> default_mask_ratios() {
  std::vector<double> out;
  for (int k = 99; k >= 1; --k) out.push_back(k / 100.0);
  return out;
}

std::vector<double> default_thresholds() {
  std::vector<double> out;
  for (int k = 9; k >= 1; --k) out.push_back(k / 10.0);
  return out;
}

std::vector<double> default_fractions() {
  std::vector<double> out;
  for (int k = 0; k <= 10; ++k) out.push_back(k / 10.0);
  return out;
}

namespace {

void check_imputer(const std::optional<Imputer>& imp) {
  if (imp && !(imp->noise_std >= 0.0 && std::isfinite(imp->noise_std)))
    fail(ErrorKind::config, "imputer noise_std must be finite and non-negative");
}

void check_descending_open_unit(const std::vector<double>& v, const char* what) {
  if (v.empty()) fail(ErrorKind::config, std::string(what) + " must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0 && v[i] < 1.0)) fail(ErrorKind::config, std::string(what) + " must lie in (0,1)");
    if (i > 0 && !(v[i] < v[i - 1])) fail(ErrorKind::config, std::string(what) + " must be strictly descending");
  }
}

Imputer resolve(const std::optional<Imputer>& imp, const Dataset& data) {
  Imputer out = imp ? *imp : default_imputer(data);
  if (out.kind == ImputerKind::noisy_linear && !data.shape().grid)
    fail(ErrorKind::config, "noisy_linear imputation requires grid-shaped samples");
  return out;
}

void check_inputs(const Model& model, const Dataset& data, std::span<const AttributionMap> maps) {
  if (data.size() == 0) fail("empty evaluation set");
  if (maps.size() != data.size()) fail(ErrorKind::data, "one attribution map per sample required");
  for (const AttributionMap& m : maps) {
    if (m.size() != data.n_features()) fail(ErrorKind::data, "attribution map size does not match features");
    if (m.max() > 1.0) fail(ErrorKind::data, "attribution map must lie in [0,1]; normalize it first");
  }
  if (model.n_classes() != data.n_classes())
    fail(ErrorKind::model_bridge, "model class count does not match the dataset");
}

double clean_accuracy(const Model& model, const Dataset& data, int workers) {
  return accuracy(model, data.samples(), data.labels(), workers);
}

void require_above_chance(double s0, const Dataset& data) {
  if (!(s0 > 1.0 / static_cast<double>(data.n_classes())))
    fail("model accuracy on clean data (" + std::to_string(s0) + ") is not above chance");
}

double perturbed_accuracy(const Model& model, const Dataset& data, std::span<const Mask> masks, const Imputer& imp,
                          const kernels::NoiseStream& noise, int workers) {
  const std::vector<Sample> batch = kernels::perturb_batch(data, masks, imp, noise, workers);
  return accuracy(model, batch, data.labels(), workers);
}

}  // namespace

void SoundnessConfig::validate() const {
  check_descending_open_unit(mask_ratios, "mask ratios");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::config, "epsilon must be positive");
  check_imputer(imputer);
}

void CompletenessConfig::validate() const {
  check_descending_open_unit(thresholds, "thresholds");
  check_imputer(imputer);
}

void OrderBasedConfig::validate() const {
  if (kind != MetricKind::deletion && kind != MetricKind::insertion && kind != MetricKind::road)
    fail(ErrorKind::config, "order-based metric must be deletion, insertion or road");
  if (fractions.empty()) fail(ErrorKind::config, "fractions must not be empty");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] <= 1.0)) fail(ErrorKind::config, "fractions must lie in [0,1]");
    if (i > 0 && !(fractions[i] > fractions[i - 1])) fail(ErrorKind::config, "fractions must be strictly ascending");
  }
  check_imputer(imputer);
}

OrderBasedConfig deletion_config(perturb::Order order) {
  OrderBasedConfig cfg;
  cfg.kind = MetricKind::deletion;
  cfg.mode = Mode::deletion;
  cfg.order = order;
  cfg.imputer = Imputer{ImputerKind::zero, 0.0};
  return cfg;
}

OrderBasedConfig insertion_config(perturb::Order order) {
  OrderBasedConfig cfg = deletion_config(order);
  cfg.kind = MetricKind::insertion;
  cfg.mode = Mode::insertion;
  return cfg;
}

OrderBasedConfig road_config(perturb::Order order) {
  OrderBasedConfig cfg;
  cfg.kind = MetricKind::road;
  cfg.mode = Mode::deletion;
  cfg.order = order;
  cfg.imputer.reset();
  return cfg;
}

SoundnessResult soundness_curve(const Model& model, const Dataset& data, std::span<const AttributionMap> maps,
                                const SoundnessConfig& cfg, const EvalContext& ctx,
                                const SoundnessObserver& observer) {
  cfg.validate();
  check_inputs(model, data, maps);
  const Imputer imp = resolve(cfg.imputer, data);
  require_above_chance(clean_accuracy(model, data, ctx.workers), data);

  const std::size_t n = data.size(), d = data.n_features();
  const auto ranks = kernels::rank_all(maps, ctx.workers);

  SoundnessResult result;
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i)
    if (maps[i].max() <= 0.0) {
      active[i] = false;
      ++result.skipped;
    }
  if (result.skipped > 0)
    std::cerr << "warning: " << result.skipped << " all-zero attribution map(s) skipped in soundness\n";

  auto weight = [&](std::size_t i, std::size_t j) {
    return cfg.weighting == Weighting::attribution_mass ? maps[i][j] : 1.0;
  };

  std::vector<Mask> included(n, Mask(d)), false_set(n, Mask(d));
  std::vector<double> inc_mass(n, 0.0), false_mass(n, 0.0);
  std::vector<double> delta_mass(n, 0.0);
  std::vector<Mask> delta(n, Mask(d));
  double s_prev = 0.0;
  double best = -std::numeric_limits<double>::infinity();

  EvalCurve& curve = result.curve;
  curve.metric_kind = MetricKind::soundness;
  curve.x_axis = XAxis::accuracy_level;

  for (std::size_t step = 0; step < cfg.mask_ratios.size(); ++step) {
    const double m = cfg.mask_ratios[step];
    const std::vector<Mask> masks = kernels::ratio_masks(ranks, m, ctx.workers);
    const double s = perturbed_accuracy(model, data, masks, imp, {ctx.seed, "soundness", step}, ctx.workers);

    // A_inc is the unmasked part of the positive support; delta is what this
    // step added to it.
    parallel_for(n, ctx.workers, [&](std::size_t i) {
      Mask next(d);
      double mass = 0.0, added = 0.0;
      Mask added_set(d);
      for (std::size_t j = 0; j < d; ++j) {
        if (masks[i][j] || maps[i][j] <= 0.0) continue;
        next.set(j);
        mass += weight(i, j);
        if (!included[i][j]) {
          added_set.set(j);
          added += weight(i, j);
        }
      }
      included[i] = std::move(next);
      inc_mass[i] = mass;
      delta[i] = std::move(added_set);
      delta_mass[i] = added;
    });

    SoundnessStep rec;
    rec.mask_ratio = m;
    rec.accuracy = s;
    rec.gain = s - s_prev;
    rec.flagged = rec.gain < cfg.epsilon;
    if (rec.flagged)
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
          if (delta[i][j]) false_set[i].set(j);
        false_mass[i] += delta_mass[i];
      }

    // Ordered fold over sample index.
    double q_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || !(inc_mass[i] > 0.0)) continue;
      const double q = (inc_mass[i] - false_mass[i]) / inc_mass[i];
      q_sum += std::clamp(q, 0.0, 1.0);
      ++rec.contributing;
    }
    rec.mean_soundness = rec.contributing > 0 ? q_sum / static_cast<double>(rec.contributing)
                                              : std::numeric_limits<double>::quiet_NaN();
    if (s > best && rec.contributing > 0) {
      curve.points.push_back({s, rec.mean_soundness});
      rec.emitted = true;
    }
    best = std::max(best, s);
    s_prev = s;
    result.steps.push_back(rec);
    if (observer) observer({step, included, false_set});
  }

  curve.meta["epsilon"] = format_real(cfg.epsilon);
  curve.meta["imputer"] = perturb::to_string(imp.kind);
  curve.meta["noise_std"] = format_real(imp.noise_std);
  curve.meta["weighting"] = to_string(cfg.weighting);
  curve.meta["skipped_samples"] = std::to_string(result.skipped);
  curve.validate();
  return result;
}

std::vector<std::pair<double, std::optional<double>>> align_soundness(const EvalCurve& curve,
                                                                      std::span<const double> levels) {
  if (curve.points.size() < 2) fail("alignment needs a curve with at least two points");
  std::vector<std::pair<double, std::optional<double>>> out;
  out.reserve(levels.size());
  for (double v : levels) out.emplace_back(v, interpolate_at(curve, v));
  return out;
}

EvalCurve completeness_curve(const Model& model, const Dataset& data, std::span<const AttributionMap> maps,
                             const CompletenessConfig& cfg, const EvalContext& ctx) {
  cfg.validate();
  check_inputs(model, data, maps);
  const Imputer imp = resolve(cfg.imputer, data);
  const double s0 = clean_accuracy(model, data, ctx.workers);
  require_above_chance(s0, data);

  EvalCurve curve;
  curve.metric_kind = MetricKind::completeness;
  curve.x_axis = XAxis::attribution_threshold;
  for (std::size_t step = 0; step < cfg.thresholds.size(); ++step) {
    const double t = cfg.thresholds[step];
    const std::vector<Mask> masks = kernels::threshold_masks(maps, t, ctx.workers);
    const double st = perturbed_accuracy(model, data, masks, imp, {ctx.seed, "completeness", step}, ctx.workers);
    curve.points.push_back({t, s0 - st});
  }
  std::reverse(curve.points.begin(), curve.points.end());
  curve.meta["clean_accuracy"] = format_real(s0);
  curve.meta["imputer"] = perturb::to_string(imp.kind);
  curve.meta["noise_std"] = format_real(imp.noise_std);
  curve.validate();
  return curve;
}

EvalCurve order_based_curve(const Model& model, const Dataset& data, std::span<const AttributionMap> maps,
                            const OrderBasedConfig& cfg, const EvalContext& ctx) {
  cfg.validate();
  check_inputs(model, data, maps);
  const Imputer imp = resolve(cfg.imputer, data);

  const std::size_t n = data.size(), d = data.n_features();
  std::vector<std::vector<std::size_t>> order = kernels::rank_all(maps, ctx.workers);
  if (cfg.order == perturb::Order::MoRF)
    for (auto& r : order) std::reverse(r.begin(), r.end());

  const std::string stream = to_string(cfg.kind) + "/" + perturb::to_string(cfg.order);
  EvalCurve curve;
  curve.metric_kind = cfg.kind;
  curve.x_axis = XAxis::removed_fraction;
  for (std::size_t step = 0; step < cfg.fractions.size(); ++step) {
    const double f = cfg.fractions[step];
    const std::size_t k = std::min(perturb::ratio_count(f, d), d);
    std::vector<Mask> masks(n);
    parallel_for(n, ctx.workers, [&](std::size_t i) {
      // Deletion masks the first k features; insertion masks everything else.
      Mask mask(d, cfg.mode == Mode::insertion);
      for (std::size_t r = 0; r < k; ++r) mask.set(order[i][r], cfg.mode == Mode::deletion);
      masks[i] = std::move(mask);
    });
    const double s = perturbed_accuracy(model, data, masks, imp, {ctx.seed, stream, step}, ctx.workers);
    curve.points.push_back({f, s});
  }
  curve.meta["mode"] = to_string(cfg.mode);
  curve.meta["order"] = perturb::to_string(cfg.order);
  curve.meta["imputer"] = perturb::to_string(imp.kind);
  curve.meta["noise_std"] = format_real(imp.noise_std);
  curve.validate();
  return curve;
}

double auc(const EvalCurve& curve) {
  if (curve.points.size() < 2) fail("auc needs at least two points");
  std::vector<CurvePoint> pts = curve.points;
  std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].x == pts[i - 1].x) fail("duplicate x values in curve");
    area += 0.5 * (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y);
  }
  return area / (pts.back().x - pts.front().x);
}

}  // namespace soco::metrics
