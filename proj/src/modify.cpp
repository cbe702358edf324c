#include "soco/modify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "soco/perturb.hpp"

namespace soco::modify {

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::constant: return "constant";
    case Kind::random: return "random";
    case Kind::partial: return "partial";
    case Kind::synth_remove: return "synth_remove";
    case Kind::synth_introduce: return "synth_introduce";
  }
  return "unknown";
}

std::string to_string(Direction dir) { return dir == Direction::remove ? "remove" : "introduce"; }

Kind kind_from_string(const std::string& s) {
  for (Kind k : {Kind::constant, Kind::random, Kind::partial, Kind::synth_remove, Kind::synth_introduce})
    if (to_string(k) == s) return k;
  fail(ErrorKind::config, "unknown modification '" + s + "'");
}

Direction direction_from_string(const std::string& s) {
  if (s == "remove") return Direction::remove;
  if (s == "introduce") return Direction::introduce;
  fail(ErrorKind::config, "unknown direction '" + s + "'");
}

void ModScheme::validate() const {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) fail(ErrorKind::config, "magnitude must be non-negative");
  if (!(fraction >= 0.0 && fraction <= 1.0)) fail(ErrorKind::config, "fraction must lie in [0,1]");
}

ModScheme synth_remove_scheme(std::uint64_t seed) {
  return {Kind::synth_remove, Direction::remove, 0.0, 0.3, seed};
}

ModScheme synth_introduce_scheme(std::uint64_t seed) {
  return {Kind::synth_introduce, Direction::introduce, 1.0, 0.3, seed};
}

namespace {

void require_unit(const AttributionMap& map) {
  if (map.max() > 1.0) fail("attribution map must lie in [0,1]; normalize it first");
}

// First k entries of a uniformly random permutation of `pool`.
std::vector<std::size_t> sample_subset(std::vector<std::size_t> pool, std::size_t k, rng::CounterEngine& engine) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(engine)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

AttributionMap modify_constant(const AttributionMap& map, double delta, Direction dir) {
  require_unit(map);
  if (!(delta >= 0.0)) fail("delta must be non-negative");
  std::vector<double> out(map.values().begin(), map.values().end());
  for (double& v : out) v = dir == Direction::remove ? std::max(v - delta, 0.0) : std::min(v + delta, 1.0);
  return AttributionMap(std::move(out), map.normalized());
}

AttributionMap modify_random(const AttributionMap& map, double lo, double hi, rng::CounterEngine& engine) {
  require_unit(map);
  if (!(lo <= hi)) fail("random shift needs lo <= hi");
  std::vector<double> out(map.values().begin(), map.values().end());
  std::uniform_real_distribution<double> shift(lo, hi);
  for (double& v : out) {
    const double s = lo == hi ? lo : shift(engine);
    v = std::clamp(v + s, 0.0, 1.0);
  }
  return AttributionMap(std::move(out), map.normalized());
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) fail("quantile of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

AttributionMap modify_partial(const AttributionMap& map, Direction dir) {
  require_unit(map);
  const std::size_t n = map.size();
  if (n < 5) fail("map too small for partial scheme");
  const std::vector<std::size_t> rank = perturb::rank_features(map);
  std::vector<double> out(map.values().begin(), map.values().end());
  if (dir == Direction::remove) {
    for (std::size_t r = perturb::ratio_count(0.6, n); r < perturb::ratio_count(0.8, n); ++r) out[rank[r]] = 0.0;
  } else {
    const double q8 = quantile(map.values(), 0.8);
    for (std::size_t r = 0; r < perturb::ratio_count(0.4, n); ++r) out[rank[r]] = q8;
  }
  return AttributionMap(std::move(out), map.normalized());
}

AttributionMap synth_remove(const AttributionMap& map, double fraction, rng::CounterEngine& engine) {
  require_unit(map);
  if (!(fraction >= 0.0 && fraction <= 1.0)) fail("fraction must lie in [0,1]");
  const std::vector<std::size_t> support = map.support();
  const std::size_t k = perturb::ratio_count(fraction, support.size());
  if (k == 0) return map;
  if (k >= support.size()) fail("removal fraction would empty the attribution support");
  std::vector<double> out(map.values().begin(), map.values().end());
  for (std::size_t j : sample_subset(support, k, engine)) out[j] = 0.0;
  return normalize_attribution(out);
}

AttributionMap synth_introduce(const AttributionMap& map, std::span<const std::size_t> predictive_set,
                               double fraction, double magnitude, rng::CounterEngine& engine) {
  require_unit(map);
  if (!(fraction >= 0.0 && fraction <= 1.0)) fail("fraction must lie in [0,1]");
  if (!(magnitude > 0.0)) fail("introduced magnitude must be positive");
  std::vector<bool> predictive(map.size(), false);
  for (std::size_t j : predictive_set) {
    if (j >= map.size()) fail("predictive set index out of range");
    predictive[j] = true;
  }
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < map.size(); ++j)
    if (map[j] == 0.0 && !predictive[j]) candidates.push_back(j);
  const std::size_t k = perturb::ratio_count(fraction, candidates.size());
  if (k == 0) return map;
  std::vector<double> out(map.values().begin(), map.values().end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t j : sample_subset(std::move(candidates), k, engine)) out[j] = magnitude * (1.0 - unit(engine));
  return normalize_attribution(out);
}

AttributionMap apply(const ModScheme& scheme, const AttributionMap& map,
                     std::span<const std::size_t> predictive_set, std::uint64_t sample_id, std::uint64_t trial) {
  scheme.validate();
  rng::CounterEngine engine(scheme.seed, "modify", sample_id, trial);
  const bool rm = scheme.direction == Direction::remove;
  switch (scheme.kind) {
    case Kind::constant: return modify_constant(map, scheme.magnitude, scheme.direction);
    case Kind::random:
      return rm ? modify_random(map, -scheme.magnitude, 0.0, engine) : modify_random(map, 0.0, scheme.magnitude, engine);
    case Kind::partial: return modify_partial(map, scheme.direction);
    case Kind::synth_remove: return synth_remove(map, scheme.fraction, engine);
    case Kind::synth_introduce:
      return synth_introduce(map, predictive_set, scheme.fraction, scheme.magnitude, engine);
  }
  fail("unknown modification");
}

AttributionMap craft_rect(const AttributionMap& map, const Shape& shape, std::size_t rect_h, std::size_t rect_w) {
  if (!shape.grid || map.size() != shape.size()) fail("rect crafting needs a grid map matching the shape");
  if (rect_h == 0 || rect_w == 0) fail("rectangle must be non-empty");
  double total = 0.0, cr = 0.0, cc = 0.0;
  for (std::size_t r = 0; r < shape.height; ++r)
    for (std::size_t c = 0; c < shape.width; ++c)
      for (std::size_t k = 0; k < shape.channels; ++k) {
        const double v = map[shape.index(r, c, k)];
        total += v;
        cr += v * static_cast<double>(r);
        cc += v * static_cast<double>(c);
      }
  if (!(total > 0.0)) fail("undefined centroid");
  cr /= total;
  cc /= total;

  auto span_of = [](double centre, std::size_t len, std::size_t limit) {
    const long start = static_cast<long>(std::floor(centre - static_cast<double>(len) / 2.0 + 0.5));
    const long lo = std::max(0L, start);
    const long hi = std::min(static_cast<long>(limit), start + static_cast<long>(len));
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi)));
  };
  const auto [r0, r1] = span_of(cr, rect_h, shape.height);
  const auto [c0, c1] = span_of(cc, rect_w, shape.width);
  std::vector<double> out(map.size(), 0.0);
  for (std::size_t r = r0; r < r1; ++r)
    for (std::size_t c = c0; c < c1; ++c)
      for (std::size_t k = 0; k < shape.channels; ++k) out[shape.index(r, c, k)] = 1.0;
  return AttributionMap(std::move(out), true);
}

AttributionMap craft_pooling(const AttributionMap& map, const Shape& shape, std::size_t n_regions) {
  if (!shape.grid || map.size() != shape.size()) fail("pooling needs a grid map matching the shape");
  if (n_regions == 0 || n_regions > shape.height) fail("number of regions must lie in [1, height]");
  const std::size_t band = shape.height / n_regions;
  std::vector<double> out(map.size(), 0.0);
  for (std::size_t b = 0; b < n_regions; ++b) {
    const std::size_t r0 = b * band, r1 = b + 1 == n_regions ? shape.height : r0 + band;
    for (std::size_t k = 0; k < shape.channels; ++k) {
      double sum = 0.0;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = 0; c < shape.width; ++c) sum += map[shape.index(r, c, k)];
      const double mean = sum / static_cast<double>((r1 - r0) * shape.width);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = 0; c < shape.width; ++c) out[shape.index(r, c, k)] = mean;
    }
  }
  return AttributionMap(std::move(out), map.normalized());
}

}  // namespace soco::modify
