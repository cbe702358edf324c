#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soco/core.hpp"
#include "soco/perturb.hpp"

namespace soco::metrics {

/// Seed and parallelism shared by every metric run.
struct EvalContext {
  std::uint64_t seed = 0;
  int workers = 1;
};

/// noisy_linear with the default noise level for grids, mean imputation with
/// the same noise level for flat samples.
perturb::Imputer default_imputer(const Dataset& data);

enum class Weighting { attribution_mass, cardinality };
std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

std::vector<double> default_mask_ratios();  // 0.99, 0.98, ..., 0.01
std::vector<double> default_thresholds();   // 0.9, 0.8, ..., 0.1

struct SoundnessConfig {
  std::vector<double> mask_ratios = default_mask_ratios();
  double epsilon = 0.01;
  std::optional<perturb::Imputer> imputer;  // unset: default_imputer(data)
  Weighting weighting = Weighting::attribution_mass;

  void validate() const;
};

struct CompletenessConfig {
  std::vector<double> thresholds = default_thresholds();
  std::optional<perturb::Imputer> imputer;

  void validate() const;
};

enum class Mode { deletion, insertion };
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

std::vector<double> default_fractions();  // 0.0, 0.1, ..., 1.0

struct OrderBasedConfig {
  MetricKind kind = MetricKind::deletion;  // deletion, insertion or road
  Mode mode = Mode::deletion;
  perturb::Order order = perturb::Order::MoRF;
  std::optional<perturb::Imputer> imputer;
  std::vector<double> fractions = default_fractions();

  void validate() const;
};

/// Deletion: removal with the zero imputer.
OrderBasedConfig deletion_config(perturb::Order order);
/// Insertion: restoration onto a zero-imputed canvas.
OrderBasedConfig insertion_config(perturb::Order order);
/// ROAD: removal with the debiased imputer (noisy_linear on grids, mean on
/// flat data).
OrderBasedConfig road_config(perturb::Order order);

/// One expansion step of the soundness loop, kept for audit.
struct SoundnessStep {
  double mask_ratio = 0.0;
  double accuracy = 0.0;
  double gain = 0.0;
  bool flagged = false;    // newly included features joined the false set
  bool emitted = false;    // accuracy reached a new level and a point was emitted
  double mean_soundness = 0.0;
  std::size_t contributing = 0;  // samples with non-empty A_inc
};

struct SoundnessResult {
  EvalCurve curve;
  std::vector<SoundnessStep> steps;
  std::size_t skipped = 0;  // all-zero maps, never contribute
};

/// Per-step view of the included and false sets, for invariant checks.
struct SoundnessStepView {
  std::size_t step = 0;
  std::span<const Mask> included;
  std::span<const Mask> false_set;
};
using SoundnessObserver = std::function<void(const SoundnessStepView&)>;

/// Progressive soundness. For each mask ratio (descending) the top-ranked
/// features form A_inc and the rest are imputed. A step whose accuracy gain
/// over the previous step is below epsilon moves its newly included features
/// into the false set. A point (accuracy, mean q) is emitted whenever the
/// accuracy exceeds every earlier step's, so x is strictly increasing.
SoundnessResult soundness_curve(const Model& model, const Dataset& data, std::span<const AttributionMap> maps,
                                const SoundnessConfig& cfg, const EvalContext& ctx,
                                const SoundnessObserver& observer = {});

/// Soundness interpolated at the requested accuracy levels; levels outside
/// the observed range are absent.
std::vector<std::pair<double, std::optional<double>>> align_soundness(const EvalCurve& curve,
                                                                      std::span<const double> levels);

/// Accuracy drop after removing features with attribution above each
/// threshold. Points are returned in ascending threshold order.
EvalCurve completeness_curve(const Model& model, const Dataset& data, std::span<const AttributionMap> maps,
                             const CompletenessConfig& cfg, const EvalContext& ctx);

/// Accuracy after deleting (or restoring) the first round(f * d) features of
/// the chosen order. Depends on the maps only through their rankings.
EvalCurve order_based_curve(const Model& model, const Dataset& data, std::span<const AttributionMap> maps,
                            const OrderBasedConfig& cfg, const EvalContext& ctx);

/// Trapezoidal area under the curve divided by its x span.
double auc(const EvalCurve& curve);

}  // namespace soco::metrics
