#include "soco/synthetic.hpp"

#include <numeric>
#include <random>

#include "soco/rng.hpp"

namespace soco::synthetic {

namespace {

double feature_sum(const Sample& x) { return std::accumulate(x.features.begin(), x.features.end(), 0.0); }

void require_flat(const Sample& x) {
  if (x.shape.grid) fail("tabular model: grid-shaped input " + to_string(x.shape));
}

}  // namespace

Dataset generate(const SyntheticSpec& spec) {
  if (spec.n_samples < 1 || spec.n_features < 1) fail(ErrorKind::config, "synthetic spec needs n_samples >= 1 and n_features >= 1");

  const Shape shape = Shape::flat(spec.n_features);
  std::vector<Sample> samples(spec.n_samples);
  std::vector<int> labels(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    Sample& s = samples[i];
    s.id = i;
    s.shape = shape;
    s.features.resize(spec.n_features);
    for (std::uint64_t attempt = 0;; ++attempt) {
      rng::CounterEngine engine(spec.seed, "data", i, attempt);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& v : s.features) v = static_cast<double>(static_cast<float>(normal(engine)));
      if (feature_sum(s) != 0.0) break;
    }
    labels[i] = feature_sum(s) > 0.0 ? 1 : 0;
  }
  return Dataset(shape, std::move(samples), std::move(labels), 2);
}

std::vector<double> linear_step_predict(const Sample& x) {
  require_flat(x);
  return feature_sum(x) > 0.0 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
}

ProbMatrix LinearStepModel::predict_probs(std::span<const Sample> batch) const {
  ProbMatrix out(batch.size(), 2);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const std::vector<double> p = linear_step_predict(batch[r]);
    out.row(r)[0] = p[0];
    out.row(r)[1] = p[1];
  }
  return out;
}

double OracleInfo::total() const { return std::accumulate(phi.begin(), phi.end(), 0.0); }

OracleInfo oracle_info(const Sample& x, int label) {
  require_flat(x);
  if (label != 0 && label != 1) fail("inconsistent label: binary task expects 0 or 1");
  const int predicted = feature_sum(x) > 0.0 ? 1 : 0;
  if (predicted != label) fail("inconsistent label: model predicts " + std::to_string(predicted) + " for sample " + std::to_string(x.id));

  OracleInfo info;
  info.phi.resize(x.features.size());
  const double sign = label == 1 ? 1.0 : -1.0;
  for (std::size_t j = 0; j < x.features.size(); ++j) {
    info.phi[j] = std::max(sign * x.features[j], 0.0);
    if (info.phi[j] > 0.0) info.predictive_set.push_back(j);
  }
  return info;
}

AttributionMap ground_truth_attribution(const Sample& x, int label) {
  return normalize_attribution(oracle_info(x, label).phi);
}

std::vector<AttributionMap> ground_truth_maps(const Dataset& data) {
  std::vector<AttributionMap> maps;
  maps.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) maps.push_back(ground_truth_attribution(data.sample(i), data.label(i)));
  return maps;
}

std::vector<OracleInfo> oracle_infos(const Dataset& data) {
  std::vector<OracleInfo> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(oracle_info(data.sample(i), data.label(i)));
  return out;
}

}  // namespace soco::synthetic
