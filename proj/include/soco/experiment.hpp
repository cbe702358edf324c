#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "soco/core.hpp"
#include "soco/metrics.hpp"
#include "soco/modify.hpp"

namespace soco::experiment {

inline constexpr const char* kToolVersion = "0.1.0";

/// A map variant evaluated by every selected metric. Without a scheme the
/// base maps are used as they are.
struct Variant {
  std::string label;
  std::optional<modify::ModScheme> scheme;
};

struct ExperimentConfig {
  nlohmann::json raw;  // canonical form, hashed for the digest
  std::string digest;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::size_t trials = 1;
  int workers = 1;
  std::vector<Variant> variants;
  std::vector<double> soundness_levels;
};

/// Parses and validates a config document. Relative paths resolve against
/// `base_dir`; every referenced file must exist.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Hex SHA-256 of the canonical (sorted-key, compact) JSON text.
std::string config_digest(const nlohmann::json& doc);

/// The synthetic validation experiment: 1000 x 200 Gaussian data, the
/// linear step model, ground-truth maps with Remove and Introduce variants,
/// soundness and completeness over `trials` trials.
nlohmann::json validation_preset(std::uint64_t seed, std::size_t trials, const std::string& output_dir);

struct RunManifest {
  std::string config_digest;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::map<std::string, std::map<std::string, std::string>> outputs;  // metric -> label -> path
  std::map<std::string, double> timings_s;
  std::map<std::string, std::size_t> skipped;

  nlohmann::json to_json() const;
};

/// Runs every selected metric on every variant and trial, writes one curve
/// file per metric and variant (plus a trial summary when trials > 1), and
/// writes manifest.json last.
RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace soco::experiment
