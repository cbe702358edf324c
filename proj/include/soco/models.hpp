#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "soco/core.hpp"

namespace soco::models {

enum class Activation { relu, identity };

struct Layer {
  std::vector<std::vector<double>> weights;  // out x in
  std::vector<double> bias;                  // out
  Activation activation = Activation::identity;
};

struct MlpWeights {
  std::vector<Layer> layers;
  std::size_t n_classes = 0;

  void validate() const;
};

/// Reads {"n_classes": C, "layers": [{"weights": [[..]], "bias": [..],
/// "activation": "relu"|"identity"}, ...]}.
MlpWeights read_mlp_weights(const std::string& path);
MlpWeights parse_mlp_weights(const std::string& json_text);

/// Forward pass with softmax on the final logits.
std::vector<std::vector<double>> mlp_predict(const MlpWeights& weights, std::span<const Sample> batch);

class MlpModel final : public Model {
 public:
  explicit MlpModel(MlpWeights weights);
  std::size_t n_classes() const override { return weights_.n_classes; }
  ProbMatrix predict_probs(std::span<const Sample> batch) const override;

 private:
  MlpWeights weights_;
};

enum class BridgeFailure { timeout, malformed, id_mismatch, bad_probabilities, crashed, launch };
std::string to_string(BridgeFailure f);

class BridgeError : public Error {
 public:
  BridgeError(BridgeFailure failure, const std::string& what)
      : Error(ErrorKind::model_bridge, what), failure_(failure) {}
  BridgeFailure failure() const noexcept { return failure_; }

 private:
  BridgeFailure failure_;
};

struct ExternalModelSpec {
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{10000};  // longest silence while waiting on the child
  std::size_t batch_limit = 256;
  std::size_t n_classes = 2;

  void validate() const;
};

/// Child process speaking the line-delimited JSON protocol on stdin/stdout.
/// Calls are serialized; responses are matched to requests by id. A crashed
/// child is restarted once per model lifetime.
class ExternalModel final : public Model {
 public:
  explicit ExternalModel(ExternalModelSpec spec);
  ~ExternalModel() override;
  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;

  std::size_t n_classes() const override { return spec_.n_classes; }
  ProbMatrix predict_probs(std::span<const Sample> batch) const override;
  bool concurrent_safe() const override { return false; }

  std::size_t restarts() const { return restarts_; }

 private:
  struct Child;
  void launch() const;
  void shutdown() const;
  ProbMatrix exchange(std::span<const Sample> batch) const;

  ExternalModelSpec spec_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<Child> child_;
  mutable std::uint64_t next_id_ = 1;
  mutable std::size_t restarts_ = 0;
};

}  // namespace soco::models
