#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soco {

// Failure categories; the CLI maps them onto process exit codes.
enum class ErrorKind { invalid_argument, config, model_bridge, data };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(const std::string& what);  // invalid_argument
[[noreturn]] void fail(ErrorKind kind, const std::string& what);

/// Feature layout shared by every sample of a dataset. Flat samples are
/// stored as 1 x d x 1; grids are row-major with channels last.
struct Shape {
  std::size_t height = 1;
  std::size_t width = 0;
  std::size_t channels = 1;
  bool grid = false;

  static Shape flat(std::size_t d) { return {1, d, 1, false}; }
  static Shape image(std::size_t h, std::size_t w, std::size_t c = 1) { return {h, w, c, true}; }

  std::size_t size() const { return height * width * channels; }
  std::size_t index(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return (row * width + col) * channels + ch;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

struct Sample {
  std::vector<double> features;
  Shape shape;
  std::uint64_t id = 0;
};

class Dataset {
 public:
  Dataset() = default;
  /// Validates shapes, labels and finiteness, then caches per-feature means.
  Dataset(Shape shape, std::vector<Sample> samples, std::vector<int> labels, std::size_t n_classes);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return samples_.size(); }
  std::size_t n_features() const { return shape_.size(); }
  std::size_t n_classes() const { return n_classes_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<int>& labels() const { return labels_; }
  const Sample& sample(std::size_t i) const { return samples_[i]; }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const double> feature_means() const { return feature_means_; }

  /// (min, max) over every feature value in the dataset.
  std::pair<double, double> value_range() const;

  /// Re-derives the cached means and fails if they drifted.
  void validate() const;

 private:
  Shape shape_;
  std::vector<Sample> samples_;
  std::vector<int> labels_;
  std::size_t n_classes_ = 0;
  std::vector<double> feature_means_;
};

/// Non-negative, finite per-feature scores. The positive support is the
/// attributed feature set.
class AttributionMap {
 public:
  AttributionMap() = default;
  explicit AttributionMap(std::vector<double> values, bool normalized = false);

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  bool normalized() const { return normalized_; }
  double max() const;
  double total() const;
  std::vector<std::size_t> support() const;

 private:
  std::vector<double> values_;
  bool normalized_ = false;
};

/// Boolean per-feature selection; `true` means the feature is selected
/// (masked for removal).
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::size_t n, bool value = false) : selected_(n, value ? 1 : 0) {}

  std::size_t size() const { return selected_.size(); }
  bool operator[](std::size_t i) const { return selected_[i] != 0; }
  void set(std::size_t i, bool value = true) { selected_[i] = value ? 1 : 0; }
  std::size_t count() const;
  bool subset_of(const Mask& other) const;
  Mask complement() const;
  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::vector<std::uint8_t> selected_;
};

enum class MetricKind { soundness, completeness, deletion, insertion, road };
enum class XAxis { accuracy_level, attribution_threshold, removed_fraction };

std::string to_string(MetricKind kind);
std::string to_string(XAxis axis);
MetricKind metric_kind_from_string(const std::string& s);
XAxis x_axis_from_string(const std::string& s);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct EvalCurve {
  MetricKind metric_kind = MetricKind::soundness;
  XAxis x_axis = XAxis::accuracy_level;
  std::vector<CurvePoint> points;
  std::string config_digest;
  std::map<std::string, std::string> meta;

  /// Checks strict x ordering and finiteness (plus y in [0,1] for soundness).
  void validate() const;
};

/// Piecewise-linear value of the curve at `x`; empty outside the observed x
/// range (no extrapolation). A one-point curve answers only at its own x.
std::optional<double> interpolate_at(const EvalCurve& curve, double x);

/// Row-per-sample probability matrix.
class ProbMatrix {
 public:
  ProbMatrix() = default;
  ProbMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  /// Checks non-negativity and unit row sums within `tol`.
  bool rows_are_distributions(double tol = 1e-6) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> probs);

/// Opaque classifier. Implementations must be pure: the same batch yields the
/// same output. Models that cannot be called concurrently report it through
/// `concurrent_safe()` and the harness funnels their calls through one thread.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t n_classes() const = 0;
  virtual ProbMatrix predict_probs(std::span<const Sample> batch) const = 0;
  virtual bool concurrent_safe() const { return true; }
};

/// Top-1 accuracy. Samples are predicted in one batch (or in parallel chunks
/// for concurrent-safe models when `workers > 1`).
double accuracy(const Model& model, std::span<const Sample> samples, std::span<const int> labels,
                int workers = 1);

/// Shortest decimal form of a double that reads back exactly.
std::string format_real(double v);

/// Clips negatives to zero, then divides by the maximum when it is positive.
AttributionMap normalize_attribution(std::span<const double> raw);
AttributionMap normalize_attribution(const AttributionMap& map);

}  // namespace soco
