#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "soco/analysis.hpp"
#include "soco/core.hpp"

namespace soco::io {

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

/// Hex SHA-256 of `bytes`.
std::string sha256_hex(const std::string& bytes);

/// Digest of a dataset's content: shape, class count, ids, labels and the
/// features as little-endian f64.
std::string dataset_digest(const Dataset& data);

/// SOCO container. Little-endian:
///   "SOCO" | u16 version | u8 kind (1 dataset, 2 maps) | u8 dtype (1 f32, 2 f64)
///   | u8 rank (2: n,d  4: n,h,w,c) | 3 reserved | u64 dims[rank]
/// dataset: u32 n_classes | n x (u64 id, u32 label) | payload
/// maps:    32-byte dataset digest | u8 normalized | 7 reserved | n x u64 id | payload
/// Payloads are row-major, channel-last. Files whose first non-space byte is
/// '{' are read as JSON instead.
void write_dataset(const Dataset& data, const std::string& path, DType dtype = DType::f32);
Dataset read_dataset(const std::string& path);

struct MapFile {
  std::string dataset_digest;
  std::vector<std::uint64_t> ids;
  std::vector<AttributionMap> maps;
};

void write_maps(const std::vector<AttributionMap>& maps, const Dataset& data, const std::string& path,
                DType dtype = DType::f64);
/// With a dataset, the digest, count and sample ids must all match it.
MapFile read_maps(const std::string& path, const Dataset* data = nullptr);

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

enum class Format { csv, json };
Format format_from_string(const std::string& s);
Format format_for_path(const std::string& path);

/// Extra header fields recorded in every emitted file.
struct Provenance {
  std::string config_digest;
  std::optional<std::uint64_t> seed;
  std::string label;
};

std::string curve_to_json(const EvalCurve& curve, const Provenance& prov);
std::string curve_to_csv(const EvalCurve& curve, const Provenance& prov);
EvalCurve curve_from_json(const std::string& text);
EvalCurve read_curve(const std::string& path);

std::string summary_to_json(const analysis::TrialSummary& s, MetricKind kind, XAxis axis, const Provenance& prov);
std::string summary_to_csv(const analysis::TrialSummary& s, MetricKind kind, XAxis axis, const Provenance& prov);

/// Columns x, y for curves; x, y, std, n for summaries.
void emit_plot_data(const EvalCurve& curve, const std::string& path, Format format, const Provenance& prov = {});
void emit_plot_data(const analysis::TrialSummary& summary, MetricKind kind, XAxis axis, const std::string& path,
                    Format format, const Provenance& prov = {});

}  // namespace soco::io
