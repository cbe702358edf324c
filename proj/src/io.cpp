#include "soco/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>
#include <unistd.h>

#include <json.hpp>

namespace soco::io {

static_assert(std::endian::native == std::endian::little, "SOCO containers assume a little-endian host");

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'O', 'C', 'O'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kKindDataset = 1, kKindMaps = 2;
constexpr std::size_t kHeader = 12;

template <typename T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::data, "truncated payload");
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

bool looks_like_json(const std::string& bytes) {
  for (char c : bytes) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') continue;
    return c == '{';
  }
  return false;
}

void put_header(std::string& out, std::uint8_t kind, DType dtype, const Shape& shape, std::size_t n) {
  out.append(kMagic, 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint8_t>(out, kind);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put<std::uint8_t>(out, shape.grid ? 4 : 2);
  out.append(3, '\0');
  put<std::uint64_t>(out, n);
  if (shape.grid) {
    put<std::uint64_t>(out, shape.height);
    put<std::uint64_t>(out, shape.width);
    put<std::uint64_t>(out, shape.channels);
  } else {
    put<std::uint64_t>(out, shape.width);
  }
}

struct Header {
  std::uint8_t kind;
  DType dtype;
  std::size_t n;
  Shape shape;
};

Header get_header(Reader& r) {
  if (r.raw(4) != std::string(kMagic, 4)) fail(ErrorKind::data, "bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) fail(ErrorKind::data, "unsupported version " + std::to_string(version));
  Header h;
  h.kind = r.get<std::uint8_t>();
  const auto dtype = r.get<std::uint8_t>();
  if (dtype != 1 && dtype != 2) fail(ErrorKind::data, "unknown dtype " + std::to_string(dtype));
  h.dtype = static_cast<DType>(dtype);
  const auto rank = r.get<std::uint8_t>();
  r.raw(3);
  if (rank != 2 && rank != 4) fail(ErrorKind::data, "unsupported rank " + std::to_string(rank));
  h.n = r.get<std::uint64_t>();
  if (rank == 4) {
    const auto hh = r.get<std::uint64_t>(), ww = r.get<std::uint64_t>(), cc = r.get<std::uint64_t>();
    h.shape = Shape::image(hh, ww, cc);
  } else {
    h.shape = Shape::flat(r.get<std::uint64_t>());
  }
  return h;
}

void put_values(std::string& out, std::span<const double> v, DType dtype) {
  for (double x : v) {
    if (dtype == DType::f32) put<float>(out, static_cast<float>(x));
    else put<double>(out, x);
  }
}

std::vector<double> get_values(Reader& r, std::size_t n, DType dtype) {
  r.need(n * (dtype == DType::f32 ? 4 : 8));
  std::vector<double> v(n);
  for (double& x : v) x = dtype == DType::f32 ? static_cast<double>(r.get<float>()) : r.get<double>();
  return v;
}

std::string hex_to_bytes(const std::string& hex) {
  if (hex.size() != 64) fail(ErrorKind::data, "dataset digest must be 64 hex characters");
  std::string out;
  for (std::size_t i = 0; i < 64; i += 2) out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

std::string bytes_to_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 15]);
  }
  return out;
}

Shape shape_from_json(const json& j) {
  const auto dims = j.at("shape").get<std::vector<std::size_t>>();
  if (dims.size() == 1) return Shape::flat(dims[0]);
  if (dims.size() == 3) return Shape::image(dims[0], dims[1], dims[2]);
  fail(ErrorKind::data, "shape must be [d] or [h, w, c]");
}

Dataset dataset_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const Shape shape = shape_from_json(j);
    std::vector<Sample> samples;
    std::vector<int> labels;
    for (const json& s : j.at("samples")) {
      samples.push_back({s.at("features").get<std::vector<double>>(), shape, s.at("id").get<std::uint64_t>()});
      labels.push_back(s.at("label").get<int>());
    }
    return Dataset(shape, std::move(samples), std::move(labels), j.at("n_classes").get<std::size_t>());
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("bad dataset json: ") + e.what());
  }
}

MapFile maps_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MapFile mf;
    mf.dataset_digest = j.value("dataset_digest", "");
    const bool normalized = j.value("normalized", false);
    for (const json& m : j.at("maps")) {
      mf.ids.push_back(m.at("id").get<std::uint64_t>());
      mf.maps.emplace_back(m.at("values").get<std::vector<double>>(), normalized);
    }
    return mf;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("bad maps json: ") + e.what());
  }
}

std::string header_comment(MetricKind kind, XAxis axis, const Provenance& prov) {
  std::string s = "# metric_kind=" + to_string(kind) + " x_axis=" + to_string(axis);
  if (!prov.label.empty()) s += " label=" + prov.label;
  s += " config_digest=" + (prov.config_digest.empty() ? std::string("none") : prov.config_digest);
  if (prov.seed) s += " seed=" + std::to_string(*prov.seed);
  return s + "\n";
}

json provenance_json(const Provenance& prov) {
  json j;
  j["config_digest"] = prov.config_digest;
  if (prov.seed) j["seed"] = *prov.seed;
  if (!prov.label.empty()) j["label"] = prov.label;
  return j;
}

// Non-finite values are written as null in JSON.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) fail("sha256 failed");
  return bytes_to_hex(std::string(reinterpret_cast<const char*>(md), len));
}

std::string dataset_digest(const Dataset& data) {
  std::string buf;
  const Shape& s = data.shape();
  put<std::uint64_t>(buf, s.grid ? 1 : 0);
  put<std::uint64_t>(buf, s.height);
  put<std::uint64_t>(buf, s.width);
  put<std::uint64_t>(buf, s.channels);
  put<std::uint64_t>(buf, data.n_classes());
  put<std::uint64_t>(buf, data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    put<std::uint64_t>(buf, data.sample(i).id);
    put<std::int64_t>(buf, data.label(i));
    for (double v : data.sample(i).features) put<double>(buf, v);
  }
  return sha256_hex(buf);
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::config, "cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::config, "cannot write " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::config, "cannot move output into place: " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_dataset(const Dataset& data, const std::string& path, DType dtype) {
  std::string out;
  put_header(out, kKindDataset, dtype, data.shape(), data.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.n_classes()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    put<std::uint64_t>(out, data.sample(i).id);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(data.label(i)));
  }
  for (const Sample& s : data.samples()) put_values(out, s.features, dtype);
  write_atomic(path, out);
}

Dataset read_dataset(const std::string& path) {
  const std::string bytes = read_file(path);
  if (looks_like_json(bytes)) return dataset_from_json(bytes);
  Reader r(bytes);
  const Header h = get_header(r);
  if (h.kind != kKindDataset) fail(ErrorKind::data, "container does not hold a dataset");
  const std::size_t n_classes = r.get<std::uint32_t>();
  r.need(h.n * 12);
  std::vector<Sample> samples(h.n);
  std::vector<int> labels(h.n);
  for (std::size_t i = 0; i < h.n; ++i) {
    samples[i].id = r.get<std::uint64_t>();
    samples[i].shape = h.shape;
    labels[i] = static_cast<int>(r.get<std::uint32_t>());
  }
  for (Sample& s : samples) s.features = get_values(r, h.shape.size(), h.dtype);
  if (!r.done()) fail(ErrorKind::data, "trailing bytes after payload");
  return Dataset(h.shape, std::move(samples), std::move(labels), n_classes);
}

void write_maps(const std::vector<AttributionMap>& maps, const Dataset& data, const std::string& path, DType dtype) {
  if (maps.size() != data.size()) fail(ErrorKind::data, "one map per sample required");
  bool normalized = true;
  for (const AttributionMap& m : maps) {
    if (m.size() != data.n_features()) fail(ErrorKind::data, "map size does not match dataset features");
    normalized = normalized && m.normalized();
  }
  std::string out;
  put_header(out, kKindMaps, dtype, data.shape(), maps.size());
  out += hex_to_bytes(dataset_digest(data));
  put<std::uint8_t>(out, normalized ? 1 : 0);
  out.append(7, '\0');
  for (const Sample& s : data.samples()) put<std::uint64_t>(out, s.id);
  for (const AttributionMap& m : maps) put_values(out, m.values(), dtype);
  write_atomic(path, out);
}

MapFile read_maps(const std::string& path, const Dataset* data) {
  const std::string bytes = read_file(path);
  MapFile mf;
  if (looks_like_json(bytes)) {
    mf = maps_from_json(bytes);
  } else {
    Reader r(bytes);
    const Header h = get_header(r);
    if (h.kind != kKindMaps) fail(ErrorKind::data, "container does not hold attribution maps");
    mf.dataset_digest = bytes_to_hex(r.raw(32));
    const bool normalized = r.get<std::uint8_t>() != 0;
    r.raw(7);
    r.need(h.n * 8);
    for (std::size_t i = 0; i < h.n; ++i) mf.ids.push_back(r.get<std::uint64_t>());
    for (std::size_t i = 0; i < h.n; ++i) mf.maps.emplace_back(get_values(r, h.shape.size(), h.dtype), normalized);
    if (!r.done()) fail(ErrorKind::data, "trailing bytes after payload");
  }
  if (data) {
    if (!mf.dataset_digest.empty() && mf.dataset_digest != dataset_digest(*data))
      fail(ErrorKind::data, "maps were written for a different dataset");
    if (mf.maps.size() != data->size())
      fail(ErrorKind::data, "map count " + std::to_string(mf.maps.size()) + " does not match dataset size " +
                                std::to_string(data->size()));
    for (std::size_t i = 0; i < mf.maps.size(); ++i) {
      if (mf.ids[i] != data->sample(i).id) fail(ErrorKind::data, "map ids are not aligned with dataset samples");
      if (mf.maps[i].size() != data->n_features()) fail(ErrorKind::data, "map size does not match dataset features");
    }
  }
  return mf;
}

Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  fail(ErrorKind::config, "unknown format '" + s + "'");
}

Format format_for_path(const std::string& path) {
  return std::filesystem::path(path).extension() == ".json" ? Format::json : Format::csv;
}

std::string curve_to_json(const EvalCurve& curve, const Provenance& prov) {
  json j = provenance_json(prov);
  if (j["config_digest"].get<std::string>().empty()) j["config_digest"] = curve.config_digest;
  j["metric_kind"] = to_string(curve.metric_kind);
  j["x_axis"] = to_string(curve.x_axis);
  j["meta"] = curve.meta;
  json pts = json::array();
  for (const CurvePoint& p : curve.points) pts.push_back({{"x", p.x}, {"y", p.y}});
  j["points"] = std::move(pts);
  return j.dump(1) + "\n";
}

std::string curve_to_csv(const EvalCurve& curve, const Provenance& prov) {
  Provenance p = prov;
  if (p.config_digest.empty()) p.config_digest = curve.config_digest;
  std::string s = header_comment(curve.metric_kind, curve.x_axis, p);
  s += "x,y\n";
  for (const CurvePoint& pt : curve.points) s += format_real(pt.x) + "," + format_real(pt.y) + "\n";
  return s;
}

EvalCurve curve_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalCurve c;
    c.metric_kind = metric_kind_from_string(j.at("metric_kind").get<std::string>());
    c.x_axis = x_axis_from_string(j.at("x_axis").get<std::string>());
    c.config_digest = j.value("config_digest", "");
    if (j.contains("meta")) c.meta = j["meta"].get<std::map<std::string, std::string>>();
    for (const json& p : j.at("points")) c.points.push_back({p.at("x").get<double>(), p.at("y").get<double>()});
    c.validate();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("bad curve json: ") + e.what());
  }
}

EvalCurve read_curve(const std::string& path) {
  const std::string text = read_file(path);
  if (looks_like_json(text)) return curve_from_json(text);
  // CSV written by curve_to_csv.
  EvalCurve c;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream fields(line.substr(1));
      std::string kv;
      while (fields >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "metric_kind") c.metric_kind = metric_kind_from_string(v);
        else if (k == "x_axis") c.x_axis = x_axis_from_string(v);
        else if (k == "config_digest" && v != "none") c.config_digest = v;
      }
      have_header = true;
      continue;
    }
    if (line.rfind("x,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorKind::data, "bad curve csv row: " + line);
    const auto comma2 = line.find(',', comma + 1);
    c.points.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1, comma2 - comma - 1))});
  }
  if (!have_header) fail(ErrorKind::data, "curve csv lacks its header comment");
  c.validate();
  return c;
}

std::string summary_to_json(const analysis::TrialSummary& s, MetricKind kind, XAxis axis, const Provenance& prov) {
  json j = provenance_json(prov);
  j["metric_kind"] = to_string(kind);
  j["x_axis"] = to_string(axis);
  j["n_trials"] = s.n_trials;
  json pts = json::array();
  for (std::size_t k = 0; k < s.x.size(); ++k)
    pts.push_back({{"x", s.x[k]}, {"y", number(s.mean[k])}, {"std", number(s.std[k])}, {"n", s.count[k]}});
  j["points"] = std::move(pts);
  return j.dump(1) + "\n";
}

std::string summary_to_csv(const analysis::TrialSummary& s, MetricKind kind, XAxis axis, const Provenance& prov) {
  std::string out = header_comment(kind, axis, prov);
  out += "x,y,std,n\n";
  for (std::size_t k = 0; k < s.x.size(); ++k)
    out += format_real(s.x[k]) + "," + format_real(s.mean[k]) + "," + format_real(s.std[k]) + "," +
           std::to_string(s.count[k]) + "\n";
  return out;
}

void emit_plot_data(const EvalCurve& curve, const std::string& path, Format format, const Provenance& prov) {
  write_atomic(path, format == Format::json ? curve_to_json(curve, prov) : curve_to_csv(curve, prov));
}

void emit_plot_data(const analysis::TrialSummary& summary, MetricKind kind, XAxis axis, const std::string& path,
                    Format format, const Provenance& prov) {
  write_atomic(path, format == Format::json ? summary_to_json(summary, kind, axis, prov)
                                            : summary_to_csv(summary, kind, axis, prov));
}

}  // namespace soco::io
