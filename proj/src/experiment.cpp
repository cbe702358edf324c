#include "soco/experiment.hpp"

#include <chrono>
#include <filesystem>

#include "soco/analysis.hpp"
#include "soco/io.hpp"
#include "soco/models.hpp"
#include "soco/rng.hpp"
#include "soco/synthetic.hpp"

namespace soco::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const kMetricNames[] = {"soundness", "completeness", "deletion", "insertion", "road"};

std::string resolve_path(const std::string& p, const std::string& base) {
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base) / path).lexically_normal().string();
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) fail(ErrorKind::config, std::string(what) + " not found: " + path);
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::config, std::string("config field '") + key + "' has the wrong type");
  }
}

std::optional<perturb::Imputer> imputer_of(const json& m) {
  if (!m.contains("imputer")) return std::nullopt;
  const json& ij = m["imputer"];
  perturb::Imputer imp;
  imp.kind = perturb::imputer_kind_from_string(field<std::string>(ij, "kind", "mean"));
  imp.noise_std = field<double>(ij, "noise_std", 0.0);
  return imp;
}

modify::ModScheme scheme_of(const json& j, std::uint64_t seed, const std::string& label) {
  modify::ModScheme s;
  s.kind = modify::kind_from_string(field<std::string>(j, "kind", "constant"));
  if (s.kind == modify::Kind::synth_remove) s = modify::synth_remove_scheme(0);
  if (s.kind == modify::Kind::synth_introduce) s = modify::synth_introduce_scheme(0);
  if (j.contains("direction")) s.direction = modify::direction_from_string(j["direction"].get<std::string>());
  s.magnitude = field<double>(j, "magnitude", s.magnitude);
  s.fraction = field<double>(j, "fraction", s.fraction);
  s.seed = rng::stream_key(seed, "modify/" + label);
  s.validate();
  return s;
}

std::unique_ptr<Model> make_model(const json& mj) {
  const std::string kind = field<std::string>(mj, "kind", "linear");
  if (kind == "linear") return std::make_unique<synthetic::LinearStepModel>();
  if (kind == "mlp") return std::make_unique<models::MlpModel>(models::read_mlp_weights(mj.at("weights")));
  if (kind == "external") {
    models::ExternalModelSpec spec;
    spec.command = mj.at("command").get<std::vector<std::string>>();
    spec.timeout = std::chrono::milliseconds(field<long>(mj, "timeout_ms", 10000));
    spec.batch_limit = field<std::size_t>(mj, "batch_limit", 256);
    spec.n_classes = field<std::size_t>(mj, "n_classes", 2);
    return std::make_unique<models::ExternalModel>(spec);
  }
  fail(ErrorKind::config, "unknown model kind '" + kind + "'");
}

std::string file_label(const std::string& metric, const std::string& label) { return metric + "_" + label; }

}  // namespace

std::string config_digest(const json& doc) { return io::sha256_hex(doc.dump()); }

ExperimentConfig parse_config(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) fail(ErrorKind::config, "config must be a JSON object");
  ExperimentConfig cfg;
  cfg.raw = doc;
  cfg.digest = config_digest(doc);
  cfg.seed = field<std::uint64_t>(doc, "seed", 0);
  cfg.output_dir = resolve_path(field<std::string>(doc, "output_dir", "soco_out"), base_dir);
  cfg.trials = field<std::size_t>(doc, "trials", 1);
  cfg.workers = field<int>(doc, "workers", 1);
  if (cfg.trials < 1) fail(ErrorKind::config, "trials must be at least 1");

  // Resolve relative file references in place so the run sees absolute paths.
  json& raw = cfg.raw;
  if (raw.contains("dataset") && raw["dataset"].contains("file")) {
    const std::string p = resolve_path(raw["dataset"]["file"], base_dir);
    require_file(p, "dataset file");
    raw["dataset"]["file"] = p;
  }
  if (raw.contains("model") && raw["model"].contains("weights")) {
    const std::string p = resolve_path(raw["model"]["weights"], base_dir);
    require_file(p, "weights file");
    raw["model"]["weights"] = p;
  }
  if (raw.contains("maps") && raw["maps"].contains("path")) {
    const std::string p = resolve_path(raw["maps"]["path"], base_dir);
    require_file(p, "maps file");
    raw["maps"]["path"] = p;
  }

  const json metrics = raw.value("metrics", json::object());
  bool any = false;
  for (const char* name : kMetricNames) any = any || metrics.contains(name);
  if (!any) fail(ErrorKind::config, "nothing to run");
  for (const auto& [name, m] : metrics.items()) {
    bool known = false;
    for (const char* n : kMetricNames) known = known || name == n;
    if (!known) fail(ErrorKind::config, "unknown metric '" + name + "'");
  }

  if (raw.contains("variants")) {
    for (const json& v : raw["variants"]) {
      Variant var;
      var.label = v.at("label").get<std::string>();
      if (var.label.empty() || var.label.find_first_of("/ ") != std::string::npos)
        fail(ErrorKind::config, "variant labels must be non-empty without spaces or slashes");
      if (v.contains("scheme")) var.scheme = scheme_of(v["scheme"], cfg.seed, var.label);
      cfg.variants.push_back(std::move(var));
    }
  } else {
    cfg.variants.push_back({"original", std::nullopt});
  }
  if (cfg.variants.empty()) fail(ErrorKind::config, "no map variants");

  if (raw.contains("soundness_levels")) {
    cfg.soundness_levels = raw["soundness_levels"].get<std::vector<double>>();
  } else {
    for (int k = 50; k <= 100; ++k) cfg.soundness_levels.push_back(k / 100.0);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
  return parse_config(doc, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

json validation_preset(std::uint64_t seed, std::size_t trials, const std::string& output_dir) {
  json j;
  j["seed"] = seed;
  j["trials"] = trials;
  j["output_dir"] = output_dir;
  j["dataset"] = {{"synthetic", {{"n_samples", 1000}, {"n_features", 200}}}};
  j["model"] = {{"kind", "linear"}};
  j["maps"] = {{"source", "ground_truth"}};
  j["variants"] = json::array({{{"label", "original"}},
                               {{"label", "remove"}, {"scheme", {{"kind", "synth_remove"}, {"fraction", 0.3}}}},
                               {{"label", "introduce"},
                                {"scheme", {{"kind", "synth_introduce"}, {"fraction", 0.3}, {"magnitude", 1.0}}}}});
  j["metrics"] = {{"soundness", json::object()}, {"completeness", json::object()}};
  return j;
}

json RunManifest::to_json() const {
  json j;
  j["config_digest"] = config_digest;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["outputs"] = outputs;
  j["timings_s"] = timings_s;
  j["skipped_samples"] = skipped;
  return j;
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  const json& raw = cfg.raw;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || !fs::is_directory(cfg.output_dir)) fail(ErrorKind::config, "cannot create output dir " + cfg.output_dir);
  if (cfg.trials > 1) fs::create_directories(fs::path(cfg.output_dir) / "trials", ec);

  // Data.
  const json dj = raw.value("dataset", json{{"synthetic", json::object()}});
  Dataset data;
  if (dj.contains("file")) {
    data = io::read_dataset(dj["file"]);
  } else {
    const json sj = dj.value("synthetic", json::object());
    synthetic::SyntheticSpec spec;
    spec.n_samples = field<std::size_t>(sj, "n_samples", 1000);
    spec.n_features = field<std::size_t>(sj, "n_features", 200);
    spec.seed = cfg.seed;
    data = synthetic::generate(spec);
  }
  const std::unique_ptr<Model> model = make_model(raw.value("model", json::object()));

  // Base maps, plus the oracle predictive sets when they are known.
  const json mj = raw.value("maps", json{{"source", "ground_truth"}});
  const std::string source = field<std::string>(mj, "source", "ground_truth");
  std::vector<AttributionMap> base;
  std::vector<std::vector<std::size_t>> predictive;
  if (source == "ground_truth") {
    base = synthetic::ground_truth_maps(data);
    for (const auto& info : synthetic::oracle_infos(data)) predictive.push_back(info.predictive_set);
  } else if (source == "file") {
    for (const AttributionMap& m : io::read_maps(mj.at("path"), &data).maps) base.push_back(normalize_attribution(m));
  } else {
    fail(ErrorKind::config, "unknown map source '" + source + "'");
  }
  for (const Variant& v : cfg.variants)
    if (v.scheme && v.scheme->kind == modify::Kind::synth_introduce && predictive.empty())
      fail(ErrorKind::config, "synth_introduce needs ground-truth maps (the predictive set must be known)");

  const json metrics = raw.at("metrics");
  RunManifest man;
  man.config_digest = cfg.digest;
  man.seed = cfg.seed;

  for (const char* name : kMetricNames) {
    if (!metrics.contains(name)) continue;
    const json& m = metrics[name];
    const MetricKind kind = metric_kind_from_string(name);
    const auto started = std::chrono::steady_clock::now();

    metrics::SoundnessConfig scfg;
    metrics::CompletenessConfig ccfg;
    metrics::OrderBasedConfig ocfg;
    std::vector<double> grid;
    if (kind == MetricKind::soundness) {
      scfg.mask_ratios = field(m, "mask_ratios", scfg.mask_ratios);
      scfg.epsilon = field(m, "epsilon", scfg.epsilon);
      scfg.imputer = imputer_of(m);
      scfg.weighting = metrics::weighting_from_string(field<std::string>(m, "weighting", "attribution_mass"));
      scfg.validate();
      grid = cfg.soundness_levels;
    } else if (kind == MetricKind::completeness) {
      ccfg.thresholds = field(m, "thresholds", ccfg.thresholds);
      ccfg.imputer = imputer_of(m);
      ccfg.validate();
      grid.assign(ccfg.thresholds.rbegin(), ccfg.thresholds.rend());
    } else {
      const perturb::Order order = perturb::order_from_string(field<std::string>(m, "order", "MoRF"));
      ocfg = kind == MetricKind::road        ? metrics::road_config(order)
             : kind == MetricKind::insertion ? metrics::insertion_config(order)
                                             : metrics::deletion_config(order);
      ocfg.fractions = field(m, "fractions", ocfg.fractions);
      if (auto imp = imputer_of(m)) ocfg.imputer = imp;
      ocfg.validate();
      grid = ocfg.fractions;
    }

    for (const Variant& v : cfg.variants) {
      std::vector<EvalCurve> curves;
      std::size_t skipped = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        std::vector<AttributionMap> maps = base;
        if (v.scheme)
          for (std::size_t i = 0; i < maps.size(); ++i)
            maps[i] = modify::apply(*v.scheme, base[i], predictive.empty() ? std::span<const std::size_t>{}
                                                                           : std::span<const std::size_t>(predictive[i]),
                                    data.sample(i).id, t);
        const metrics::EvalContext ctx{rng::stream_key(cfg.seed, "trial", t), cfg.workers};
        EvalCurve curve;
        if (kind == MetricKind::soundness) {
          auto res = metrics::soundness_curve(*model, data, maps, scfg, ctx);
          skipped += res.skipped;
          curve = std::move(res.curve);
        } else if (kind == MetricKind::completeness) {
          curve = metrics::completeness_curve(*model, data, maps, ccfg, ctx);
        } else {
          curve = metrics::order_based_curve(*model, data, maps, ocfg, ctx);
        }
        curve.config_digest = cfg.digest;
        curve.meta["variant"] = v.label;
        curve.meta["maps"] = source == "ground_truth" ? "ground_truth_normalized" : "file_normalized";
        if (v.scheme) {
          curve.meta["scheme"] = modify::to_string(v.scheme->kind) + "/" + modify::to_string(v.scheme->direction);
          const bool renorm =
              v.scheme->kind == modify::Kind::synth_remove || v.scheme->kind == modify::Kind::synth_introduce;
          curve.meta["renormalized"] = renorm ? "true" : "false";
        }
        curve.meta["trial"] = std::to_string(t);
        if (cfg.trials > 1) {
          const std::string p = (fs::path(cfg.output_dir) / "trials" /
                                 (file_label(name, v.label) + "_" + std::to_string(t) + ".json"))
                                    .string();
          io::write_atomic(p, io::curve_to_json(curve, {cfg.digest, cfg.seed, v.label}));
        }
        curves.push_back(std::move(curve));
      }

      const io::Provenance prov{cfg.digest, cfg.seed, v.label};
      std::string out;
      if (cfg.trials == 1) {
        out = (fs::path(cfg.output_dir) / (file_label(name, v.label) + ".json")).string();
        io::write_atomic(out, io::curve_to_json(curves[0], prov));
        io::write_atomic((fs::path(cfg.output_dir) / (file_label(name, v.label) + ".csv")).string(),
                         io::curve_to_csv(curves[0], prov));
      } else {
        const analysis::TrialSummary s = analysis::aggregate_trials(curves, grid);
        out = (fs::path(cfg.output_dir) / (file_label(name, v.label) + "_summary.json")).string();
        io::write_atomic(out, io::summary_to_json(s, kind, curves[0].x_axis, prov));
        io::write_atomic((fs::path(cfg.output_dir) / (file_label(name, v.label) + "_summary.csv")).string(),
                         io::summary_to_csv(s, kind, curves[0].x_axis, prov));
      }
      man.outputs[name][v.label] = out;
      if (kind == MetricKind::soundness) man.skipped[std::string(name) + "/" + v.label] = skipped;
    }
    man.timings_s[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }

  io::write_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), man.to_json().dump(1) + "\n");
  return man;
}

}  // namespace soco::experiment
