// soco: command-line front end for the soundness/completeness toolkit.

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "soco/analysis.hpp"
#include "soco/experiment.hpp"
#include "soco/io.hpp"
#include "soco/metrics.hpp"
#include "soco/models.hpp"
#include "soco/modify.hpp"
#include "soco/synthetic.hpp"

namespace {

using namespace soco;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::config: return 2;
    case ErrorKind::model_bridge: return 3;
    case ErrorKind::data: return 4;
  }
  return 1;
}

struct ModelOpts {
  std::string mlp;
  std::string external;
  std::size_t n_classes = 2;
  long timeout_ms = 10000;
  std::size_t batch_limit = 256;

  void add(CLI::App* app) {
    app->add_option("--mlp", mlp, "MLP weights (JSON)");
    app->add_option("--external", external, "model server command line");
    app->add_option("--n-classes", n_classes, "class count of the external model");
    app->add_option("--timeout-ms", timeout_ms, "external model silence limit");
    app->add_option("--batch-limit", batch_limit, "samples per external request");
  }

  std::unique_ptr<Model> make() const {
    if (!mlp.empty() && !external.empty()) fail(ErrorKind::config, "choose one of --mlp and --external");
    if (!mlp.empty()) return std::make_unique<models::MlpModel>(models::read_mlp_weights(mlp));
    if (!external.empty()) {
      models::ExternalModelSpec spec;
      std::istringstream words(external);
      for (std::string w; words >> w;) spec.command.push_back(w);
      spec.n_classes = n_classes;
      spec.timeout = std::chrono::milliseconds(timeout_ms);
      spec.batch_limit = batch_limit;
      return std::make_unique<models::ExternalModel>(spec);
    }
    return std::make_unique<synthetic::LinearStepModel>();
  }
};

std::vector<AttributionMap> load_maps(const std::string& path, const Dataset& data) {
  if (path.empty()) return synthetic::ground_truth_maps(data);
  std::vector<AttributionMap> out;
  for (const AttributionMap& m : io::read_maps(path, &data).maps) out.push_back(normalize_attribution(m));
  return out;
}

void write_curve(const EvalCurve& curve, const std::string& out, std::uint64_t seed) {
  const io::Provenance prov{curve.config_digest, seed, ""};
  if (out.empty() || out == "-") {
    std::cout << io::curve_to_csv(curve, prov);
    return;
  }
  io::emit_plot_data(curve, out, io::format_for_path(out), prov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soundness and completeness evaluation of feature attributions"};
  app.require_subcommand(1);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "generate the Gaussian validation dataset");
  synthetic::SyntheticSpec spec;
  std::string gen_out, gen_dtype = "f32";
  gen->add_option("--n", spec.n_samples, "samples")->check(CLI::PositiveNumber);
  gen->add_option("-d,--features", spec.n_features, "features per sample")->check(CLI::PositiveNumber);
  gen->add_option("--seed", spec.seed, "master seed");
  gen->add_option("--dtype", gen_dtype, "payload precision")->check(CLI::IsMember({"f32", "f64"}));
  gen->add_option("-o,--out", gen_out, "output dataset")->required();

  // attribute
  auto* attr = app.add_subcommand("attribute", "write ground-truth maps for a synthetic dataset");
  std::string attr_data, attr_out;
  attr->add_option("--data", attr_data)->required();
  attr->add_option("-o,--out", attr_out)->required();

  // modify
  auto* mod = app.add_subcommand("modify", "apply a modification scheme to attribution maps");
  std::string mod_data, mod_maps, mod_out, mod_kind = "constant", mod_dir = "remove";
  double mod_mag = -1.0, mod_frac = -1.0;
  std::uint64_t mod_seed = 0, mod_trial = 0;
  mod->add_option("--data", mod_data)->required();
  mod->add_option("--maps", mod_maps, "input maps (default: ground truth)");
  mod->add_option("--scheme", mod_kind)->check(
      CLI::IsMember({"constant", "random", "partial", "synth_remove", "synth_introduce"}));
  mod->add_option("--direction", mod_dir)->check(CLI::IsMember({"remove", "introduce"}));
  mod->add_option("--magnitude", mod_mag);
  mod->add_option("--fraction", mod_frac);
  mod->add_option("--seed", mod_seed);
  mod->add_option("--trial", mod_trial);
  mod->add_option("-o,--out", mod_out)->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate one metric");
  std::string ev_metric, ev_data, ev_maps, ev_out, ev_order = "MoRF", ev_imputer, ev_weighting = "attribution_mass";
  double ev_eps = 0.01, ev_noise = -1.0;
  std::uint64_t ev_seed = 0;
  int ev_workers = 1;
  ModelOpts ev_model;
  ev->add_option("--metric", ev_metric)
      ->required()
      ->check(CLI::IsMember({"soundness", "completeness", "deletion", "insertion", "road"}));
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--maps", ev_maps, "attribution maps (default: ground truth)");
  ev->add_option("--seed", ev_seed);
  ev->add_option("--workers", ev_workers)->check(CLI::PositiveNumber);
  ev->add_option("--epsilon", ev_eps);
  ev->add_option("--weighting", ev_weighting)->check(CLI::IsMember({"attribution_mass", "cardinality"}));
  ev->add_option("--imputer", ev_imputer)->check(CLI::IsMember({"mean", "zero", "noisy_linear"}));
  ev->add_option("--noise-std", ev_noise);
  ev->add_option("--order", ev_order)->check(CLI::IsMember({"MoRF", "LeRF"}));
  ev->add_option("-o,--out", ev_out, "curve file (.json or .csv; default stdout)");
  ev_model.add(ev);

  // compare
  auto* cmp = app.add_subcommand("compare", "compare curves");
  bool cmp_min = false;
  std::vector<std::string> cmp_curves;
  cmp->add_flag("--min-hausdorff", cmp_min, "minimal pairwise Hausdorff distance")->required();
  cmp->add_option("curves", cmp_curves, "label=path or path")->required()->expected(2, -1);

  // run
  auto* run = app.add_subcommand("run", "run a full experiment");
  std::string run_config, run_preset, run_out = "soco_out";
  std::uint64_t run_seed = 0;
  std::size_t run_trials = 100;
  int run_workers = 1;
  auto* opt_config = run->add_option("--config", run_config, "experiment config (JSON)");
  auto* opt_preset = run->add_option("--preset", run_preset)->check(CLI::IsMember({"validation"}));
  opt_config->excludes(opt_preset);
  run->add_option("--seed", run_seed, "preset seed");
  run->add_option("--trials", run_trials, "preset trials");
  run->add_option("--workers", run_workers, "preset workers");
  run->add_option("-o,--out", run_out, "preset output directory");

  // emit-plot
  auto* plot = app.add_subcommand("emit-plot", "re-emit a curve as CSV or JSON");
  std::string plot_in, plot_out, plot_format;
  plot->add_option("--curve", plot_in)->required();
  plot->add_option("-o,--out", plot_out)->required();
  plot->add_option("--format", plot_format)->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      io::write_dataset(synthetic::generate(spec), gen_out, gen_dtype == "f64" ? io::DType::f64 : io::DType::f32);
    } else if (*attr) {
      const Dataset data = io::read_dataset(attr_data);
      io::write_maps(synthetic::ground_truth_maps(data), data, attr_out);
    } else if (*mod) {
      const Dataset data = io::read_dataset(mod_data);
      const std::vector<AttributionMap> maps = load_maps(mod_maps, data);
      modify::ModScheme scheme;
      scheme.kind = modify::kind_from_string(mod_kind);
      if (scheme.kind == modify::Kind::synth_remove) scheme = modify::synth_remove_scheme(0);
      if (scheme.kind == modify::Kind::synth_introduce) scheme = modify::synth_introduce_scheme(0);
      if (mod->count("--direction")) scheme.direction = modify::direction_from_string(mod_dir);
      if (mod_mag >= 0.0) scheme.magnitude = mod_mag;
      if (mod_frac >= 0.0) scheme.fraction = mod_frac;
      scheme.seed = mod_seed;
      std::vector<std::vector<std::size_t>> predictive;
      if (scheme.kind == modify::Kind::synth_introduce)
        for (const auto& info : synthetic::oracle_infos(data)) predictive.push_back(info.predictive_set);
      std::vector<AttributionMap> out;
      for (std::size_t i = 0; i < maps.size(); ++i)
        out.push_back(modify::apply(scheme, maps[i],
                                    predictive.empty() ? std::span<const std::size_t>{} : predictive[i],
                                    data.sample(i).id, mod_trial));
      io::write_maps(out, data, mod_out);
    } else if (*ev) {
      const Dataset data = io::read_dataset(ev_data);
      const std::vector<AttributionMap> maps = load_maps(ev_maps, data);
      const auto model = ev_model.make();
      const metrics::EvalContext ctx{ev_seed, ev_workers};
      std::optional<perturb::Imputer> imp;
      if (!ev_imputer.empty() || ev_noise >= 0.0) {
        imp = metrics::default_imputer(data);
        if (!ev_imputer.empty()) imp->kind = perturb::imputer_kind_from_string(ev_imputer);
        if (ev_noise >= 0.0) imp->noise_std = ev_noise;
      }
      const MetricKind kind = metric_kind_from_string(ev_metric);
      EvalCurve curve;
      if (kind == MetricKind::soundness) {
        metrics::SoundnessConfig cfg;
        cfg.epsilon = ev_eps;
        cfg.imputer = imp;
        cfg.weighting = metrics::weighting_from_string(ev_weighting);
        auto res = metrics::soundness_curve(*model, data, maps, cfg, ctx);
        if (res.skipped > 0) std::cerr << res.skipped << " sample(s) skipped\n";
        curve = std::move(res.curve);
      } else if (kind == MetricKind::completeness) {
        metrics::CompletenessConfig cfg;
        cfg.imputer = imp;
        curve = metrics::completeness_curve(*model, data, maps, cfg, ctx);
      } else {
        const perturb::Order order = perturb::order_from_string(ev_order);
        metrics::OrderBasedConfig cfg = kind == MetricKind::road        ? metrics::road_config(order)
                                        : kind == MetricKind::insertion ? metrics::insertion_config(order)
                                                                        : metrics::deletion_config(order);
        if (imp) cfg.imputer = imp;
        curve = metrics::order_based_curve(*model, data, maps, cfg, ctx);
      }
      write_curve(curve, ev_out, ev_seed);
    } else if (*cmp) {
      analysis::CurveSet set;
      for (const std::string& arg : cmp_curves) {
        const auto eq = arg.find('=');
        const std::string label = eq == std::string::npos ? std::filesystem::path(arg).stem().string() : arg.substr(0, eq);
        const std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
        if (!set.emplace(label, io::read_curve(path)).second) fail(ErrorKind::config, "duplicate label " + label);
      }
      const auto r = analysis::min_pairwise_hausdorff(set);
      std::cout << "min_hausdorff " << format_real(r.distance) << " pair " << r.first << " " << r.second
                << " x_range " << format_real(r.ranges.x.lo) << " " << format_real(r.ranges.x.hi) << " y_range "
                << format_real(r.ranges.y.lo) << " " << format_real(r.ranges.y.hi) << "\n";
    } else if (*run) {
      experiment::ExperimentConfig cfg;
      if (!run_config.empty()) {
        cfg = experiment::load_config(run_config);
      } else if (!run_preset.empty()) {
        auto doc = experiment::validation_preset(run_seed, run_trials, run_out);
        doc["workers"] = run_workers;
        cfg = experiment::parse_config(doc);
      } else {
        fail(ErrorKind::config, "run needs --config or --preset");
      }
      const auto man = experiment::run_experiment(cfg);
      std::cout << "config_digest " << man.config_digest << "\n";
      for (const auto& [metric, by_label] : man.outputs)
        for (const auto& [label, path] : by_label) std::cout << metric << " " << label << " " << path << "\n";
    } else if (*plot) {
      const EvalCurve curve = io::read_curve(plot_in);
      const io::Format fmt = plot_format.empty() ? io::format_for_path(plot_out) : io::format_from_string(plot_format);
      io::emit_plot_data(curve, plot_out, fmt, {curve.config_digest, std::nullopt, ""});
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
