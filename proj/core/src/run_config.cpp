#include "difflab/run_config.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace difflab {

using jsonutil::check_keys;
using jsonutil::get_or;
using jsonutil::json;

void MetricConfig::validate() const {
  if (bins < 2) throw ConfigError("metrics: bins must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("metrics: alpha must be in (0, 1)");
  if (n_generated < 1) throw ConfigError("metrics: n_generated must be >= 1");
}

namespace {

DatasetSpec dataset_from_json(const json& j) {
  check_keys(j,
             {"kind", "count", "seed", "modes", "radius", "noise_std", "image_height",
              "image_width", "harmonics", "image_noise"},
             "dataset");
  DatasetSpec d;
  d.kind = dataset_kind_from_string(get_or<std::string>(j, "kind", "gaussian-mixture-2d"));
  d.count = get_or<int>(j, "count", d.count);
  d.seed = get_or<std::uint64_t>(j, "seed", d.seed);
  d.modes = get_or<int>(j, "modes", d.modes);
  d.radius = get_or<double>(j, "radius", d.radius);
  d.noise_std = get_or<double>(j, "noise_std", d.noise_std);
  d.image_height = get_or<int>(j, "image_height", d.image_height);
  d.image_width = get_or<int>(j, "image_width", d.image_width);
  d.harmonics = get_or<int>(j, "harmonics", d.harmonics);
  d.image_noise = get_or<double>(j, "image_noise", d.image_noise);
  return d;
}

json dataset_to_json(const DatasetSpec& d) {
  json j;
  j["kind"] = to_string(d.kind);
  j["count"] = d.count;
  j["seed"] = d.seed;
  if (d.kind == DatasetKind::GaussianMixture2d) {
    j["modes"] = d.modes;
    j["radius"] = d.radius;
    j["noise_std"] = d.noise_std;
  } else {
    j["image_height"] = d.image_height;
    j["image_width"] = d.image_width;
    j["harmonics"] = d.harmonics;
    j["image_noise"] = d.image_noise;
  }
  return j;
}

RunConfig from_json(const json& j) {
  check_keys(j, {"dataset", "schedule", "denoiser", "train", "metrics", "compare", "chain",
                 "output_dir"},
             "config");
  RunConfig cfg;
  if (j.contains("dataset")) cfg.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("schedule")) {
    cfg.schedule = jsonutil::schedule_from_json(j.at("schedule"), "schedule");
  }
  if (j.contains("denoiser")) {
    cfg.denoiser = jsonutil::denoiser_from_json(j.at("denoiser"), "denoiser");
  } else {
    cfg.denoiser.input_dim = 0;  // derive below
  }
  if (!j.contains("denoiser") || !j.at("denoiser").contains("input_dim")) {
    cfg.denoiser.input_dim = cfg.dataset.kind == DatasetKind::GaussianMixture2d
                                 ? 2
                                 : cfg.dataset.image_height * cfg.dataset.image_width;
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t,
               {"mode", "batch_size", "steps", "learning_rate", "w_recon", "w_ssim", "seed",
                "condition_on_labels", "log_every", "checkpoint_every", "plateau_patience",
                "teacher_checkpoint"},
               "train");
    cfg.mode = train_mode_from_string(get_or<std::string>(t, "mode", "generator"));
    cfg.batch_size = get_or<int>(t, "batch_size", cfg.batch_size);
    cfg.steps = get_or<int>(t, "steps", cfg.steps);
    cfg.learning_rate = get_or<double>(t, "learning_rate", cfg.learning_rate);
    cfg.weights.recon = get_or<double>(t, "w_recon", cfg.weights.recon);
    cfg.weights.ssim = get_or<double>(t, "w_ssim", cfg.weights.ssim);
    cfg.seed = get_or<std::uint64_t>(t, "seed", cfg.seed);
    cfg.condition_on_labels = get_or<bool>(t, "condition_on_labels", cfg.condition_on_labels);
    cfg.log_every = get_or<int>(t, "log_every", cfg.log_every);
    cfg.checkpoint_every = get_or<int>(t, "checkpoint_every", cfg.checkpoint_every);
    cfg.plateau_patience = get_or<int>(t, "plateau_patience", cfg.plateau_patience);
    cfg.teacher_checkpoint = get_or<std::string>(t, "teacher_checkpoint", "");
  }
  // Bin count defaults by data kind: one per mode on the mixture, 50 for
  // image data.
  cfg.metrics.bins = cfg.dataset.kind == DatasetKind::GaussianMixture2d ? cfg.dataset.modes : 50;
  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    check_keys(m, {"bins", "alpha", "n_generated", "kmeans_seed"}, "metrics");
    cfg.metrics.bins = get_or<int>(m, "bins", cfg.metrics.bins);
    cfg.metrics.alpha = get_or<double>(m, "alpha", cfg.metrics.alpha);
    cfg.metrics.n_generated = get_or<int>(m, "n_generated", cfg.metrics.n_generated);
    cfg.metrics.kmeans_seed = get_or<std::uint64_t>(m, "kmeans_seed", cfg.metrics.kmeans_seed);
  }
  if (j.contains("compare")) {
    const json& c = j.at("compare");
    check_keys(c, {"step_counts", "parameterizations"}, "compare");
    cfg.compare.step_counts = get_or<std::vector<int>>(c, "step_counts", cfg.compare.step_counts);
    if (c.contains("parameterizations")) {
      cfg.compare.parameterizations.clear();
      for (const auto& p : c.at("parameterizations")) {
        cfg.compare.parameterizations.push_back(
            parameterization_from_string(p.get<std::string>()));
      }
    }
  }
  if (j.contains("chain")) {
    const json& c = j.at("chain");
    check_keys(c, {"teacher_checkpoint", "target_steps"}, "chain");
    cfg.chain.teacher_checkpoint = get_or<std::string>(c, "teacher_checkpoint", "");
    cfg.chain.target_steps = get_or<int>(c, "target_steps", cfg.chain.target_steps);
  }
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);

  // Cross-field validation before any compute.
  cfg.metrics.validate();
  cfg.denoiser.validate();
  const int expected_dim = cfg.dataset.kind == DatasetKind::GaussianMixture2d
                               ? 2
                               : cfg.dataset.image_height * cfg.dataset.image_width;
  if (cfg.denoiser.input_dim != expected_dim) {
    throw ConfigError("config: denoiser.input_dim " + std::to_string(cfg.denoiser.input_dim) +
                      " does not match the dataset dimension " + std::to_string(expected_dim));
  }
  if (cfg.condition_on_labels) {
    const int classes = condition_classes(cfg.dataset);
    if (cfg.denoiser.condition_dim != classes) {
      throw ConfigError("config: condition_on_labels needs denoiser.condition_dim = " +
                        std::to_string(classes));
    }
  } else if (cfg.denoiser.condition_dim != 0) {
    throw ConfigError("config: condition_dim > 0 but condition_on_labels is false");
  }
  NoiseSchedule::build(cfg.schedule);  // surfaces bad beta values now
  cfg.to_train_config().validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["dataset"] = dataset_to_json(cfg.dataset);
  j["schedule"] = jsonutil::schedule_to_json(cfg.schedule);
  j["denoiser"] = jsonutil::denoiser_to_json(cfg.denoiser);
  json t;
  t["mode"] = to_string(cfg.mode);
  t["batch_size"] = cfg.batch_size;
  t["steps"] = cfg.steps;
  t["learning_rate"] = cfg.learning_rate;
  t["w_recon"] = cfg.weights.recon;
  t["w_ssim"] = cfg.weights.ssim;
  t["seed"] = cfg.seed;
  t["condition_on_labels"] = cfg.condition_on_labels;
  t["log_every"] = cfg.log_every;
  t["checkpoint_every"] = cfg.checkpoint_every;
  t["plateau_patience"] = cfg.plateau_patience;
  if (!cfg.teacher_checkpoint.empty()) t["teacher_checkpoint"] = cfg.teacher_checkpoint;
  j["train"] = std::move(t);
  json m;
  m["bins"] = cfg.metrics.bins;
  m["alpha"] = cfg.metrics.alpha;
  m["n_generated"] = cfg.metrics.n_generated;
  m["kmeans_seed"] = cfg.metrics.kmeans_seed;
  j["metrics"] = std::move(m);
  json c;
  c["step_counts"] = cfg.compare.step_counts;
  std::vector<std::string> ps;
  for (auto p : cfg.compare.parameterizations) ps.push_back(to_string(p));
  c["parameterizations"] = ps;
  j["compare"] = std::move(c);
  if (!cfg.chain.teacher_checkpoint.empty()) {
    json ch;
    ch["teacher_checkpoint"] = cfg.chain.teacher_checkpoint;
    ch["target_steps"] = cfg.chain.target_steps;
    j["chain"] = std::move(ch);
  }
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace

TrainConfig RunConfig::to_train_config() const {
  TrainConfig t;
  t.mode = mode;
  t.schedule = schedule;
  t.denoiser = denoiser;
  t.dataset = dataset;
  t.batch_size = batch_size;
  t.steps = steps;
  t.learning_rate = learning_rate;
  t.weights = weights;
  t.seed = seed;
  t.condition_on_labels = condition_on_labels;
  t.log_every = log_every;
  t.checkpoint_every = checkpoint_every;
  t.plateau_patience = plateau_patience;
  t.teacher_checkpoint = teacher_checkpoint;
  return t;
}

RunConfig parse_run_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(j);
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) { return to_json(cfg).dump(2); }

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace difflab
