#include "difflab/denoiser.hpp"

#include <cmath>
#include <fstream>

#include "difflab/version.hpp"
#include "json_util.hpp"

namespace difflab {

std::string to_string(Activation a) { return a == Activation::Swish ? "swish" : "relu"; }

Activation activation_from_string(const std::string& s) {
  if (s == "swish") return Activation::Swish;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("denoiser: unknown activation '" + s + "'");
}

void DenoiserConfig::validate() const {
  if (input_dim < 1) throw ConfigError("denoiser: input_dim must be >= 1");
  if (condition_dim < 0) throw ConfigError("denoiser: condition_dim must be >= 0");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
    throw ConfigError("denoiser: time_embed_dim must be even and >= 2, got " +
                      std::to_string(time_embed_dim));
  }
  if (hidden_dims.empty()) throw ConfigError("denoiser: at least one hidden layer required");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("denoiser: hidden dims must be >= 1");
  }
}

std::vector<std::vector<int>> DenoiserConfig::param_shapes() const {
  std::vector<std::vector<int>> shapes;
  int fan_in = input_dim + time_embed_dim + condition_dim;
  for (int h : hidden_dims) {
    shapes.push_back({fan_in, h});
    shapes.push_back({h});
    fan_in = h;
  }
  shapes.push_back({fan_in, input_dim});
  shapes.push_back({input_dim});
  return shapes;
}

std::vector<std::string> DenoiserConfig::param_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
    names.push_back("w" + std::to_string(i));
    names.push_back("b" + std::to_string(i));
  }
  names.push_back("w_out");
  names.push_back("b_out");
  return names;
}

Tensor time_embedding(int t, int dim, int max_step) {
  if (dim < 2 || dim % 2 != 0) {
    throw ConfigError("time_embedding: dim must be even and >= 2, got " + std::to_string(dim));
  }
  if (t < 0 || t > max_step) {
    throw std::out_of_range("time_embedding: t = " + std::to_string(t) + " outside [0, " +
                            std::to_string(max_step) + "]");
  }
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim / 2; ++k) {
    const double omega = std::pow(10000.0, -2.0 * k / dim);
    e[static_cast<std::size_t>(2 * k)] = std::sin(t * omega);
    e[static_cast<std::size_t>(2 * k + 1)] = std::cos(t * omega);
  }
  return Tensor({dim}, std::move(e));
}

DenoiserModel DenoiserModel::init(DenoiserConfig cfg, Parameterization param, ScheduleSpec sched,
                                  std::uint64_t seed) {
  cfg.validate();
  DenoiserModel m;
  m.config = std::move(cfg);
  m.parameterization = param;
  m.schedule = sched;
  m.seed = seed;
  m.param_names = m.config.param_names();
  Rng rng(seed);
  auto shapes = m.config.param_shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const bool is_final_layer = i + 2 >= shapes.size();
    const bool is_weight = shapes[i].size() == 2;
    if (is_final_layer || !is_weight) {
      // Biases start at zero; the whole final layer does too, so a fresh
      // model predicts 0.
      m.params.push_back(Tensor::zeros(shapes[i]));
      continue;
    }
    const int fan_in = shapes[i][0];
    m.params.push_back(mul(randn(shapes[i], rng), std::sqrt(1.0 / fan_in)));
  }
  return m;
}

Tensor DenoiserModel::forward(const Tensor& x_t, int t, const Tensor& condition) const {
  if (x_t.rank() != 1) throw DimError("forward: expected rank-1 input");
  Tensor xs = reshape(x_t, {1, x_t.shape()[0]});
  Tensor cs;
  if (condition.defined() && condition.size() > 0) {
    cs = reshape(condition, {1, static_cast<int>(condition.size())});
  }
  const int ts[1] = {t};
  Tensor out = forward_batch(xs, ts, cs);
  return reshape(out, {config.input_dim});
}

Tensor DenoiserModel::forward_batch(const Tensor& xs, std::span<const int> ts,
                                    const Tensor& conditions) const {
  return forward_batch_with(params, xs, ts, conditions);
}

Tensor DenoiserModel::forward_batch_with(std::span<const Tensor> p, const Tensor& xs,
                                         std::span<const int> ts,
                                         const Tensor& conditions) const {
  if (xs.rank() != 2 || xs.shape()[1] != config.input_dim) {
    throw DimError("forward: input must be [batch, " + std::to_string(config.input_dim) + "]");
  }
  const int batch = xs.shape()[0];
  if (static_cast<int>(ts.size()) != batch) {
    throw DimError("forward: need one step index per row");
  }
  if (config.condition_dim > 0) {
    if (!conditions.defined() || conditions.rank() != 2 || conditions.shape()[0] != batch ||
        conditions.shape()[1] != config.condition_dim) {
      throw DimError("forward: condition must be [batch, " +
                     std::to_string(config.condition_dim) + "]");
    }
  } else if (conditions.defined() && conditions.size() > 0) {
    throw DimError("forward: model is unconditional but a condition was given");
  }
  if (p.size() != config.param_shapes().size()) {
    throw DimError("forward: wrong parameter count");
  }

  // Per-row sinusoidal embeddings of the base-schedule step index.
  const int ed = config.time_embed_dim;
  std::vector<double> emb(static_cast<std::size_t>(batch) * ed);
  for (int i = 0; i < batch; ++i) {
    Tensor e = time_embedding(ts[i] * schedule.stride, ed, schedule.steps);
    auto ev = e.values();
    std::copy(ev.begin(), ev.end(), emb.begin() + static_cast<std::int64_t>(i) * ed);
  }
  Tensor time_mat({batch, ed}, std::move(emb));

  std::vector<Tensor> pieces{xs, time_mat};
  if (config.condition_dim > 0) pieces.push_back(conditions);
  Tensor h = concat_cols(pieces);

  const std::size_t n_layers = config.hidden_dims.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    h = add_rowwise(matmul(h, p[2 * l]), p[2 * l + 1]);
    h = config.activation == Activation::Swish ? swish(h) : relu(h);
  }
  return add_rowwise(matmul(h, p[2 * n_layers]), p[2 * n_layers + 1]);
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const DenoiserModel& model, const std::string& path) {
  using jsonutil::json;
  json j;
  j["format"] = "difflab-checkpoint";
  j["format_version"] = kCheckpointFormatVersion;
  j["parameterization"] = to_string(model.parameterization);
  j["seed"] = model.seed;
  j["schedule"] = jsonutil::schedule_to_json(model.schedule);
  j["config"] = jsonutil::denoiser_to_json(model.config);
  json params = json::array();
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    json p;
    p["name"] = model.param_names[i];
    p["shape"] = model.params[i].shape();
    auto v = model.params[i].values();
    p["data"] = std::vector<double>(v.begin(), v.end());
    params.push_back(std::move(p));
  }
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw ConfigError("checkpoint: cannot write '" + path + "'");
  out << j.dump() << "\n";
}

DenoiserModel load_checkpoint(const std::string& path) {
  using jsonutil::json;
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint: '" + path + "' is not valid JSON: " + e.what());
  }
  if (jsonutil::get_or<std::string>(j, "format", "") != "difflab-checkpoint") {
    throw ConfigError("checkpoint: '" + path + "' missing format marker");
  }
  if (jsonutil::get_or<int>(j, "format_version", -1) != kCheckpointFormatVersion) {
    throw ConfigError("checkpoint: unsupported format version in '" + path + "'");
  }
  DenoiserModel m;
  m.parameterization =
      parameterization_from_string(j.at("parameterization").get<std::string>());
  m.seed = jsonutil::get_or<std::uint64_t>(j, "seed", 0);
  m.schedule = jsonutil::schedule_from_json(j.at("schedule"), "checkpoint.schedule");
  m.config = jsonutil::denoiser_from_json(j.at("config"), "checkpoint.config");
  m.config.validate();
  m.param_names = m.config.param_names();
  const auto shapes = m.config.param_shapes();
  const auto& params = j.at("params");
  if (!params.is_array() || params.size() != shapes.size()) {
    throw ConfigError("checkpoint: expected " + std::to_string(shapes.size()) +
                      " parameter tensors");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& p = params[i];
    const auto shape = p.at("shape").get<std::vector<int>>();
    if (shape != shapes[i]) {
      throw ConfigError("checkpoint: parameter '" + m.param_names[i] +
                        "' shape does not match the stored config");
    }
    auto data = p.at("data").get<std::vector<double>>();
    Tensor t(shape, std::move(data));
    if (!all_finite(t)) {
      throw ConfigError("checkpoint: parameter '" + m.param_names[i] + "' has non-finite values");
    }
    m.params.push_back(std::move(t));
  }
  return m;
}

}  // namespace difflab
