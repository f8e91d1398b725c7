#include "json_util.hpp"

#include <set>

namespace difflab::jsonutil {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

json schedule_to_json(const ScheduleSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["T"] = s.steps;
  j["stride"] = s.stride;
  switch (s.kind) {
    case ScheduleKind::Linear:
      j["beta_min"] = s.beta_min;
      j["beta_max"] = s.beta_max;
      break;
    case ScheduleKind::AlphabarCosine:
      j["offset"] = s.offset;
      break;
    case ScheduleKind::PaperCosine:
      break;
  }
  return j;
}

ScheduleSpec schedule_from_json(const json& j, const std::string& where) {
  check_keys(j, {"kind", "T", "stride", "beta_min", "beta_max", "offset"}, where);
  ScheduleSpec s;
  s.kind = schedule_kind_from_string(get_or<std::string>(j, "kind", "linear"));
  s.steps = get_or<int>(j, "T", s.steps);
  s.stride = get_or<int>(j, "stride", s.stride);
  s.beta_min = get_or<double>(j, "beta_min", s.beta_min);
  s.beta_max = get_or<double>(j, "beta_max", s.beta_max);
  s.offset = get_or<double>(j, "offset", s.offset);
  return s;
}

json denoiser_to_json(const DenoiserConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["condition_dim"] = c.condition_dim;
  j["hidden_dims"] = c.hidden_dims;
  j["time_embed_dim"] = c.time_embed_dim;
  j["activation"] = to_string(c.activation);
  return j;
}

DenoiserConfig denoiser_from_json(const json& j, const std::string& where) {
  check_keys(j, {"input_dim", "condition_dim", "hidden_dims", "time_embed_dim", "activation"},
             where);
  DenoiserConfig c;
  c.input_dim = get_or<int>(j, "input_dim", c.input_dim);
  c.condition_dim = get_or<int>(j, "condition_dim", c.condition_dim);
  c.hidden_dims = get_or<std::vector<int>>(j, "hidden_dims", c.hidden_dims);
  c.time_embed_dim = get_or<int>(j, "time_embed_dim", c.time_embed_dim);
  c.activation = activation_from_string(get_or<std::string>(j, "activation", "swish"));
  return c;
}

}  // namespace difflab::jsonutil
