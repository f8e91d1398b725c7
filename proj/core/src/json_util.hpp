// Internal JSON helpers shared by checkpoint and run-config code. Not part
// of the installed API.
#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "difflab/denoiser.hpp"
#include "difflab/errors.hpp"
#include "difflab/schedule.hpp"

namespace difflab::jsonutil {

using nlohmann::json;

// Rejects unknown keys so config typos fail loudly.
void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where);

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

json schedule_to_json(const ScheduleSpec& s);
ScheduleSpec schedule_from_json(const json& j, const std::string& where);

json denoiser_to_json(const DenoiserConfig& c);
DenoiserConfig denoiser_from_json(const json& j, const std::string& where);

}  // namespace difflab::jsonutil
