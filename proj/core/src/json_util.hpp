#pragma once

#include <string>

#include "json.hpp"
#include "thermocal/error.hpp"
#include "thermocal/radiometry.hpp"

namespace thermocal::detail {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline ordered_json env_to_json(const EnvironmentConditions& env) {
  ordered_json j;
  j["ambient_temp_c"] = env.ambient_temp_c;
  j["background_temp_c"] = env.background_temp_c;
  j["relative_humidity"] = env.relative_humidity;
  j["distance_m"] = env.distance_m;
  j["sensor_exponent"] = env.sensor_exponent;
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline EnvironmentConditions env_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("env must be a JSON object");
  EnvironmentConditions env;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw ConfigError("env." + key + " must be a number");
    const double v = value.get<double>();
    if (key == "ambient_temp_c") env.ambient_temp_c = v;
    else if (key == "background_temp_c") env.background_temp_c = v;
    else if (key == "relative_humidity") env.relative_humidity = v;
    else if (key == "distance_m") env.distance_m = v;
    else if (key == "sensor_exponent") env.sensor_exponent = v;
    else throw ConfigError("unknown env field '" + key + "'");
  }
  try {
    env.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  return env;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + ": invalid JSON (" + e.what() + ")");
  }
}

}  // namespace thermocal::detail
