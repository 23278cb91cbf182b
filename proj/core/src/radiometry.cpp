#include "thermocal/radiometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace thermocal {

using nlohmann::json;

Emissivity::Emissivity(double value) : value_(value) {
  if (!(value > 0.0 && value <= 1.0)) {
    throw ArgumentError("emissivity must lie in (0, 1], got " + std::to_string(value));
  }
}

CondensationTable CondensationTable::standard() {
  return {{{5.0, 6.76}, {10.0, 9.33}, {15.0, 11.96}, {20.0, 17.22}, {25.0, 22.80}}};
}

void CondensationTable::validate() const {
  if (entries.empty()) throw ConfigError("condensation table is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!(entries[i].omega_mm_per_km > 0.0)) {
      throw ConfigError("condensation table: omega must be positive");
    }
    if (i > 0 && !(entries[i].temperature_c > entries[i - 1].temperature_c)) {
      throw ConfigError("condensation table: temperatures must be strictly increasing");
    }
  }
}

void RadiometryConstants::validate() const {
  table.validate();
  if (!(humidity_denominator > 0.0)) throw ConfigError("humidity_denominator must be > 0");
  if (!(attenuation_constant >= 0.0)) throw ConfigError("attenuation_constant must be >= 0");
  if (!(distance_scale > 0.0)) throw ConfigError("distance_scale must be > 0");
  if (!(sensor_exponent > 0.0)) throw ConfigError("sensor_exponent must be > 0");
}

std::string RadiometryConstants::to_json() const {
  json j;
  json rows = json::array();
  for (const auto& e : table.entries) rows.push_back({e.temperature_c, e.omega_mm_per_km});
  j["condensation_table"] = rows;
  j["humidity_denominator"] = humidity_denominator;
  j["attenuation_constant"] = attenuation_constant;
  j["distance_scale"] = distance_scale;
  j["sensor_exponent"] = sensor_exponent;
  return j.dump(2);
}

RadiometryConstants RadiometryConstants::from_json(std::string_view text) {
  RadiometryConstants c;
  try {
    const json j = json::parse(text);
    if (j.contains("condensation_table")) {
      c.table.entries.clear();
      for (const auto& row : j.at("condensation_table")) {
        c.table.entries.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
      }
    }
    c.humidity_denominator = j.value("humidity_denominator", c.humidity_denominator);
    c.attenuation_constant = j.value("attenuation_constant", c.attenuation_constant);
    c.distance_scale = j.value("distance_scale", c.distance_scale);
    c.sensor_exponent = j.value("sensor_exponent", c.sensor_exponent);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("radiometry constants: ") + e.what());
  }
  c.validate();
  return c;
}

RadiometryConstants RadiometryConstants::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open radiometry constants file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

RadiometryConstants RadiometryConstants::from_environment() {
  const char* path = std::getenv("THERMOCAL_CONSTANTS");
  if (path == nullptr || *path == '\0') return {};
  return load(path);
}

void EnvironmentConditions::validate() const {
  if (!(relative_humidity >= 0.0 && relative_humidity <= 1.0)) {
    throw ArgumentError("relative_humidity must lie in [0, 1]");
  }
  if (!(distance_m >= 0.0)) throw ArgumentError("distance_m must be >= 0");
  if (!(sensor_exponent > 0.0)) throw ArgumentError("sensor_exponent must be > 0");
  for (double t : {ambient_temp_c, background_temp_c}) {
    if (!(t >= -50.0 && t <= 200.0)) {
      throw ArgumentError("environment temperatures must lie in [-50, 200] degC");
    }
  }
}

double water_condensation(double air_temp_c, const CondensationTable& table) {
  table.validate();
  const auto& e = table.entries;
  if (air_temp_c <= e.front().temperature_c) return e.front().omega_mm_per_km;
  if (air_temp_c >= e.back().temperature_c) return e.back().omega_mm_per_km;
  const auto hi = std::upper_bound(e.begin(), e.end(), air_temp_c,
                                   [](double t, const auto& entry) { return t < entry.temperature_c; });
  const auto lo = hi - 1;
  const double f = (air_temp_c - lo->temperature_c) / (hi->temperature_c - lo->temperature_c);
  return lo->omega_mm_per_km + f * (hi->omega_mm_per_km - lo->omega_mm_per_km);
}

double atmospheric_transmittance(const EnvironmentConditions& env,
                                 const RadiometryConstants& constants) {
  env.validate();
  const double omega = water_condensation(env.ambient_temp_c, constants.table);
  const double k = omega * env.relative_humidity / constants.humidity_denominator *
                   constants.attenuation_constant;
  return std::exp(-k * env.distance_m * constants.distance_scale);
}

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ArgumentError("transmittance must lie in (0, 1], got " + std::to_string(tau));
  }
}

double to_kelvin_checked(double c, const char* what) {
  const double k = c + kKelvinOffset;
  if (!(k > 0.0)) throw DomainError(std::string(what) + " is below absolute zero");
  return k;
}

}  // namespace

double correct_temperature(double measured_c, Emissivity eps, const EnvironmentConditions& env,
                           double tau) {
  check_tau(tau);
  const double n = env.sensor_exponent;
  const double e = eps.value();
  const double tm = std::pow(to_kelvin_checked(measured_c, "measured temperature"), n);
  const double tb = std::pow(to_kelvin_checked(env.background_temp_c, "background temperature"), n);
  const double ta = std::pow(to_kelvin_checked(env.ambient_temp_c, "ambient temperature"), n);

  const double emitted = tm / tau - (1.0 - e) * tb - (1.0 / tau - 1.0) * ta;
  if (!(emitted > 0.0)) {
    std::ostringstream msg;
    msg << "radiance balance is non-positive (T_m^n/tau - (1-eps) T_b^n - (1/tau-1) T_a^n = "
        << emitted << ") for measured " << measured_c << " degC, eps " << e << ", tau " << tau;
    throw DomainError(msg.str());
  }
  return std::pow(emitted / e, 1.0 / n) - kKelvinOffset;
}

double render_measured(double true_c, Emissivity eps, const EnvironmentConditions& env,
                       double tau) {
  check_tau(tau);
  const double n = env.sensor_exponent;
  const double e = eps.value();
  const double tr = std::pow(to_kelvin_checked(true_c, "true temperature"), n);
  const double tb = std::pow(to_kelvin_checked(env.background_temp_c, "background temperature"), n);
  const double ta = std::pow(to_kelvin_checked(env.ambient_temp_c, "ambient temperature"), n);
  const double radiance = tau * e * tr + tau * (1.0 - e) * tb + (1.0 - tau) * ta;
  return std::pow(radiance, 1.0 / n) - kKelvinOffset;
}

Plane correct_frame(const Plane& temps, const Plane& eps_map, const EnvironmentConditions& env,
                    const RadiometryConstants& constants, unsigned jobs) {
  require_same_shape(temps, eps_map, "correct_frame");
  const double tau = atmospheric_transmittance(env, constants);
  Plane out(temps.width(), temps.height());

  auto run_rows = [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = 0; x < temps.width(); ++x) {
        try {
          out(x, y) = correct_temperature(temps(x, y), Emissivity(eps_map(x, y)), env, tau);
        } catch (const DomainError& e) {
          throw DomainError("pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                            "): " + e.what());
        } catch (const ArgumentError& e) {
          throw ArgumentError("pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                              "): " + e.what());
        }
      }
    }
  };

  const std::size_t h = temps.height();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(h, 1))));
  if (jobs == 1) {
    run_rows(0, h);
    return out;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (unsigned j = 0; j < jobs; ++j) {
    const std::size_t y0 = h * j / jobs;
    const std::size_t y1 = h * (j + 1) / jobs;
    workers.emplace_back([&, j, y0, y1] {
      try {
        run_rows(y0, y1);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace thermocal
