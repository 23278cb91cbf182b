#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thermocal/grid.hpp"

namespace thermocal {

inline constexpr double kKelvinOffset = 273.15;

/// Surface emissivity, a fraction in (0, 1].
class Emissivity {
 public:
  explicit Emissivity(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Condensation number of water (mm/km) tabulated against air temperature.
struct CondensationTable {
  struct Entry {
    double temperature_c;
    double omega_mm_per_km;
  };
  std::vector<Entry> entries;

  /// The five-row table for 5..25 degC.
  static CondensationTable standard();
  void validate() const;
};

/// Tunable constants of the radiation model. Defaults read humidity as a
/// fraction divided by 6.76 and the distance in meters.
struct RadiometryConstants {
  CondensationTable table = CondensationTable::standard();
  double humidity_denominator = 6.76;
  double attenuation_constant = 0.342;
  double distance_scale = 1.0;  ///< multiplies distance_m before exponentiation
  double sensor_exponent = 4.09;

  void validate() const;
  std::string to_json() const;
  static RadiometryConstants from_json(std::string_view text);
  static RadiometryConstants load(const std::string& path);
  /// Reads the file named by THERMOCAL_CONSTANTS, or returns the defaults.
  static RadiometryConstants from_environment();
};

struct EnvironmentConditions {
  double ambient_temp_c = 22.0;     ///< T_a, air temperature along the path
  double background_temp_c = 23.5;  ///< T_b, reflected background
  double relative_humidity = 0.881; ///< fraction in [0,1]
  double distance_m = 0.25;
  double sensor_exponent = 4.09;    ///< n in the T^n law

  void validate() const;
};

double water_condensation(double air_temp_c, const CondensationTable& table);

double atmospheric_transmittance(const EnvironmentConditions& env,
                                 const RadiometryConstants& constants = {});

/// Recovers the true surface temperature from a sensor reading.
/// Throws DomainError when the radiance balance is non-positive.
double correct_temperature(double measured_c, Emissivity eps, const EnvironmentConditions& env,
                           double tau);

/// Forward model: the temperature the sensor reports for a surface at true_c.
double render_measured(double true_c, Emissivity eps, const EnvironmentConditions& env,
                       double tau);

/// Pixel-wise correct_temperature. eps_map holds emissivity values.
/// `jobs` > 1 splits rows across threads; the result does not depend on it.
Plane correct_frame(const Plane& temps, const Plane& eps_map, const EnvironmentConditions& env,
                    const RadiometryConstants& constants = {}, unsigned jobs = 1);

}  // namespace thermocal
