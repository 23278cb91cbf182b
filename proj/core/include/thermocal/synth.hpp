#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "thermocal/calibration.hpp"
#include "thermocal/grid.hpp"
#include "thermocal/radiometry.hpp"
#include "thermocal/regions.hpp"

namespace thermocal {

enum class Ramp { kLinear, kLogistic };
std::string_view to_string(Ramp ramp);
Ramp ramp_from_string(std::string_view name);

struct SynthConfig {
  std::string name = "synthetic";
  std::size_t width = 64;
  std::size_t height = 48;
  std::size_t frames = 60;
  double temp_start_c = 26.0;
  double temp_end_c = 37.0;
  Ramp ramp = Ramp::kLogistic;
  double logistic_rate = 6.0;      ///< steepness of the warm-up curve
  double logistic_midpoint = 0.3;  ///< fraction of the sequence at the inflection
  double eps_target = 0.21;
  double eps_reference = 0.90;
  double split = 0.5;              ///< fraction of the width given to the target (left)
  EnvironmentConditions env;
  /// Gray law applied to the normalized measured temperature. Its temperature
  /// bounds are replaced by the measured range of the sequence when auto_bounds is set.
  CalibrationModel gray_law = default_gray_law();
  bool auto_bounds = true;
  double perturbation_c = 0.5;     ///< amplitude bound of the static spatial field
  double noise_std = 0.005;        ///< additive Gaussian noise on gray fractions
  double interval_s = 5.0;
  std::uint64_t seed = 0;

  static CalibrationModel default_gray_law();
  void validate() const;
  std::string to_json() const;
  static SynthConfig from_json(std::string_view text);
};

struct SynthOutput {
  SynthConfig config;               ///< with the gray-law bounds actually used
  std::vector<ThermalFrame> frames; ///< gray fraction + measured degC
  std::vector<Plane> gt_temps;      ///< true surface temperature
  std::vector<double> timestamps;
  RegionMask target_mask;
  RegionMask reference_mask;
  Plane emissivity;                 ///< per-pixel emissivity map
  double tau = 1.0;
};

/// Temperature of the ramp at frame f, before the spatial field.
double ramp_temperature(const SynthConfig& cfg, std::size_t frame);

SynthOutput generate(const SynthConfig& config);

/// Writes frames/, masks/, gt/ and manifest.json under `dir`; returns the manifest path.
std::filesystem::path write_sequence(const SynthOutput& out, const std::filesystem::path& dir);

}  // namespace thermocal
