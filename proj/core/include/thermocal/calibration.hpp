#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thermocal/grid.hpp"

namespace thermocal {

/// One (temperature, gray) observation. Units depend on context: raw
/// (degC, gray fraction) before normalization, [0,1] fractions after.
struct SamplePair {
  double temp = 0.0;
  double gray = 0.0;
};

/// Min-max normalized samples: every coordinate in [0,1], at least two points.
struct CalibrationSamples {
  std::vector<SamplePair> points;

  std::size_t size() const noexcept { return points.size(); }
  void validate() const;
};

struct NormBounds {
  double temp_min = 0.0;
  double temp_max = 1.0;
  double gray_min = 0.0;
  double gray_max = 1.0;

  void validate() const;
  double normalize_temp(double t) const { return (t - temp_min) / (temp_max - temp_min); }
  double denormalize_temp(double t) const { return temp_min + t * (temp_max - temp_min); }
  double normalize_gray(double g) const { return (g - gray_min) / (gray_max - gray_min); }
  double denormalize_gray(double g) const { return gray_min + g * (gray_max - gray_min); }
};

enum class ModelForm { kLinear, kQuadratic, kCubic, kLogistic };

std::string_view to_string(ModelForm form);
ModelForm model_form_from_string(std::string_view name);
std::size_t coefficient_count(ModelForm form);

/// Normalized gray as a function of normalized temperature.
///
/// Coefficients are highest power first: linear (a, b) is a*t + b, cubic
/// (a, b, c, d) is a*t^3 + b*t^2 + c*t + d. Logistic (a, b) is
/// 1 / (1 + exp(a*t + b)).
struct CalibrationModel {
  ModelForm form = ModelForm::kLinear;
  std::vector<double> coefficients;
  NormBounds bounds;
  double mse = 0.0;

  void validate() const;
  double evaluate(double temp_norm) const;
  double derivative(double temp_norm) const;
  /// True when the model is strictly monotone on [0,1].
  bool monotone_on_unit_interval() const;

  std::string to_json() const;
  static CalibrationModel from_json(std::string_view text);
  static CalibrationModel load(const std::string& path);
  void save(const std::string& path) const;
};

/// Top-left anchored windows fully inside the frame; emits (mean temp, mean gray).
std::vector<SamplePair> window_smooth(const ThermalFrame& frame, std::size_t window = 5,
                                      std::size_t step = 7);

/// Min-max normalization of both axes over all samples.
std::pair<CalibrationSamples, NormBounds> normalize_samples(std::span<const SamplePair> raw);

CalibrationModel fit_model(const CalibrationSamples& samples, ModelForm form);

double model_mse(const CalibrationModel& model, const CalibrationSamples& samples);

struct Conversion {
  double value = 0.0;
  bool clamped = false;
};

/// Normalized gray -> degC. Inputs outside the model's range are clamped and flagged.
Conversion gray_to_temp(const CalibrationModel& model, double gray_norm);
/// degC -> normalized gray.
Conversion temp_to_gray(const CalibrationModel& model, double temp_c);

}  // namespace thermocal
