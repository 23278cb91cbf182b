#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "thermocal/calibration.hpp"
#include "thermocal/enhance/direct.hpp"
#include "thermocal/enhance/network.hpp"
#include "thermocal/manifest.hpp"
#include "thermocal/metrics.hpp"

namespace thermocal {

struct PipelineOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  bool direct = false;
  /// Pretrained weights; without them (and without direct) a network is trained on the sequence.
  std::optional<std::filesystem::path> weights;
  enhance::TrainConfig train;
  enhance::DirectConfig direct_config;
  ModelForm calibration_form = ModelForm::kLinear;
  RescaleMode rescale = RescaleMode::kMaxFraction;
  unsigned jobs = 1;
  bool write_frames = true;

  /// Overrides fields from a JSON object with optional keys "seed", "direct",
  /// "calibration_form", "rescale", "jobs", "train" {...} and "direct_config" {...}.
  void apply_json(std::string_view text);
};

/// One pair of emissivity-normalized regions per frame.
struct SequenceRegions {
  std::vector<enhance::RegionPair> pairs;
  RegionMask target_mask;
  RegionMask reference_mask;
  Emissivity target_eps{1.0};
  Emissivity reference_eps{1.0};
};

struct PipelineResult {
  MetricsReport report;
  TemperatureProfile original;
  TemperatureProfile enhanced;
  TemperatureProfile gt;
  CalibrationModel calibration;
  std::vector<Plane> enhanced_planes;  ///< curve output on the target region
  std::vector<Plane> enhanced_gray;    ///< full frames with the target replaced by enhanced gray
  std::vector<double> frame_losses;    ///< reported loss per frame
  std::optional<enhance::TrainResult> training;
};

std::vector<ThermalFrame> load_frames(const SequenceManifest& manifest);

/// Loads masks and emissivities from the manifest and normalizes every frame.
SequenceRegions build_regions(const SequenceManifest& manifest, const std::vector<ThermalFrame>& frames);

/// Fits one calibration model over window samples of all frames.
CalibrationModel calibrate_sequence(const std::vector<ThermalFrame>& frames, ModelForm form);

/// Maps an enhanced curve value back to a gray fraction on the reference material's scale,
/// eps_ref * atanh(C), and the inverse tanh(g / eps_ref).
double enhanced_to_gray(double curve_value, Emissivity reference_eps);
double gray_to_enhanced(double gray, Emissivity reference_eps);

/// Curve outputs for every frame, by direct optimization or by the network
/// (loaded from options.weights, or trained on the sequence). Sets result.training
/// when a network is trained.
std::vector<Plane> enhance_sequence(const SequenceRegions& regions, const PipelineOptions& options,
                                    std::optional<enhance::TrainResult>* training = nullptr);

/// Full frames with the target region replaced by enhanced gray.
std::vector<Plane> enhanced_gray_frames(const std::vector<ThermalFrame>& frames, const SequenceRegions& regions,
                                        const std::vector<Plane>& curves);

/// Writes enhanced_XXX.pgm (16-bit) for every frame into dir.
void write_enhanced_frames(const std::vector<Plane>& gray, const std::filesystem::path& dir);

/// Reads enhanced_XXX.pgm frames written by write_enhanced_frames and maps the
/// target region back to curve outputs; zero outside the target.
std::vector<Plane> read_enhanced_curves(const std::filesystem::path& dir, const SequenceRegions& regions);

/// Calibration, GT correction, profiles and metrics for given curve outputs.
PipelineResult evaluate_sequence(const SequenceManifest& manifest, const std::vector<ThermalFrame>& frames,
                                 const SequenceRegions& regions, std::vector<Plane> curves,
                                 const PipelineOptions& options);

/// Writes profiles.csv, metrics.json, profiles.svg, calibration.json, enhanced
/// frames and trained weights under options.out_dir.
void write_outputs(const PipelineResult& result, const PipelineOptions& options);

/// All stages end to end; writes outputs when out_dir is set.
PipelineResult run_pipeline(const SequenceManifest& manifest, const PipelineOptions& options);

}  // namespace thermocal
