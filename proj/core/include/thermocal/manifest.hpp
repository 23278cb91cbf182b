#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermocal/grid.hpp"
#include "thermocal/radiometry.hpp"
#include "thermocal/regions.hpp"

namespace thermocal {

struct FrameEntry {
  std::filesystem::path gray;  ///< 16-bit PGM
  std::filesystem::path temp;  ///< temperature CSV
  double timestamp_s = 0.0;
};

/// Label PNG whose pixels are assigned to materials by exact colour match.
struct LabelImage {
  std::filesystem::path path;
  std::map<std::string, Rgb> colours;
};

/// Sequence description. Relative paths are resolved against base_dir (the
/// manifest's directory) when the manifest is loaded from a file.
struct SequenceManifest {
  std::string name;
  std::vector<FrameEntry> frames;
  std::map<std::string, std::filesystem::path> masks;
  std::optional<LabelImage> labels;
  std::map<std::string, double> emissivity;
  std::string target_label = "target";
  std::string reference_label = "reference";
  EnvironmentConditions env;
  std::optional<std::filesystem::path> calibration;
  std::filesystem::path base_dir;

  /// Checks structure, label consistency, non-decreasing timestamps and that every
  /// referenced file exists.
  void validate() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;

  std::string to_json() const;
  static SequenceManifest from_json(std::string_view text, const std::filesystem::path& base_dir = {});
  static SequenceManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  ThermalFrame load_frame(std::size_t index) const;
  RegionMask load_mask(const std::string& label) const;
  Emissivity emissivity_of(const std::string& label) const;
};

}  // namespace thermocal
