#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermocal/grid.hpp"
#include "thermocal/regions.hpp"

namespace thermocal {

inline constexpr std::size_t kSsimWindow = 8;
inline constexpr std::size_t kProfileWindow = 16;

/// Mean SSIM over all 8x8 windows (stride 1), C1 = 0.01^2, C2 = 0.03^2.
/// With a mask, only windows lying entirely inside it are averaged.
double ssim(const Plane& a, const Plane& b, const RegionMask* mask = nullptr,
            std::size_t window = kSsimWindow);

/// Contrast enhancement index: masked standard deviation ratio sigma_en / sigma_or.
double cei(const RegionImage& enhanced, const RegionImage& original);
double cei_values(std::span<const double> enhanced, std::span<const double> original);

/// Shannon entropy in bits of a 256-bin (by default) histogram on [0,1].
double entropy(const Plane& plane, std::size_t bins = 256);
double entropy_values(std::span<const double> values, std::size_t bins = 256);

enum class ProfileKind { kOriginal, kEnhanced, kGroundTruth };
std::string_view to_string(ProfileKind kind);

struct TemperatureProfile {
  ProfileKind kind = ProfileKind::kOriginal;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  void validate() const;
};

struct PixelAnchor {
  std::size_t x = 0;
  std::size_t y = 0;
  bool operator==(const PixelAnchor&) const = default;
};

/// Top-left corners at which a window x window block lies entirely inside the mask.
std::vector<PixelAnchor> valid_anchors(const RegionMask& mask, std::size_t window = kProfileWindow);

/// Seeded uniform choice among valid_anchors.
PixelAnchor choose_anchor(const RegionMask& mask, std::uint64_t seed,
                          std::size_t window = kProfileWindow);

/// Per-frame mean over a fixed window. With a mask, the window must lie inside it.
TemperatureProfile extract_profile(std::span<const Plane> frames, PixelAnchor anchor,
                                   ProfileKind kind, std::size_t window = kProfileWindow,
                                   const RegionMask* mask = nullptr);

enum class RescaleMode {
  kMaxFraction,  ///< upper end is 0.95 * max(gt)
  kPercentile,   ///< upper end is the 95th percentile of gt (linear interpolation)
};
std::string_view to_string(RescaleMode mode);
RescaleMode rescale_mode_from_string(std::string_view name);

struct RescaleRange {
  double lower = 0.0;
  double upper = 0.0;
};
RescaleRange rescale_range(const TemperatureProfile& gt, RescaleMode mode = RescaleMode::kMaxFraction);

/// Affine map of [0,1] onto the rescale range, clamped to it.
TemperatureProfile rescale_profile(std::span<const double> norm_profile, const TemperatureProfile& gt,
                                   RescaleMode mode = RescaleMode::kMaxFraction);

/// Min-max normalization of a series to [0,1]; a constant series maps to 0.
std::vector<double> minmax_normalize(std::span<const double> values);

/// Euclidean distance between two equal-length profiles.
double profile_distance(const TemperatureProfile& a, const TemperatureProfile& b);

struct ErrorStats {
  double mean_c = 0.0;
  double std_c = 0.0;  ///< population standard deviation
  std::string formatted() const;  ///< "mean ± std" with two decimals
};
ErrorStats error_stats(const TemperatureProfile& en, const TemperatureProfile& gt);

struct MetricsReport {
  double ssim = 0.0;             ///< enhanced vs original gray, target region
  double cei = 0.0;              ///< same images
  double ssim_normalized = 0.0;  ///< curve output vs curve input
  double cei_normalized = 0.0;
  double entropy_bits = 0.0;
  double entropy_original_bits = 0.0;
  double dis_orig_gt = 0.0;
  double dis_en_gt = 0.0;
  double err_mean_c = 0.0;
  double err_std_c = 0.0;
  double loss_total = 0.0;
  PixelAnchor anchor;
  std::size_t window = kProfileWindow;
  std::uint64_t seed = 0;
  RescaleMode rescale = RescaleMode::kMaxFraction;
  std::string ssim_reference = "original gray, target region";
  std::string enhancement_mode;
  std::size_t frames = 0;

  void validate() const;
  std::string to_json() const;
};

/// CSV with header frame,original,enhanced,gt and six decimals.
std::string profiles_csv(const TemperatureProfile& original, const TemperatureProfile& enhanced,
                         const TemperatureProfile& gt);

}  // namespace thermocal
