#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermocal/grid.hpp"
#include "thermocal/radiometry.hpp"

namespace thermocal {

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Grid<Rgb>;

struct RegionMask {
  Bitmap bitmap;  ///< nonzero = inside
  std::string material_label;

  std::size_t width() const noexcept { return bitmap.width(); }
  std::size_t height() const noexcept { return bitmap.height(); }
  bool contains(std::size_t x, std::size_t y) const noexcept { return bitmap(x, y) != 0; }
  std::size_t area() const noexcept;
};

/// Inclusive-exclusive bounding box of a mask.
struct BoundingBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::size_t width() const noexcept { return x1 - x0; }
  std::size_t height() const noexcept { return y1 - y0; }
};
BoundingBox bounding_box(const RegionMask& mask);

/// Masked single-material plane; exactly zero outside the mask.
struct RegionImage {
  Plane plane;
  RegionMask mask;
  std::optional<Emissivity> emissivity;

  /// Masked pixel values in raster order.
  std::vector<double> masked_values() const;
};

struct RegionStats {
  double mean = 0.0;
  double stddev = 0.0;  ///< population standard deviation
};

struct Histogram {
  std::vector<double> densities;
  std::size_t bin_count() const noexcept { return densities.size(); }
};

inline constexpr std::size_t kDefaultHistogramBins = 64;
inline constexpr double kDefaultHistogramSmoothing = 1e-8;

/// 4-connected components, ordered by area (descending) then raster position of
/// their first pixel. An all-zero image yields an empty list.
std::vector<RegionMask> connected_components(const Bitmap& binary);

/// BT.601 full-range luma scaled to [0,1].
Plane rgb_to_luma(const RgbImage& rgb);

/// Bilinear resampling with half-pixel centres; output size is round(factor * input).
Plane bilinear_resize(const Plane& plane, double factor);
/// Same mapping to an explicit output size.
Plane bilinear_resize(const Plane& plane, std::size_t out_width, std::size_t out_height);

RegionImage extract_region(const Plane& gray, const RegionMask& mask);
RegionImage with_emissivity(RegionImage region, Emissivity eps);

/// tanh(I / eps) on masked pixels.
RegionImage emissivity_normalize(const RegionImage& region);

RegionStats region_stats(const RegionImage& region);
RegionStats value_stats(const std::vector<double>& values);

/// Equal-width bins on [0,1], additive smoothing per bin, renormalized.
Histogram region_histogram(const RegionImage& region, std::size_t bins = kDefaultHistogramBins,
                           double epsilon = kDefaultHistogramSmoothing);
Histogram value_histogram(const std::vector<double>& values, std::size_t bins,
                          double epsilon = kDefaultHistogramSmoothing);

}  // namespace thermocal
