#pragma once

#include <filesystem>
#include <string>

#include "thermocal/grid.hpp"
#include "thermocal/regions.hpp"

namespace thermocal::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Binary PGM (P5), 8- or 16-bit (big-endian), scaled to [0,1] by maxval.
Plane read_gray_pgm(const fs::path& path);
/// 16-bit big-endian P5 with maxval 65535; values clamped to [0,1].
void write_gray_pgm16(const fs::path& path, const Plane& plane);
/// 8-bit P5 with maxval 255; values clamped to [0,1].
void write_gray_pgm8(const fs::path& path, const Plane& plane);

/// 8-bit mask PGM: 0 outside, anything else inside (stored back as 255).
Bitmap read_mask_pgm(const fs::path& path);
void write_mask_pgm(const fs::path& path, const Bitmap& mask);

/// Binary PPM (P6), 8-bit.
RgbImage read_ppm(const fs::path& path);
void write_ppm(const fs::path& path, const RgbImage& image);

/// 8-bit RGB or RGBA PNG (alpha dropped).
RgbImage read_png_rgb(const fs::path& path);
void write_png_rgb(const fs::path& path, const RgbImage& image);

/// Pixels whose colour matches exactly.
RegionMask mask_from_labels(const RgbImage& labels, Rgb colour, std::string material_label);

/// Row-major CSV of degrees Celsius, six decimals, no header.
Plane read_temperature_csv(const fs::path& path);
void write_temperature_csv(const fs::path& path, const Plane& temps);
std::string temperature_csv(const Plane& temps);

}  // namespace thermocal::io
