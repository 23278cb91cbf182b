#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "thermocal/metrics.hpp"

namespace thermocal {

/// Line chart of temperature profiles against frame index: original in gray,
/// GT in black, enhanced in red. Single-frame series are drawn as markers.
std::string render_profile_svg(std::span<const TemperatureProfile> profiles);
void emit_plot(std::span<const TemperatureProfile> profiles, const std::filesystem::path& path);

}  // namespace thermocal
