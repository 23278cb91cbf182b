#pragma once

#include <filesystem>
#include <string>

#include "thermocal/grid.hpp"
#include "thermocal/regions.hpp"
#include "thermocal/rng.hpp"

namespace thermocal::test {

inline RegionImage random_region(std::size_t w, std::size_t h, double lo, double hi, std::uint64_t seed,
                                 bool full_mask = true) {
  Rng rng(seed);
  RegionImage r;
  r.plane = Plane(w, h);
  r.mask.bitmap = Bitmap(w, h, 1);
  for (std::size_t i = 0; i < r.plane.size(); ++i) {
    if (!full_mask && rng.uniform() < 0.25) {
      r.mask.bitmap[i] = 0;
      continue;
    }
    r.plane[i] = rng.uniform(lo, hi);
  }
  return r;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(THERMOCAL_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace thermocal::test
