#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thermocal/grid.hpp"

namespace thermocal::enhance {

/// Channel-major feature map (C x H x W).
struct Tensor3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::size_t plane_size() const noexcept { return height * width; }
  double& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data[(c * height + y) * width + x];
  }
  std::span<double> channel(std::size_t c) noexcept {
    return std::span<double>(data).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> channel(std::size_t c) const noexcept {
    return std::span<const double>(data).subspan(c * plane_size(), plane_size());
  }
};

/// Dense row-major matrix of tokens (rows) by features (cols).
struct TokenMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  TokenMatrix() = default;
  TokenMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
};

inline Tensor3 tensor_from_plane(const Plane& p) {
  Tensor3 t(1, p.height(), p.width());
  for (std::size_t i = 0; i < p.size(); ++i) t.data[i] = p[i];
  return t;
}

}  // namespace thermocal::enhance
