#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "thermocal/error.hpp"

namespace thermocal {

/// Row-major 2-D array addressed as (x, y).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<T> values)
      : width_(width), height_(height), data_(std::move(values)) {
    if (data_.size() != width_ * height_) {
      throw ShapeError("grid data size " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(width_) + "x" +
                       std::to_string(height_));
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const noexcept {
    return data_[y * width_ + x];
  }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::span<const T> row(std::size_t y) const noexcept {
    return std::span<const T>(data_).subspan(y * width_, width_);
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

using Plane = Grid<double>;
using Bitmap = Grid<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw ShapeError(what + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()) + ")");
  }
}

/// Paired gray image and per-pixel temperature grid for one timestamp.
struct ThermalFrame {
  Plane gray;  ///< gray fraction in [0,1]
  Plane temp;  ///< degrees Celsius
};

}  // namespace thermocal
