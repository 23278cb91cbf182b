#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "thermocal/enhance/tensor.hpp"
#include "thermocal/regions.hpp"

namespace thermocal::enhance {

inline constexpr std::size_t kCurveIterations = 8;

/// The eight per-pixel curve parameter maps, each bounded to [-1, 1].
struct CurveParams {
  std::array<Plane, kCurveIterations> theta;

  static CurveParams zeros(std::size_t width, std::size_t height);
  static CurveParams constant(std::size_t width, std::size_t height, double value);
  /// Splits an 8-channel tensor into maps.
  static CurveParams from_tensor(const Tensor3& t);
  Tensor3 to_tensor() const;

  void validate(std::size_t width, std::size_t height) const;
  /// CSV with header x,y,theta1..theta8.
  std::string to_csv() const;
};

/// C_n = C_{n-1} + theta_n C_{n-1} (1 - C_{n-1}), n = 1..8, on masked pixels.
Plane curve_forward(const RegionImage& region, const CurveParams& params);

/// Pixel buffers for backprop. `theta` is 8 x n (map-major, same as a Tensor3).
struct CurveTape {
  std::size_t pixels = 0;
  std::vector<double> iterates;  ///< (kCurveIterations + 1) x pixels
  std::span<const double> output() const {
    return std::span<const double>(iterates).subspan(kCurveIterations * pixels, pixels);
  }
};

CurveTape curve_forward_tape(std::span<const double> input, std::span<const double> theta);

/// Accumulates dL/dtheta into grad_theta (8 x n). grad_input may be empty.
void curve_backward(const CurveTape& tape, std::span<const double> theta,
                    std::span<const double> grad_output, std::span<double> grad_theta,
                    std::span<double> grad_input = {});

}  // namespace thermocal::enhance
