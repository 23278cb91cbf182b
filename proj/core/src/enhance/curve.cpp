#include "thermocal/enhance/curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace thermocal::enhance {

CurveParams CurveParams::zeros(std::size_t width, std::size_t height) {
  return constant(width, height, 0.0);
}

CurveParams CurveParams::constant(std::size_t width, std::size_t height, double value) {
  CurveParams p;
  for (auto& m : p.theta) m = Plane(width, height, value);
  return p;
}

CurveParams CurveParams::from_tensor(const Tensor3& t) {
  if (t.channels != kCurveIterations) {
    throw ShapeError("curve parameters need " + std::to_string(kCurveIterations) +
                     " channels, got " + std::to_string(t.channels));
  }
  CurveParams p;
  for (std::size_t k = 0; k < kCurveIterations; ++k) {
    const auto ch = t.channel(k);
    p.theta[k] = Plane(t.width, t.height, std::vector<double>(ch.begin(), ch.end()));
  }
  return p;
}

Tensor3 CurveParams::to_tensor() const {
  Tensor3 t(kCurveIterations, theta[0].height(), theta[0].width());
  for (std::size_t k = 0; k < kCurveIterations; ++k) {
    std::copy(theta[k].values().begin(), theta[k].values().end(), t.channel(k).begin());
  }
  return t;
}

void CurveParams::validate(std::size_t width, std::size_t height) const {
  for (const auto& m : theta) {
    if (m.width() != width || m.height() != height) {
      throw ShapeError("curve parameter map does not match the region size");
    }
    for (double v : m.values()) {
      if (!(std::abs(v) <= 1.0)) throw ArgumentError("curve parameter outside [-1, 1]");
    }
  }
}

std::string CurveParams::to_csv() const {
  std::string out = "x,y";
  for (std::size_t k = 1; k <= kCurveIterations; ++k) out += ",theta" + std::to_string(k);
  out += '\n';
  char buf[64];
  for (std::size_t y = 0; y < theta[0].height(); ++y) {
    for (std::size_t x = 0; x < theta[0].width(); ++x) {
      out += std::to_string(x) + ',' + std::to_string(y);
      for (const auto& m : theta) {
        std::snprintf(buf, sizeof buf, ",%.9f", m(x, y));
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

Plane curve_forward(const RegionImage& region, const CurveParams& params) {
  params.validate(region.plane.width(), region.plane.height());
  Plane out(region.plane.width(), region.plane.height(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (region.mask.bitmap[i] == 0) continue;
    double c = region.plane[i];
    for (const auto& m : params.theta) c = c + m[i] * c * (1.0 - c);
    out[i] = c;
  }
  return out;
}

CurveTape curve_forward_tape(std::span<const double> input, std::span<const double> theta) {
  const std::size_t n = input.size();
  if (theta.size() != kCurveIterations * n) throw ShapeError("curve tape: theta size mismatch");
  CurveTape tape{n, std::vector<double>((kCurveIterations + 1) * n)};
  std::copy(input.begin(), input.end(), tape.iterates.begin());
  for (std::size_t k = 0; k < kCurveIterations; ++k) {
    const double* prev = tape.iterates.data() + k * n;
    double* next = tape.iterates.data() + (k + 1) * n;
    const double* th = theta.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) next[i] = prev[i] + th[i] * prev[i] * (1.0 - prev[i]);
  }
  return tape;
}

void curve_backward(const CurveTape& tape, std::span<const double> theta,
                    std::span<const double> grad_output, std::span<double> grad_theta,
                    std::span<double> grad_input) {
  const std::size_t n = tape.pixels;
  std::vector<double> g(grad_output.begin(), grad_output.end());
  for (std::size_t k = kCurveIterations; k-- > 0;) {
    const double* prev = tape.iterates.data() + k * n;
    const double* th = theta.data() + k * n;
    double* gt = grad_theta.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = prev[i];
      gt[i] += g[i] * c * (1.0 - c);
      g[i] *= 1.0 + th[i] * (1.0 - 2.0 * c);
    }
  }
  if (!grad_input.empty()) {
    for (std::size_t i = 0; i < n; ++i) grad_input[i] += g[i];
  }
}

}  // namespace thermocal::enhance
