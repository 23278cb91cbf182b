#include "thermocal/enhance/grad_check.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "thermocal/error.hpp"

namespace thermocal::enhance {

GradCheckResult grad_check(const ScalarFunction& f, std::span<const double> point,
                           std::span<const double> analytic, const GradCheckOptions& options) {
  if (analytic.size() != point.size()) throw ShapeError("grad_check: gradient size mismatch");
  if (!(options.step > 0.0)) throw ArgumentError("grad_check: step must be > 0");

  std::vector<std::size_t> coords = options.coordinates;
  if (coords.empty()) {
    coords.resize(point.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
  }

  std::vector<double> x(point.begin(), point.end());
  const double h = options.step;
  const double f0 = options.skip_kinks ? f(x) : 0.0;
  GradCheckResult r;
  for (std::size_t i : coords) {
    if (i >= x.size()) throw ArgumentError("grad_check: coordinate out of range");
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw DomainError("grad_check: non-finite value at coordinate " + std::to_string(i));
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double floor = options.absolute_floor + 1e-12;
    if (options.skip_kinks) {
      const double fwd = (fp - f0) / h, bwd = (f0 - fm) / h;
      x[i] = orig + 0.5 * h;
      const double fph = f(x);
      x[i] = orig - 0.5 * h;
      const double fmh = f(x);
      x[i] = orig;
      const double fd_half = (fph - fmh) / h;
      const bool one_sided = std::abs(fwd - bwd) > options.kink_tolerance * (std::abs(fwd) + std::abs(bwd) + 1e-8);
      const bool halved = std::abs(fd - fd_half) > options.kink_tolerance * (std::abs(fd) + std::abs(fd_half) + floor);
      if (one_sided || halved) {
        ++r.skipped;
        continue;
      }
    }
    const double ga = analytic[i];
    const double err = std::abs(ga - fd) / (std::abs(ga) + std::abs(fd) + floor);
    if (r.checked == 0 || err > r.max_relative_error) {
      r.max_relative_error = err;
      r.worst_coordinate = i;
    }
    ++r.checked;
  }
  return r;
}

}  // namespace thermocal::enhance
