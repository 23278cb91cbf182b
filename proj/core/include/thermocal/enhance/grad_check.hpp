#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace thermocal::enhance {

using ScalarFunction = std::function<double(std::span<const double>)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates to check; empty means all of them.
  std::vector<std::size_t> coordinates;
  /// Skip coordinates where a kink sits inside the stencil: the one-sided differences
  /// disagree, or central differences at h and h/2 disagree.
  bool skip_kinks = false;
  double kink_tolerance = 1e-2;
  /// Added to the error denominator so gradients below the round-off level of the
  /// differences are judged absolutely; 0 gives the plain relative error.
  double absolute_floor = 0.0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Central differences against an analytic gradient. Per coordinate the error is
/// |g_a - g_fd| / (|g_a| + |g_fd| + floor + 1e-12); the maximum is reported.
GradCheckResult grad_check(const ScalarFunction& f, std::span<const double> point,
                           std::span<const double> analytic, const GradCheckOptions& options = {});

}  // namespace thermocal::enhance
