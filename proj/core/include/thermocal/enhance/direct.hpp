#pragma once

#include <cstddef>
#include <vector>

#include "thermocal/enhance/curve.hpp"
#include "thermocal/enhance/loss.hpp"

namespace thermocal::enhance {

struct DirectConfig {
  std::size_t steps = 300;
  double learning_rate = 0.5;  ///< initial step, scaled by the pixel count
  double max_step = 0.02;      ///< per-element cap on a single theta update
  std::size_t bins = kDefaultHistogramBins;
  /// Soft-histogram kernel half-width (bins) at step 0, shrunk geometrically to 1
  /// over the first anneal_fraction of the steps.
  std::size_t bandwidth_start = 32;
  double anneal_fraction = 0.6;

  void validate() const;
  std::size_t bandwidth_at(std::size_t step) const;
};

struct DirectResult {
  CurveParams params;
  std::vector<double> trace;  ///< reported loss of the best iterate after every step (non-increasing)
  LossBreakdown initial;      ///< reported loss at theta = 0
  LossBreakdown final;        ///< reported loss of the result
  std::size_t accepted_steps = 0;
};

/// Network-free fit of the eight theta maps to one (target, reference) pair.
/// Projected gradient descent on the soft loss from theta = 0 with backtracking:
/// a step that raises the loss is rejected and the rate halved, an accepted one
/// grows it by 10%. The iterate with the lowest reported loss is returned.
DirectResult optimize_theta_direct(const RegionImage& target, const RegionImage& reference,
                                   const DirectConfig& cfg = {});

}  // namespace thermocal::enhance
