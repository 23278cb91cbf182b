#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thermocal/regions.hpp"

namespace thermocal::enhance {

struct LossBreakdown {
  double total = 0.0;
  double stat = 0.0;
  double hist = 0.0;
};

/// 1/2 [(mu_en - mu_ref)^2 + (sigma_en - sigma_ref)^2]
double loss_stat(const RegionStats& en, const RegionStats& ref);

/// Symmetric KL divergence (natural log) between two smoothed histograms.
double loss_hist(const Histogram& en, const Histogram& ref);

/// Reported loss: hard-binned histograms over masked pixels.
LossBreakdown loss_total(const RegionImage& enhanced, const RegionImage& reference,
                         std::size_t bins = kDefaultHistogramBins);
LossBreakdown loss_total_values(const std::vector<double>& enhanced,
                                const std::vector<double>& reference,
                                std::size_t bins = kDefaultHistogramBins);

/// Triangular-kernel histogram. A value at bin coordinate u = v*B - 0.5 gives
/// bin k the weight max(0, 1 - |u - k| / h) / h; weight falling past either end
/// is folded into the edge bin. With h = 1 each value splits its unit mass
/// between the two nearest bin centres. Smoothed and renormalized like the hard histogram.
std::vector<double> soft_histogram(std::span<const double> values, std::size_t bins,
                                   double epsilon = kDefaultHistogramSmoothing,
                                   std::size_t bandwidth = 1);

/// Precomputed reference side of the training loss.
struct SoftLossTarget {
  RegionStats stats;
  std::vector<double> histogram;
  double epsilon = kDefaultHistogramSmoothing;
  std::size_t bandwidth = 1;  ///< kernel half-width in bins
};

SoftLossTarget make_soft_target(std::span<const double> reference_values,
                                std::size_t bins = kDefaultHistogramBins,
                                double epsilon = kDefaultHistogramSmoothing,
                                std::size_t bandwidth = 1);

/// Differentiable L_stat + soft L_hist over masked values. When `grad` is
/// non-empty it receives dL/dvalue (overwritten).
LossBreakdown soft_loss(std::span<const double> values, const SoftLossTarget& target,
                        std::span<double> grad = {});

}  // namespace thermocal::enhance
