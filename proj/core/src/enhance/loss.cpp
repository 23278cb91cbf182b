#include "thermocal/enhance/loss.hpp"

#include <algorithm>
#include <cmath>

namespace thermocal::enhance {

double loss_stat(const RegionStats& en, const RegionStats& ref) {
  const double dm = en.mean - ref.mean;
  const double ds = en.stddev - ref.stddev;
  return 0.5 * (dm * dm + ds * ds);
}

double loss_hist(const Histogram& en, const Histogram& ref) {
  if (en.bin_count() != ref.bin_count()) {
    throw ArgumentError("loss_hist: bin count mismatch (" + std::to_string(en.bin_count()) +
                        " vs " + std::to_string(ref.bin_count()) + ")");
  }
  double kl_er = 0.0, kl_re = 0.0;
  for (std::size_t k = 0; k < en.bin_count(); ++k) {
    const double p = en.densities[k], q = ref.densities[k];
    kl_er += p * std::log(p / q);
    kl_re += q * std::log(q / p);
  }
  return std::max(0.0, 0.5 * (kl_er + kl_re));
}

LossBreakdown loss_total_values(const std::vector<double>& enhanced,
                                const std::vector<double>& reference, std::size_t bins) {
  LossBreakdown l;
  l.stat = loss_stat(value_stats(enhanced), value_stats(reference));
  l.hist = loss_hist(value_histogram(enhanced, bins), value_histogram(reference, bins));
  l.total = l.stat + l.hist;
  return l;
}

LossBreakdown loss_total(const RegionImage& enhanced, const RegionImage& reference,
                         std::size_t bins) {
  return loss_total_values(enhanced.masked_values(), reference.masked_values(), bins);
}

namespace {

/// Calls tap(bin, weight, dweight_du) for every kernel tap of value v.
template <typename Tap>
void for_each_tap(double v, std::size_t bins, std::size_t bandwidth, Tap&& tap) {
  const double u = v * static_cast<double>(bins) - 0.5;
  const double h = static_cast<double>(bandwidth);
  const auto base = static_cast<std::ptrdiff_t>(std::floor(u));
  const auto hb = static_cast<std::ptrdiff_t>(bandwidth);
  const auto last = static_cast<std::ptrdiff_t>(bins) - 1;
  for (std::ptrdiff_t k = base - hb + 1; k <= base + hb; ++k) {
    const double d = u - static_cast<double>(k);
    const double w = (1.0 - std::abs(d) / h) / h;
    if (w <= 0.0) continue;
    const double dw = (d >= 0.0 ? -1.0 : 1.0) / (h * h);
    tap(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, last)), w, dw);
  }
}

void check_soft_args(std::size_t bins, std::size_t bandwidth) {
  if (bins < 2) throw ArgumentError("histogram needs at least two bins");
  if (bandwidth == 0) throw ArgumentError("soft histogram bandwidth must be positive");
}

}  // namespace

std::vector<double> soft_histogram(std::span<const double> values, std::size_t bins,
                                   double epsilon, std::size_t bandwidth) {
  check_soft_args(bins, bandwidth);
  if (values.empty()) throw ArgumentError("histogram of an empty region");
  std::vector<double> h(bins, 0.0);
  for (double v : values) {
    for_each_tap(v, bins, bandwidth, [&](std::size_t k, double w, double) { h[k] += w; });
  }
  const double n = static_cast<double>(values.size());
  const double norm = 1.0 + static_cast<double>(bins) * epsilon;
  for (auto& c : h) c = (c / n + epsilon) / norm;
  return h;
}

SoftLossTarget make_soft_target(std::span<const double> reference_values, std::size_t bins,
                                double epsilon, std::size_t bandwidth) {
  SoftLossTarget t;
  t.stats = value_stats(std::vector<double>(reference_values.begin(), reference_values.end()));
  t.histogram = soft_histogram(reference_values, bins, epsilon, bandwidth);
  t.epsilon = epsilon;
  t.bandwidth = bandwidth;
  return t;
}

LossBreakdown soft_loss(std::span<const double> values, const SoftLossTarget& target,
                        std::span<double> grad) {
  const std::size_t bins = target.histogram.size();
  const double n = static_cast<double>(values.size());
  const RegionStats st = value_stats(std::vector<double>(values.begin(), values.end()));
  const auto h = soft_histogram(values, bins, target.epsilon, target.bandwidth);

  LossBreakdown l;
  l.stat = loss_stat(st, target.stats);
  double kl = 0.0;
  std::vector<double> dh(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double p = h[k], q = target.histogram[k];
    const double lr = std::log(p / q);
    kl += p * lr - q * lr;
    dh[k] = 0.5 * (lr + 1.0 - q / p);
  }
  l.hist = std::max(0.0, 0.5 * kl);
  l.total = l.stat + l.hist;

  if (!grad.empty()) {
    const double dmean = (st.mean - target.stats.mean) / n;
    const double dstd = st.stddev > 0.0 ? (st.stddev - target.stats.stddev) / (n * st.stddev) : 0.0;
    const double bin_scale = static_cast<double>(bins) / (n * (1.0 + static_cast<double>(bins) * target.epsilon));
    for (std::size_t i = 0; i < values.size(); ++i) {
      double g = dmean + dstd * (values[i] - st.mean);
      double gh = 0.0;
      for_each_tap(values[i], bins, target.bandwidth, [&](std::size_t k, double, double dw) { gh += dh[k] * dw; });
      grad[i] = g + gh * bin_scale;
    }
  }
  return l;
}

}  // namespace thermocal::enhance
