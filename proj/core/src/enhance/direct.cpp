#include "thermocal/enhance/direct.hpp"

#include <algorithm>
#include <cmath>

namespace thermocal::enhance {

void DirectConfig::validate() const {
  if (steps == 0) throw ConfigError("direct optimization needs at least one step");
  if (!(learning_rate > 0.0)) throw ConfigError("direct learning_rate must be > 0");
  if (!(max_step > 0.0)) throw ConfigError("direct max_step must be > 0");
  if (bandwidth_start == 0) throw ConfigError("direct bandwidth_start must be positive");
  if (!(anneal_fraction >= 0.0 && anneal_fraction <= 1.0)) {
    throw ConfigError("direct anneal_fraction must lie in [0, 1]");
  }
}

std::size_t DirectConfig::bandwidth_at(std::size_t step) const {
  const double span = anneal_fraction * static_cast<double>(steps);
  if (bandwidth_start <= 1 || static_cast<double>(step) >= span) return 1;
  const double f = 1.0 - static_cast<double>(step) / span;
  const double h = std::pow(static_cast<double>(bandwidth_start), f);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(h)));
}

DirectResult optimize_theta_direct(const RegionImage& target, const RegionImage& reference,
                                   const DirectConfig& cfg) {
  cfg.validate();
  require_same_shape(target.plane, reference.plane, "optimize_theta_direct");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < target.mask.bitmap.size(); ++i) {
    if (target.mask.bitmap[i] != 0) idx.push_back(i);
  }
  if (idx.empty()) throw ArgumentError("target mask is empty");
  const std::size_t n = idx.size();
  std::vector<double> c0(n);
  for (std::size_t i = 0; i < n; ++i) c0[i] = target.plane[idx[i]];
  const std::vector<double> ref_values = reference.masked_values();

  SoftLossTarget ref = make_soft_target(ref_values, cfg.bins, kDefaultHistogramSmoothing, cfg.bandwidth_at(0));
  std::vector<double> theta(kCurveIterations * n, 0.0), grad(kCurveIterations * n);
  std::vector<double> gout(n);

  auto evaluate = [&](const std::vector<double>& th, bool with_grad) {
    const CurveTape tape = curve_forward_tape(c0, th);
    const double loss = soft_loss(tape.output(), ref, with_grad ? std::span<double>(gout) : std::span<double>()).total;
    if (with_grad) {
      std::fill(grad.begin(), grad.end(), 0.0);
      curve_backward(tape, th, gout, grad);
    }
    return loss;
  };
  auto reported = [&](const std::vector<double>& th) {
    const CurveTape tape = curve_forward_tape(c0, th);
    const auto out = tape.output();
    return loss_total_values(std::vector<double>(out.begin(), out.end()), ref_values, cfg.bins);
  };

  DirectResult result;
  result.initial = reported(theta);
  result.final = result.initial;
  std::vector<double> best = theta;
  result.trace.push_back(result.initial.total);

  double loss = evaluate(theta, true);
  if (!std::isfinite(loss)) throw OptimizationError("direct optimization: non-finite loss at step 0");

  const double scale = static_cast<double>(n);
  double lr = cfg.learning_rate;
  std::vector<double> candidate(theta.size());
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const std::size_t bw = cfg.bandwidth_at(step);
    if (bw != ref.bandwidth) {
      ref = make_soft_target(ref_values, cfg.bins, kDefaultHistogramSmoothing, bw);
      loss = evaluate(theta, true);
      lr = std::max(lr, cfg.learning_rate);
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double delta = std::clamp(lr * scale * grad[i], -cfg.max_step, cfg.max_step);
      candidate[i] = std::clamp(theta[i] - delta, -1.0, 1.0);
    }
    const double trial = evaluate(candidate, false);
    if (!std::isfinite(trial)) {
      throw OptimizationError("direct optimization: non-finite loss at step " + std::to_string(step));
    }
    if (trial < loss) {
      theta.swap(candidate);
      loss = evaluate(theta, true);
      lr *= 1.1;
      ++result.accepted_steps;
      const LossBreakdown r = reported(theta);
      if (r.total < result.final.total) {
        result.final = r;
        best = theta;
      }
    } else {
      lr *= 0.5;
    }
    result.trace.push_back(result.final.total);
  }

  result.params = CurveParams::zeros(target.plane.width(), target.plane.height());
  for (std::size_t k = 0; k < kCurveIterations; ++k) {
    for (std::size_t i = 0; i < n; ++i) result.params.theta[k][idx[i]] = best[k * n + i];
  }
  return result;
}

}  // namespace thermocal::enhance
