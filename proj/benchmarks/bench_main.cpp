#include <benchmark/benchmark.h>

#include "thermocal/enhance/curve.hpp"
#include "thermocal/enhance/loss.hpp"
#include "thermocal/enhance/network.hpp"
#include "thermocal/enhance/skip_cnn.hpp"
#include "thermocal/radiometry.hpp"
#include "thermocal/rng.hpp"

using namespace thermocal;
using namespace thermocal::enhance;

namespace {

RegionImage random_region(std::size_t w, std::size_t h, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  RegionImage r;
  r.plane = Plane(w, h);
  r.mask.bitmap = Bitmap(w, h, 1);
  for (std::size_t i = 0; i < r.plane.size(); ++i) r.plane[i] = rng.uniform(lo, hi);
  return r;
}

void BM_Conv3x3(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor3 in(kFeatureChannels, side, side);
  for (auto& v : in.data) v = rng.uniform(-1.0, 1.0);
  std::vector<double> w(kFeatureChannels * kFeatureChannels * 9), b(kFeatureChannels);
  for (auto& v : w) v = rng.normal(0.0, 0.1);
  const ConvView conv{w, b, kFeatureChannels, kFeatureChannels};
  for (auto _ : state) benchmark::DoNotOptimize(conv3x3(in, conv));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Arg(64);

void BM_CurveForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const RegionImage r = random_region(side, side, 0.0, 1.0, 2);
  const CurveParams p = CurveParams::constant(side, side, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(curve_forward(r, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_CurveForward)->Arg(64)->Arg(256);

void BM_SoftLoss(benchmark::State& state) {
  const RegionImage a = random_region(64, 64, 0.2, 0.4, 3);
  const RegionImage b = random_region(64, 64, 0.5, 0.7, 4);
  const auto target = make_soft_target(b.masked_values(), kDefaultHistogramBins, kDefaultHistogramSmoothing,
                                       static_cast<std::size_t>(state.range(0)));
  const auto values = a.masked_values();
  std::vector<double> grad(values.size());
  for (auto _ : state) benchmark::DoNotOptimize(soft_loss(values, target, grad));
}
BENCHMARK(BM_SoftLoss)->Arg(1)->Arg(8);

void BM_NetworkStep(benchmark::State& state) {
  const RegionPair pair{random_region(32, 48, 0.1, 0.3, 5), random_region(32, 48, 0.6, 0.8, 6)};
  const NetworkWeights w = NetworkWeights::initialize(7);
  NetworkWeights grads = NetworkWeights::zeros();
  for (auto _ : state) benchmark::DoNotOptimize(network_loss(w, pair, &grads));
}
BENCHMARK(BM_NetworkStep)->Unit(benchmark::kMillisecond);

void BM_CorrectFrame(benchmark::State& state) {
  Plane temps(64, 48), eps(64, 48, 0.5);
  Rng rng(8);
  for (std::size_t i = 0; i < temps.size(); ++i) temps[i] = rng.uniform(20.0, 40.0);
  const EnvironmentConditions env;
  for (auto _ : state) benchmark::DoNotOptimize(correct_frame(temps, eps, env));
}
BENCHMARK(BM_CorrectFrame);

}  // namespace

BENCHMARK_MAIN();
