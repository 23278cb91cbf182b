#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "thermocal/enhance/curve.hpp"
#include "thermocal/enhance/direct.hpp"
#include "thermocal/enhance/grad_check.hpp"
#include "thermocal/enhance/loss.hpp"
#include "thermocal/error.hpp"

using namespace thermocal;
using namespace thermocal::enhance;

namespace {

double direct_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

std::vector<double> random_histogram(Rng& rng, std::size_t bins) {
  std::vector<double> h(bins);
  double s = 0.0;
  for (auto& v : h) s += (v = rng.uniform(0.01, 1.0));
  for (auto& v : h) v /= s;
  return h;
}

}  // namespace

TEST_CASE("curve recurrence") {
  RegionImage r{Plane(3, 1, std::vector<double>{0.5, 0.0, 1.0}), RegionMask{Bitmap(3, 1, 1), "t"}, {}};
  CHECK(curve_forward(r, CurveParams::zeros(3, 1)) == r.plane);

  auto p = CurveParams::zeros(3, 1);
  p.theta[0] = Plane(3, 1, 0.7);
  const Plane one = curve_forward(r, p);
  CHECK(one[0] == doctest::Approx(0.675).epsilon(1e-15));

  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto q = CurveParams::constant(3, 1, rng.uniform(-1.0, 1.0));
    const Plane out = curve_forward(r, q);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 1.0);
  }

  RegionImage masked{Plane(2, 1, std::vector<double>{0.4, 0.4}), RegionMask{Bitmap(2, 1, std::vector<std::uint8_t>{1, 0}), "t"}, {}};
  CHECK(curve_forward(masked, CurveParams::constant(2, 1, 0.5))[1] == 0.0);
  CHECK_THROWS_AS(curve_forward(r, CurveParams::zeros(2, 2)), ShapeError);
}

TEST_CASE("curve iterates stay in the unit interval") {
  Rng rng(77);
  std::size_t count = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const double c = rng.uniform(), th = rng.uniform(-1.0, 1.0);
    const double next = c + th * c * (1.0 - c);
    if (next >= c * c - 1e-15 && next <= c * (2.0 - c) + 1e-15 && next >= 0.0 && next <= 1.0) ++count;
  }
  CHECK(count == 1'000'000);
  const auto reg = test::random_region(16, 16, 0.0, 1.0, 3);
  CurveParams p = CurveParams::zeros(16, 16);
  for (auto& m : p.theta)
    for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  for (double v : curve_forward(reg, p).values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("curve output is non-decreasing in every theta") {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> th(kCurveIterations);
    for (auto& v : th) v = rng.uniform(-1.0, 1.0);
    const std::vector<double> c0{rng.uniform()};
    const double base = curve_forward_tape(c0, th).output()[0];
    const std::size_t k = rng.index(kCurveIterations);
    th[k] = std::min(1.0, th[k] + rng.uniform(0.0, 0.5));
    CHECK(curve_forward_tape(c0, th).output()[0] >= base);
  }
}

TEST_CASE("loss_stat") {
  CHECK(loss_stat({0.4, 0.1}, {0.4, 0.1}) == 0.0);
  CHECK(loss_stat({0.5, 0.2}, {0.3, 0.1}) == doctest::Approx(0.025).epsilon(1e-12));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const RegionStats a{rng.uniform(), rng.uniform()}, b{rng.uniform(), rng.uniform()};
    CHECK(loss_stat(a, b) >= 0.0);
    CHECK(loss_stat(a, b) == loss_stat(b, a));
  }
}

TEST_CASE("loss_hist") {
  const Histogram h1{{0.5, 0.5}}, h2{{0.9, 0.1}};
  const double hand = 0.5 * (0.5 * std::log(5.0 / 9.0) + 0.5 * std::log(5.0) + 0.9 * std::log(9.0 / 5.0) +
                             0.1 * std::log(1.0 / 5.0));
  CHECK(loss_hist(h1, h2) == doctest::Approx(hand).epsilon(1e-14));
  CHECK(loss_hist(h1, h2) == doctest::Approx(0.4394449154672439).epsilon(1e-12));
  CHECK(loss_hist(h1, h1) == 0.0);
  CHECK_THROWS_AS(loss_hist(h1, Histogram{{0.2, 0.3, 0.5}}), ArgumentError);
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Histogram a{random_histogram(rng, 16)}, b{random_histogram(rng, 16)};
    CHECK(loss_hist(a, b) >= 0.0);
    CHECK(loss_hist(a, b) == doctest::Approx(loss_hist(b, a)).epsilon(1e-14));
    CHECK(loss_hist(a, b) == doctest::Approx(0.5 * (direct_kl(a.densities, b.densities) +
                                                    direct_kl(b.densities, a.densities))).epsilon(1e-12));
  }
}

TEST_CASE("loss_total") {
  const auto ref = test::random_region(12, 12, 0.5, 0.7, 1);
  const auto same = loss_total(ref, ref);
  CHECK(same.total == 0.0);
  const auto en = test::random_region(12, 12, 0.2, 0.6, 2);
  const auto l = loss_total(en, ref);
  CHECK(l.total == l.stat + l.hist);
  CHECK(l.stat > 0.0);

  // Same multiset of values, different layout and unmasked padding.
  RegionImage shuffled = ref;
  Rng rng(4);
  std::vector<double> v = ref.masked_values();
  rng.shuffle(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i) shuffled.plane[i] = v[i];
  CHECK(loss_total(shuffled, ref).total == doctest::Approx(0.0).epsilon(1e-15));

  double prev = -1.0;
  for (double gap = 0.0; gap <= 0.3; gap += 0.05) {
    RegionImage moved = ref;
    for (auto& x : moved.plane.values()) x -= gap;
    const double s = loss_total(moved, ref).stat;
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("soft histogram") {
  Rng rng(6);
  std::vector<double> v(500);
  for (auto& x : v) x = rng.uniform();
  for (std::size_t bw : {1, 2, 8}) {
    const auto h = soft_histogram(v, 64, kDefaultHistogramSmoothing, bw);
    double s = 0.0;
    for (double d : h) {
      CHECK(d > 0.0);
      s += d;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  // A value at a bin centre with unit bandwidth puts all its mass in that bin.
  const std::vector<double> centre{(10.0 + 0.5) / 64.0};
  CHECK(soft_histogram(centre, 64, 1e-12, 1)[10] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gradient check on a quadratic") {
  const std::vector<double> x{0.3, -1.2, 2.0, 0.7};
  auto f = [](std::span<const double> p) {
    return 3.0 * p[0] * p[0] + p[0] * p[1] - 2.0 * p[2] * p[2] + 0.5 * p[3] + p[1] * p[1];
  };
  const std::vector<double> g{6.0 * x[0] + x[1], x[0] + 2.0 * x[1], -4.0 * x[2], 0.5};
  CHECK(grad_check(f, x, g).max_relative_error < 1e-9);
  auto bad = [](std::span<const double> p) { return std::log(p[0]); };
  CHECK_THROWS_AS(grad_check(bad, std::vector<double>{-1.0}, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("gradient check skips kinks and honours the absolute floor") {
  // |x - 0.3e-5| has its kink inside the h = 1e-5 stencil around 0.
  auto f = [](std::span<const double> p) { return std::abs(p[0] - 0.3e-5) + 2.0 * p[1]; };
  const std::vector<double> x{0.0, 1.0}, g{-1.0, 2.0};
  CHECK(grad_check(f, x, g).max_relative_error > 0.1);
  GradCheckOptions opts;
  opts.skip_kinks = true;
  const auto r = grad_check(f, x, g, opts);
  CHECK(r.skipped == 1);
  CHECK(r.checked == 1);
  CHECK(r.max_relative_error < 1e-9);

  auto tiny = [](std::span<const double> p) { return 1e-12 * p[0]; };
  const std::vector<double> y{0.5}, wrong{2e-12};
  CHECK(grad_check(tiny, y, wrong).max_relative_error > 0.2);
  opts.absolute_floor = 1e-6;
  CHECK(grad_check(tiny, y, wrong, opts).max_relative_error < 1e-5);
}

TEST_CASE("soft loss through the curve matches finite differences") {
  GradCheckOptions opts;
  opts.skip_kinks = true;
  opts.kink_tolerance = 1e-3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto target = test::random_region(8, 8, 0.1, 0.5, 100 + seed);
    const auto reference = test::random_region(8, 8, 0.4, 0.8, 200 + seed);
    const std::size_t bw = 1 + seed % 4;
    const auto ref = make_soft_target(reference.masked_values(), kDefaultHistogramBins, kDefaultHistogramSmoothing, bw);
    const auto c0 = target.masked_values();
    std::vector<double> theta(kCurveIterations * c0.size());
    for (auto& t : theta) t = rng.uniform(-0.8, 0.8);

    auto f = [&](std::span<const double> th) { return soft_loss(curve_forward_tape(c0, th).output(), ref).total; };
    const auto tape = curve_forward_tape(c0, theta);
    std::vector<double> gout(c0.size()), grad(theta.size(), 0.0);
    soft_loss(tape.output(), ref, gout);
    curve_backward(tape, theta, gout, grad);
    const auto r = grad_check(f, theta, grad, opts);
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > theta.size() / 2);
  }
}

TEST_CASE("direct optimization") {
  SUBCASE("already matching") {
    const auto ref = test::random_region(12, 12, 0.5, 0.6, 1);
    const auto r = optimize_theta_direct(ref, ref);
    CHECK(r.initial.total == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.final.total <= 1e-12);
    for (const auto& m : r.params.theta)
      for (double v : m.values()) CHECK(std::abs(v) < 1e-6);
  }
  SUBCASE("dim target is lifted to the reference mean") {
    const auto target = test::random_region(16, 16, 0.25, 0.35, 2);
    const auto reference = test::random_region(16, 16, 0.55, 0.65, 3);
    const auto r = optimize_theta_direct(target, reference);
    CHECK(r.final.total <= r.initial.total);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
    const Plane out = curve_forward(target, r.params);
    double m = 0.0;
    for (double v : out.values()) m += v;
    m /= static_cast<double>(out.size());
    CHECK(std::abs(m - region_stats(reference).mean) < 0.02);
    for (const auto& t : r.params.theta)
      for (double v : t.values()) CHECK(std::abs(v) <= 1.0);
    const auto again = optimize_theta_direct(target, reference);
    CHECK(again.trace == r.trace);
  }
  SUBCASE("config validation") {
    DirectConfig c;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}
