#include <chrono>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "thermocal/enhance/attention.hpp"
#include "thermocal/enhance/grad_check.hpp"
#include "thermocal/enhance/network.hpp"
#include "thermocal/enhance/skip_cnn.hpp"
#include "thermocal/enhance/weights_io.hpp"
#include "thermocal/error.hpp"

using namespace thermocal;
using namespace thermocal::enhance;

namespace {

TokenMatrix random_tokens(Rng& rng, std::size_t r, std::size_t c) {
  TokenMatrix m(r, c);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

// Dense softmax(QK^T / sqrt(d)) V written out longhand.
TokenMatrix brute_attention(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v) {
  TokenMatrix out(q.rows, v.cols);
  for (std::size_t i = 0; i < q.rows; ++i) {
    std::vector<double> s(k.rows);
    double mx = -1e300;
    for (std::size_t j = 0; j < k.rows; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < q.cols; ++c) d += q.at(i, c) * k.at(j, c);
      s[j] = d / std::sqrt(static_cast<double>(q.cols));
      mx = std::max(mx, s[j]);
    }
    double z = 0.0;
    for (auto& x : s) z += (x = std::exp(x - mx));
    for (std::size_t j = 0; j < k.rows; ++j)
      for (std::size_t c = 0; c < v.cols; ++c) out.at(i, c) += s[j] / z * v.at(j, c);
  }
  return out;
}

// Zero-padded 3x3 convolution by direct summation over every tap.
Tensor3 naive_conv(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b, std::size_t out_c) {
  Tensor3 out(out_c, in.height, in.width);
  for (std::size_t o = 0; o < out_c; ++o)
    for (std::size_t y = 0; y < in.height; ++y)
      for (std::size_t x = 0; x < in.width; ++x) {
        double s = b[o];
        for (std::size_t i = 0; i < in.channels; ++i)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(in.height) || xx >= static_cast<long>(in.width)) continue;
              s += w[((o * in.channels + i) * 3 + static_cast<std::size_t>(dy + 1)) * 3 + static_cast<std::size_t>(dx + 1)] *
                   in.at(i, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
        out.at(o, y, x) = s;
      }
  return out;
}

Tensor3 stack(const Tensor3& a, const Tensor3& b) {
  Tensor3 out(a.channels + b.channels, a.height, a.width);
  for (std::size_t c = 0; c < a.channels; ++c)
    for (std::size_t i = 0; i < a.plane_size(); ++i) out.data[c * a.plane_size() + i] = a.data[c * a.plane_size() + i];
  for (std::size_t c = 0; c < b.channels; ++c)
    for (std::size_t i = 0; i < b.plane_size(); ++i)
      out.data[(a.channels + c) * a.plane_size() + i] = b.data[c * b.plane_size() + i];
  return out;
}

RegionPair random_pair(std::size_t w, std::size_t h, std::uint64_t seed) {
  return {test::random_region(w, h, 0.1, 0.4, seed), test::random_region(w, h, 0.5, 0.8, seed + 1000)};
}

}  // namespace

TEST_CASE("attention") {
  Rng rng(1);
  SUBCASE("single reference token") {
    const auto q = random_tokens(rng, 5, 4), k = random_tokens(rng, 1, 4), v = random_tokens(rng, 1, 3);
    const auto out = scaled_dot_attention(q, k, v);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t c = 0; c < 3; ++c) CHECK(out.at(i, c) == doctest::Approx(v.at(0, c)).epsilon(1e-15));
  }
  SUBCASE("identical keys average the values") {
    auto k = random_tokens(rng, 1, 4);
    TokenMatrix kk(6, 4);
    for (std::size_t j = 0; j < 6; ++j)
      for (std::size_t c = 0; c < 4; ++c) kk.at(j, c) = k.at(0, c);
    const auto q = random_tokens(rng, 3, 4), v = random_tokens(rng, 6, 2);
    const auto out = scaled_dot_attention(q, kk, v);
    for (std::size_t c = 0; c < 2; ++c) {
      double m = 0.0;
      for (std::size_t j = 0; j < 6; ++j) m += v.at(j, c) / 6.0;
      for (std::size_t i = 0; i < 3; ++i) CHECK(out.at(i, c) == doctest::Approx(m).epsilon(1e-13));
    }
  }
  SUBCASE("brute-force oracle and row sums") {
    for (int t = 0; t < 20; ++t) {
      const auto q = random_tokens(rng, 4, 8), k = random_tokens(rng, 4, 8), v = random_tokens(rng, 4, 8);
      AttentionTape tape;
      const auto out = scaled_dot_attention(q, k, v, &tape);
      const auto ref = brute_attention(q, k, v);
      for (std::size_t i = 0; i < out.data.size(); ++i) CHECK(std::abs(out.data[i] - ref.data[i]) < 1e-12);
      for (std::size_t i = 0; i < tape.weights.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < tape.weights.cols; ++j) s += tape.weights.at(i, j);
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(scaled_dot_attention(random_tokens(rng, 2, 4), random_tokens(rng, 3, 4), random_tokens(rng, 2, 4)),
                    ShapeError);
    CHECK_THROWS_AS((AttentionConfig{0, 8}.validate()), ConfigError);
  }
}

TEST_CASE("cross-attention gradients match finite differences") {
  Rng rng(4);
  const auto tgt = random_tokens(rng, 5, 6), ref = random_tokens(rng, 7, 6);
  AttentionWeights w{random_tokens(rng, 6, 4), random_tokens(rng, 6, 4), random_tokens(rng, 6, 3)};
  const auto proj = random_tokens(rng, 5, 3);
  auto loss_of = [&](const AttentionWeights& ww, const TokenMatrix& t, const TokenMatrix& r) {
    const auto o = cross_attention(t, r, ww);
    double s = 0.0;
    for (std::size_t i = 0; i < o.data.size(); ++i) s += o.data[i] * proj.data[i];
    return s;
  };
  AttentionTape tape;
  cross_attention(tgt, ref, w, &tape);
  AttentionGrads g{TokenMatrix(6, 4), TokenMatrix(6, 4), TokenMatrix(6, 3), TokenMatrix(5, 6), TokenMatrix(7, 6)};
  cross_attention_backward(tgt, ref, w, tape, proj, g);

  auto check_matrix = [&](TokenMatrix& m, const TokenMatrix& grad) {
    auto f = [&](std::span<const double> x) {
      const auto saved = m.data;
      std::copy(x.begin(), x.end(), m.data.begin());
      const double v = loss_of(w, tgt, ref);
      m.data = saved;
      return v;
    };
    const std::vector<double> point = m.data;
    CHECK(grad_check(f, point, grad.data).max_relative_error < 1e-6);
  };
  check_matrix(w.query, g.query);
  check_matrix(w.key, g.key);
  check_matrix(w.value, g.value);
  auto t2 = tgt;
  auto f_t = [&](std::span<const double> x) {
    TokenMatrix t(5, 6);
    std::copy(x.begin(), x.end(), t.data.begin());
    return loss_of(w, t, ref);
  };
  CHECK(grad_check(f_t, t2.data, g.target.data).max_relative_error < 1e-6);
  auto f_r = [&](std::span<const double> x) {
    TokenMatrix r(7, 6);
    std::copy(x.begin(), x.end(), r.data.begin());
    return loss_of(w, tgt, r);
  };
  CHECK(grad_check(f_r, ref.data, g.reference.data).max_relative_error < 1e-6);
}

TEST_CASE("conv3x3 against a naive oracle, with gradients") {
  Rng rng(9);
  Tensor3 in(3, 6, 5);
  for (auto& v : in.data) v = rng.normal();
  std::vector<double> w(4 * 3 * 9), b(4);
  for (auto& v : w) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  const ConvView conv{w, b, 3, 4};
  const Tensor3 out = conv3x3(in, conv);
  const Tensor3 ref = naive_conv(in, w, b, 4);
  for (std::size_t i = 0; i < out.data.size(); ++i) CHECK(std::abs(out.data[i] - ref.data[i]) < 1e-12);

  Tensor3 proj(4, 6, 5);
  for (auto& v : proj.data) v = rng.normal();
  auto dot = [&](const Tensor3& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) s += t.data[i] * proj.data[i];
    return s;
  };
  std::vector<double> gw(w.size(), 0.0), gb(b.size(), 0.0);
  Tensor3 gin(3, 6, 5);
  conv3x3_backward(in, conv, proj, {gw, gb}, &gin);
  auto fw = [&](std::span<const double> x) {
    return dot(naive_conv(in, std::vector<double>(x.begin(), x.end()), b, 4));
  };
  CHECK(grad_check(fw, w, gw).max_relative_error < 1e-6);
  auto fb = [&](std::span<const double> x) {
    return dot(naive_conv(in, w, std::vector<double>(x.begin(), x.end()), 4));
  };
  CHECK(grad_check(fb, b, gb).max_relative_error < 1e-6);
  auto fi = [&](std::span<const double> x) {
    Tensor3 t(3, 6, 5);
    std::copy(x.begin(), x.end(), t.data.begin());
    return dot(naive_conv(t, w, b, 4));
  };
  CHECK(grad_check(fi, in.data, gin.data).max_relative_error < 1e-6);
  CHECK_THROWS_AS(conv3x3(Tensor3(2, 4, 4), conv), ShapeError);
}

TEST_CASE("skip-CNN forward") {
  SUBCASE("zero weights give theta = 0") {
    const auto w = NetworkWeights::zeros();
    Tensor3 in(1 + kFeatureChannels, 8, 8, 0.3);
    const auto theta = skip_cnn_forward(in, w.conv_views());
    CHECK(theta.channels == kCurveIterations);
    for (double v : theta.data) CHECK(v == 0.0);
  }
  SUBCASE("saturated last bias drives theta to one") {
    auto w = NetworkWeights::zeros();
    for (auto& v : w.tensors[NetworkWeights::conv_bias_index(6)].values) v = 20.0;
    Tensor3 in(1 + kFeatureChannels, 8, 8, 0.3);
    for (double v : skip_cnn_forward(in, w.conv_views()).data) CHECK(std::abs(v - 1.0) < 1e-8);
  }
  SUBCASE("random weights against a naive layer-by-layer oracle") {
    const auto w = NetworkWeights::initialize(17);
    Rng rng(3);
    Tensor3 in(1 + kFeatureChannels, 8, 8);
    for (auto& v : in.data) v = rng.uniform(-1.0, 1.0);
    const auto theta = skip_cnn_forward(in, w.conv_views());

    auto layer = [&](std::size_t l, const Tensor3& x) {
      const auto& wt = w.tensors[NetworkWeights::conv_weight_index(l)].values;
      const auto& bt = w.tensors[NetworkWeights::conv_bias_index(l)].values;
      Tensor3 y = naive_conv(x, wt, bt, kConvOutputs[l]);
      for (auto& v : y.data) v = l + 1 < kConvLayers ? std::max(0.0, v) : std::tanh(v);
      return y;
    };
    std::array<Tensor3, kConvLayers> y;
    y[0] = layer(0, in);
    y[1] = layer(1, y[0]);
    y[2] = layer(2, y[1]);
    y[3] = layer(3, y[2]);
    y[4] = layer(4, stack(y[2], y[3]));
    y[5] = layer(5, stack(y[1], y[4]));
    y[6] = layer(6, stack(y[0], y[5]));
    REQUIRE(theta.data.size() == y[6].data.size());
    for (std::size_t i = 0; i < theta.data.size(); ++i) CHECK(std::abs(theta.data[i] - y[6].data[i]) < 1e-10);
  }
}

TEST_CASE("weights layout") {
  const auto w = NetworkWeights::initialize(1);
  CHECK(w.tensors.size() == 5 + 2 * kConvLayers);
  CHECK(w.tensor("conv5.weight").dims == std::vector<std::size_t>{32, 64, 3, 3});
  CHECK(w.tensor("conv6.weight").dims[1] == 64);
  CHECK(w.tensor("conv7.weight").dims == std::vector<std::size_t>{8, 64, 3, 3});
  CHECK(w.tensor("conv1.weight").dims[1] == 33);
  CHECK(w.flatten().size() == w.parameter_count());
  auto copy = NetworkWeights::zeros();
  copy.assign(w.flatten());
  CHECK(copy.flatten() == w.flatten());
  CHECK(NetworkWeights::initialize(1).flatten() == w.flatten());
  CHECK(NetworkWeights::initialize(2).flatten() != w.flatten());
  CHECK_THROWS_AS(w.tensor("conv9.bias"), ArgumentError);
}

TEST_CASE("full-network gradient matches finite differences") {
  const AttentionConfig cfg{2, 8};
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    const auto pair = random_pair(16, 16, 40 + inst);
    NetworkWeights w = NetworkWeights::initialize(inst, cfg);
    NetworkWeights grads = NetworkWeights::zeros(cfg);
    network_loss(w, pair, &grads, kDefaultHistogramBins, 2);

    // A few coordinates from every tensor.
    GradCheckOptions opts;
    opts.skip_kinks = true;
    opts.kink_tolerance = 1e-3;
    opts.absolute_floor = 1e-6;
    Rng rng(inst);
    std::size_t offset = 0;
    for (const auto& t : w.tensors) {
      for (int i = 0; i < 6; ++i) opts.coordinates.push_back(offset + rng.index(t.values.size()));
      offset += t.values.size();
    }
    const std::vector<double> point = w.flatten();
    auto f = [&](std::span<const double> x) {
      NetworkWeights p = w;
      p.assign(x);
      return network_loss(p, pair, nullptr, kDefaultHistogramBins, 2).total;
    };
    const auto r = grad_check(f, point, grads.flatten(), opts);
    CHECK(r.max_relative_error < 1e-3);
    CHECK(r.checked >= opts.coordinates.size() / 2);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("full-network gradient checks took " << secs << " s");
}

TEST_CASE("enhance_region") {
  const auto pair = random_pair(20, 12, 3);
  const auto id = enhance_region(pair.target, pair.reference, NetworkWeights::zeros());
  CHECK(id.plane == pair.target.plane);

  auto target = test::random_region(20, 12, 0.1, 0.4, 5, false);
  auto reference = test::random_region(20, 12, 0.5, 0.8, 6, false);
  const auto w = NetworkWeights::initialize(3);
  const auto a = enhance_region(target, reference, w);
  for (std::size_t i = 0; i < a.plane.size(); ++i) {
    if (target.mask.bitmap[i] == 0) CHECK(a.plane[i] == 0.0);
    CHECK(a.plane[i] >= 0.0);
    CHECK(a.plane[i] <= 1.0);
  }
  Rng rng(2);
  for (std::size_t i = 0; i < target.plane.size(); ++i) {
    if (target.mask.bitmap[i] == 0) target.plane[i] = rng.uniform();
    if (reference.mask.bitmap[i] == 0) reference.plane[i] = rng.uniform();
  }
  CHECK(enhance_region(target, reference, w).plane == a.plane);
}

TEST_CASE("training") {
  const AttentionConfig small{2, 8};
  SUBCASE("nothing to learn") {
    std::vector<RegionPair> data;
    for (std::uint64_t s = 0; s < 6; ++s) {
      const auto r = test::random_region(16, 16, 0.5, 0.7, s);
      data.push_back({r, r});
    }
    TrainConfig cfg;
    cfg.attention = small;
    cfg.epochs = 2;
    cfg.bandwidth_start = 1;
    const auto res = train(data, cfg);
    REQUIRE(res.epoch_losses.size() == 2);
    CHECK(res.epoch_losses.back() <= 1.1 * res.epoch_losses.front() + 1e-12);
  }
  SUBCASE("two-material dataset and determinism") {
    std::vector<RegionPair> data;
    for (std::uint64_t s = 0; s < 12; ++s) data.push_back(random_pair(16, 16, s));
    TrainConfig cfg;
    cfg.attention = small;
    cfg.epochs = 6;
    cfg.learning_rate = 3e-3;
    cfg.seed = 5;
    const auto a = train(data, cfg);
    CHECK(a.samples_seen == 72);
    CHECK(a.final_loss <= 0.2 * a.initial_loss);
    const auto b = train(data, cfg);
    CHECK(a.weights.flatten() == b.weights.flatten());
    CHECK(a.final_loss == b.final_loss);
    cfg.max_samples = 10;
    CHECK(train(data, cfg).samples_seen == 10);
  }
  SUBCASE("validation") {
    TrainConfig cfg;
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(train({}, TrainConfig{}), ArgumentError);
  }
}

TEST_CASE("bandwidth and learning-rate schedules") {
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK(cfg.bandwidth_at(0, 100) == 8);
  CHECK(cfg.bandwidth_at(60, 100) == 1);
  CHECK(cfg.bandwidth_at(99, 100) == 1);
  for (std::size_t s = 1; s < 100; ++s) CHECK(cfg.bandwidth_at(s, 100) <= cfg.bandwidth_at(s - 1, 100));
  CHECK(cfg.learning_rate_at(50, 100) == cfg.learning_rate);
  cfg.cosine_decay = true;
  CHECK(cfg.learning_rate_at(0, 100) == cfg.learning_rate);
  CHECK(cfg.learning_rate_at(50, 100) == doctest::Approx(0.5 * cfg.learning_rate));
}

TEST_CASE("weights file round trip") {
  const auto w = NetworkWeights::initialize(12, AttentionConfig{3, 16});
  std::stringstream ss;
  write_weights(ss, w);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "THCW");
  std::stringstream in(bytes);
  const auto back = read_weights(in);
  CHECK(back.attention.stages == 3);
  CHECK(back.attention.d_k == 16);
  CHECK(back.rng_seed == 12);
  CHECK(back.flatten() == w.flatten());
  std::stringstream again;
  write_weights(again, back);
  CHECK(again.str() == bytes);

  std::stringstream bad("THCX....");
  CHECK_THROWS_AS(read_weights(bad), InputError);
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_weights(truncated), InputError);
  auto nan = w;
  nan.tensors[0].values[0] = std::nan("");
  std::stringstream out;
  CHECK_THROWS_AS(write_weights(out, nan), OptimizationError);
}
