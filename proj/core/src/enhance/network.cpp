#include "thermocal/enhance/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "thermocal/rng.hpp"

namespace thermocal::enhance {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

NamedTensor make_tensor(std::string name, std::vector<std::size_t> dims) {
  const std::size_t n = product(dims);
  return {std::move(name), std::move(dims), std::vector<double>(n, 0.0)};
}

TokenMatrix as_matrix(const NamedTensor& t) {
  TokenMatrix m(t.dims[0], t.dims[1]);
  m.data = t.values;
  return m;
}

}  // namespace

NetworkWeights NetworkWeights::zeros(const AttentionConfig& cfg) {
  cfg.validate();
  NetworkWeights w;
  w.attention = cfg;
  w.tensors.push_back(make_tensor("lift.weight", {kFeatureChannels}));
  w.tensors.push_back(make_tensor("lift.bias", {kFeatureChannels}));
  w.tensors.push_back(make_tensor("attn.query", {kFeatureChannels, cfg.d_k}));
  w.tensors.push_back(make_tensor("attn.key", {kFeatureChannels, cfg.d_k}));
  w.tensors.push_back(make_tensor("attn.value", {kFeatureChannels, kFeatureChannels}));
  for (std::size_t l = 0; l < kConvLayers; ++l) {
    const std::string base = "conv" + std::to_string(l + 1);
    w.tensors.push_back(make_tensor(base + ".weight", {kConvOutputs[l], kConvInputs[l], 3, 3}));
    w.tensors.push_back(make_tensor(base + ".bias", {kConvOutputs[l]}));
  }
  return w;
}

NetworkWeights NetworkWeights::initialize(std::uint64_t seed, const AttentionConfig& cfg) {
  NetworkWeights w = zeros(cfg);
  w.rng_seed = seed;
  Rng rng(seed);
  for (auto& v : w.tensors[kLiftWeight].values) v = rng.normal();
  for (auto& v : w.tensors[kLiftBias].values) v = 0.1 * rng.normal();
  const double proj = 1.0 / std::sqrt(static_cast<double>(kFeatureChannels));
  for (std::size_t i : {kQuery, kKey, kValue}) {
    for (auto& v : w.tensors[i].values) v = proj * rng.normal();
  }
  for (std::size_t l = 0; l < kConvLayers; ++l) {
    double stddev = std::sqrt(2.0 / (9.0 * static_cast<double>(kConvInputs[l])));
    if (l + 1 == kConvLayers) stddev *= 0.1;
    for (auto& v : w.tensors[conv_weight_index(l)].values) v = stddev * rng.normal();
  }
  return w;
}

void NetworkWeights::validate() const {
  const NetworkWeights ref = zeros(attention);
  if (tensors.size() != ref.tensors.size()) {
    throw ShapeError("network weights: expected " + std::to_string(ref.tensors.size()) +
                     " tensors, got " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != ref.tensors[i].name || tensors[i].dims != ref.tensors[i].dims ||
        tensors[i].values.size() != product(tensors[i].dims)) {
      throw ShapeError("network weights: tensor '" + tensors[i].name + "' does not match '" +
                       ref.tensors[i].name + "'");
    }
  }
}

std::size_t NetworkWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

const NamedTensor& NetworkWeights::tensor(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw ArgumentError("no tensor named " + std::string(name));
}

NamedTensor& NetworkWeights::tensor(std::string_view name) {
  return const_cast<NamedTensor&>(std::as_const(*this).tensor(name));
}

std::array<ConvView, kConvLayers> NetworkWeights::conv_views() const {
  std::array<ConvView, kConvLayers> v;
  for (std::size_t l = 0; l < kConvLayers; ++l) {
    v[l] = {tensors[conv_weight_index(l)].values, tensors[conv_bias_index(l)].values,
            kConvInputs[l], kConvOutputs[l]};
  }
  return v;
}

AttentionWeights NetworkWeights::attention_weights() const {
  return {as_matrix(tensors[kQuery]), as_matrix(tensors[kKey]), as_matrix(tensors[kValue])};
}

std::vector<double> NetworkWeights::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& t : tensors) flat.insert(flat.end(), t.values.begin(), t.values.end());
  return flat;
}

void NetworkWeights::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("assign: parameter count mismatch");
  std::size_t off = 0;
  for (auto& t : tensors) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t.values.size(), t.values.begin());
    off += t.values.size();
  }
}

namespace {

std::size_t round_up(std::size_t n, std::size_t block) { return (n + block - 1) / block * block; }

/// Zero-pads to the padded size and applies `stages` 2x average pools.
std::vector<double> pool_plane(const Plane& p, std::size_t ph, std::size_t pw, std::size_t stages) {
  Tensor3 t(1, ph, pw);
  for (std::size_t y = 0; y < p.height(); ++y) {
    for (std::size_t x = 0; x < p.width(); ++x) t.at(0, y, x) = p(x, y);
  }
  for (std::size_t s = 0; s < stages; ++s) t = avg_pool2(t);
  return t.data;
}

/// The 1x1 lift commutes with average pooling, so it is applied to pooled values.
TokenMatrix lift_tokens(const std::vector<double>& pooled, const NamedTensor& w, const NamedTensor& b) {
  TokenMatrix m(pooled.size(), kFeatureChannels);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t c = 0; c < kFeatureChannels; ++c) m.at(i, c) = w.values[c] * pooled[i] + b.values[c];
  }
  return m;
}

std::array<ConvGradView, kConvLayers> conv_grad_views(NetworkWeights& g) {
  std::array<ConvGradView, kConvLayers> v;
  for (std::size_t l = 0; l < kConvLayers; ++l) {
    v[l] = {g.tensors[NetworkWeights::conv_weight_index(l)].values,
            g.tensors[NetworkWeights::conv_bias_index(l)].values};
  }
  return v;
}

}  // namespace

Tensor3 network_forward(const NetworkWeights& weights, const Plane& target_plane,
                        const Plane& reference_plane, NetworkTape* tape) {
  require_same_shape(target_plane, reference_plane, "network_forward");
  const AttentionConfig& cfg = weights.attention;
  const std::size_t h = target_plane.height(), w = target_plane.width();
  const std::size_t block = cfg.block();
  const std::size_t ph = round_up(h, block), pw = round_up(w, block);
  const std::size_t th = ph / block, tw = pw / block;

  auto tgt_pooled = pool_plane(target_plane, ph, pw, cfg.stages);
  auto ref_pooled = pool_plane(reference_plane, ph, pw, cfg.stages);
  const auto& lw = weights.tensors[NetworkWeights::kLiftWeight];
  const auto& lb = weights.tensors[NetworkWeights::kLiftBias];
  TokenMatrix tgt_tok = lift_tokens(tgt_pooled, lw, lb);
  TokenMatrix ref_tok = lift_tokens(ref_pooled, lw, lb);

  AttentionTape atape;
  const TokenMatrix fused = cross_attention(tgt_tok, ref_tok, weights.attention_weights(), &atape);

  // Nearest-neighbour upsample of the fused tokens, cropped to H x W, behind the target plane.
  Tensor3 x(1 + kFeatureChannels, h, w);
  for (std::size_t yy = 0; yy < h; ++yy) {
    for (std::size_t xx = 0; xx < w; ++xx) x.at(0, yy, xx) = target_plane(xx, yy);
  }
  for (std::size_t c = 0; c < kFeatureChannels; ++c) {
    for (std::size_t yy = 0; yy < h; ++yy) {
      const std::size_t row = (yy / block) * tw;
      for (std::size_t xx = 0; xx < w; ++xx) x.at(1 + c, yy, xx) = fused.at(row + xx / block, c);
    }
  }
  (void)th;

  const auto views = weights.conv_views();
  SkipCnnTape ctape;
  Tensor3 theta = skip_cnn_forward(x, views, tape != nullptr ? &ctape : nullptr);

  if (tape != nullptr) {
    tape->height = h;
    tape->width = w;
    tape->padded_height = ph;
    tape->padded_width = pw;
    tape->target_pooled = std::move(tgt_pooled);
    tape->reference_pooled = std::move(ref_pooled);
    tape->target_tokens = std::move(tgt_tok);
    tape->reference_tokens = std::move(ref_tok);
    tape->attention = std::move(atape);
    tape->cnn = std::move(ctape);
    tape->theta = theta;
  }
  return theta;
}

void network_backward(const NetworkWeights& weights, const NetworkTape& tape,
                      const Tensor3& grad_theta, NetworkWeights& grads) {
  const auto views = weights.conv_views();
  const auto gviews = conv_grad_views(grads);
  const Tensor3 gx = skip_cnn_backward(tape.cnn, views, grad_theta, gviews);

  const std::size_t block = weights.attention.block();
  const std::size_t tw = tape.padded_width / block;
  TokenMatrix gfused(tape.target_tokens.rows, kFeatureChannels);
  for (std::size_t c = 0; c < kFeatureChannels; ++c) {
    const auto ch = gx.channel(1 + c);
    for (std::size_t yy = 0; yy < tape.height; ++yy) {
      const std::size_t row = (yy / block) * tw;
      for (std::size_t xx = 0; xx < tape.width; ++xx) {
        gfused.at(row + xx / block, c) += ch[yy * tape.width + xx];
      }
    }
  }

  const AttentionWeights aw = weights.attention_weights();
  AttentionGrads ag{TokenMatrix(aw.query.rows, aw.query.cols), TokenMatrix(aw.key.rows, aw.key.cols),
                    TokenMatrix(aw.value.rows, aw.value.cols),
                    TokenMatrix(tape.target_tokens.rows, tape.target_tokens.cols),
                    TokenMatrix(tape.reference_tokens.rows, tape.reference_tokens.cols)};
  cross_attention_backward(tape.target_tokens, tape.reference_tokens, aw, tape.attention, gfused, ag);

  auto add = [](std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };
  add(grads.tensors[NetworkWeights::kQuery].values, ag.query.data);
  add(grads.tensors[NetworkWeights::kKey].values, ag.key.data);
  add(grads.tensors[NetworkWeights::kValue].values, ag.value.data);

  auto& glw = grads.tensors[NetworkWeights::kLiftWeight].values;
  auto& glb = grads.tensors[NetworkWeights::kLiftBias].values;
  auto lift_back = [&](const TokenMatrix& g, const std::vector<double>& pooled) {
    for (std::size_t i = 0; i < g.rows; ++i) {
      for (std::size_t c = 0; c < kFeatureChannels; ++c) {
        glw[c] += g.at(i, c) * pooled[i];
        glb[c] += g.at(i, c);
      }
    }
  };
  lift_back(ag.target, tape.target_pooled);
  lift_back(ag.reference, tape.reference_pooled);
}

namespace {

// The network sees zeros outside each mask.
Plane masked_plane(const RegionImage& r) {
  Plane p = r.plane;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (r.mask.bitmap[i] == 0) p[i] = 0.0;
  }
  return p;
}

}  // namespace

CurveParams predict_curve(const NetworkWeights& weights, const RegionPair& pair) {
  return CurveParams::from_tensor(
      network_forward(weights, masked_plane(pair.target), masked_plane(pair.reference)));
}

RegionImage enhance_region(const RegionImage& target, const RegionImage& reference,
                           const NetworkWeights& weights) {
  const CurveParams params = predict_curve(weights, {target, reference});
  RegionImage out = target;
  out.plane = curve_forward(target, params);
  return out;
}

namespace {

std::vector<std::size_t> masked_indices(const RegionMask& m) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.bitmap.size(); ++i) {
    if (m.bitmap[i] != 0) idx.push_back(i);
  }
  if (idx.empty()) throw ArgumentError("region mask is empty");
  return idx;
}

}  // namespace

LossBreakdown network_loss(const NetworkWeights& weights, const RegionPair& pair,
                           NetworkWeights* grads, std::size_t bins, std::size_t bandwidth) {
  NetworkTape tape;
  const Tensor3 theta = network_forward(weights, masked_plane(pair.target), masked_plane(pair.reference),
                                        grads ? &tape : nullptr);

  const auto idx = masked_indices(pair.target.mask);
  const std::size_t n = idx.size(), hw = theta.plane_size();
  std::vector<double> c0(n), th(kCurveIterations * n);
  for (std::size_t i = 0; i < n; ++i) {
    c0[i] = pair.target.plane[idx[i]];
    for (std::size_t k = 0; k < kCurveIterations; ++k) th[k * n + i] = theta.data[k * hw + idx[i]];
  }
  const CurveTape ctape = curve_forward_tape(c0, th);
  const SoftLossTarget target = make_soft_target(pair.reference.masked_values(), bins, kDefaultHistogramSmoothing, bandwidth);
  const auto out = ctape.output();
  std::vector<double> gout(n);
  const LossBreakdown loss = soft_loss(out, target, grads ? std::span<double>(gout) : std::span<double>());
  if (!std::isfinite(loss.total)) throw OptimizationError("non-finite training loss");

  if (grads != nullptr) {
    std::vector<double> gth(kCurveIterations * n, 0.0);
    curve_backward(ctape, th, gout, gth);
    Tensor3 gtheta(kCurveIterations, theta.height, theta.width);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < kCurveIterations; ++k) gtheta.data[k * hw + idx[i]] = gth[k * n + i];
    }
    network_backward(weights, tape, gtheta, *grads);
  }
  return loss;
}

LossBreakdown evaluate_pair(const NetworkWeights& weights, const RegionPair& pair, std::size_t bins) {
  const RegionImage en = enhance_region(pair.target, pair.reference, weights);
  return loss_total(en, pair.reference, bins);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be >= 0");
  if (bandwidth_start == 0) throw ConfigError("bandwidth_start must be positive");
  if (!(anneal_fraction >= 0.0 && anneal_fraction <= 1.0)) throw ConfigError("anneal_fraction must lie in [0, 1]");
  attention.validate();
}

std::size_t TrainConfig::budget(std::size_t dataset_size) const {
  return max_samples > 0 ? std::min(max_samples, epochs * dataset_size) : epochs * dataset_size;
}

std::size_t TrainConfig::bandwidth_at(std::size_t sample, std::size_t dataset_size) const {
  const double span = anneal_fraction * static_cast<double>(budget(dataset_size));
  if (bandwidth_start <= 1 || static_cast<double>(sample) >= span) return 1;
  const double h = std::pow(static_cast<double>(bandwidth_start), 1.0 - static_cast<double>(sample) / span);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(h)));
}

double TrainConfig::learning_rate_at(std::size_t sample, std::size_t dataset_size) const {
  if (!cosine_decay) return learning_rate;
  const double b = static_cast<double>(budget(dataset_size));
  const double x = std::min(1.0, static_cast<double>(sample) / b);
  return learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

double mean_loss(const NetworkWeights& weights, const std::vector<RegionPair>& dataset,
                 std::size_t bins) {
  if (dataset.empty()) throw ArgumentError("empty dataset");
  double s = 0.0;
  for (const auto& p : dataset) s += evaluate_pair(weights, p, bins).total;
  return s / static_cast<double>(dataset.size());
}

TrainResult train(const std::vector<RegionPair>& dataset, const TrainConfig& cfg,
                  const TrainProgress& progress) {
  cfg.validate();
  if (dataset.empty()) throw ArgumentError("training dataset is empty");

  TrainResult result;
  result.weights = NetworkWeights::initialize(cfg.seed, cfg.attention);
  NetworkWeights& w = result.weights;
  result.initial_loss = mean_loss(w, dataset, cfg.bins);

  NetworkWeights velocity = NetworkWeights::zeros(cfg.attention);
  NetworkWeights grad = NetworkWeights::zeros(cfg.attention);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(dataset.size());
  const std::size_t budget = cfg.budget(dataset.size());

  auto zero = [](NetworkWeights& g) {
    for (auto& t : g.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs && result.samples_seen < budget; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    double epoch_sum = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < order.size() && result.samples_seen < budget; start += cfg.batch) {
      const std::size_t end = std::min({start + cfg.batch, order.size(), start + (budget - result.samples_seen)});
      zero(grad);
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t bw = cfg.bandwidth_at(result.samples_seen + (i - start), dataset.size());
        const LossBreakdown l = network_loss(w, dataset[order[i]], &grad, cfg.bins, bw);
        if (!std::isfinite(l.total)) {
          throw OptimizationError("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                                  std::to_string(order[i]));
        }
        epoch_sum += l.total;
        ++epoch_count;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      double norm2 = 0.0;
      for (auto& t : grad.tensors) {
        for (auto& v : t.values) {
          v *= inv;
          norm2 += v * v;
        }
      }
      if (!std::isfinite(norm2)) {
        throw OptimizationError("non-finite gradient at epoch " + std::to_string(epoch));
      }
      const double norm = std::sqrt(norm2);
      const double lr = cfg.learning_rate_at(result.samples_seen, dataset.size());
      const double clip = (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;
      for (std::size_t t = 0; t < w.tensors.size(); ++t) {
        auto& wv = w.tensors[t].values;
        auto& vv = velocity.tensors[t].values;
        const auto& gv = grad.tensors[t].values;
        for (std::size_t i = 0; i < wv.size(); ++i) {
          vv[i] = cfg.momentum * vv[i] + clip * gv[i];
          wv[i] -= lr * vv[i];
        }
      }
      result.samples_seen += end - start;
    }
    const double mean = epoch_count > 0 ? epoch_sum / static_cast<double>(epoch_count) : 0.0;
    result.epoch_losses.push_back(mean);
    if (progress) progress(epoch, mean);
  }
  result.final_loss = mean_loss(w, dataset, cfg.bins);
  return result;
}

}  // namespace thermocal::enhance
