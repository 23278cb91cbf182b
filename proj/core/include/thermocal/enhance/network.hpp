#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "thermocal/enhance/attention.hpp"
#include "thermocal/enhance/curve.hpp"
#include "thermocal/enhance/loss.hpp"
#include "thermocal/enhance/skip_cnn.hpp"
#include "thermocal/regions.hpp"

namespace thermocal::enhance {

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

/// Parameters of the enhancement network, stored as an ordered list of named tensors:
///   lift.weight [32], lift.bias [32]            1x1 lift of the normalized plane
///   attn.query [32, d_k], attn.key [32, d_k], attn.value [32, 32]
///   conv{1..7}.weight [out, in, 3, 3], conv{1..7}.bias [out]
struct NetworkWeights {
  AttentionConfig attention;
  std::uint64_t rng_seed = 0;
  std::vector<NamedTensor> tensors;

  static constexpr std::size_t kLiftWeight = 0;
  static constexpr std::size_t kLiftBias = 1;
  static constexpr std::size_t kQuery = 2;
  static constexpr std::size_t kKey = 3;
  static constexpr std::size_t kValue = 4;
  static constexpr std::size_t kConvBase = 5;
  static constexpr std::size_t conv_weight_index(std::size_t layer) { return kConvBase + 2 * layer; }
  static constexpr std::size_t conv_bias_index(std::size_t layer) { return kConvBase + 2 * layer + 1; }

  /// All-zero parameters with the canonical shapes.
  static NetworkWeights zeros(const AttentionConfig& cfg = {});
  /// He-style random initialization; the last layer starts small so theta ~ 0.
  static NetworkWeights initialize(std::uint64_t seed, const AttentionConfig& cfg = {});

  void validate() const;
  std::size_t parameter_count() const;
  const NamedTensor& tensor(std::string_view name) const;
  NamedTensor& tensor(std::string_view name);

  std::array<ConvView, kConvLayers> conv_views() const;
  AttentionWeights attention_weights() const;

  /// Flat copy of every parameter in tensor order, and the inverse.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

/// A (target, reference) pair after emissivity normalization.
struct RegionPair {
  RegionImage target;
  RegionImage reference;
};

/// Everything the backward pass needs from one forward evaluation.
struct NetworkTape {
  std::size_t height = 0, width = 0;
  std::size_t padded_height = 0, padded_width = 0;
  std::vector<double> target_pooled, reference_pooled;
  TokenMatrix target_tokens, reference_tokens;
  AttentionTape attention;
  SkipCnnTape cnn;
  Tensor3 theta;
};

/// Full forward pass: lift -> pool -> cross-attention -> upsample -> concat with
/// the target plane -> skip-CNN -> tanh. Returns theta (8 x H x W).
Tensor3 network_forward(const NetworkWeights& weights, const Plane& target_plane,
                        const Plane& reference_plane, NetworkTape* tape = nullptr);

/// Backward from dL/dtheta; adds parameter gradients into `grads` (same layout as weights).
void network_backward(const NetworkWeights& weights, const NetworkTape& tape,
                      const Tensor3& grad_theta, NetworkWeights& grads);

/// Curve parameters predicted for one pair.
CurveParams predict_curve(const NetworkWeights& weights, const RegionPair& pair);

/// Inference: curve applied to the (already normalized) target region.
RegionImage enhance_region(const RegionImage& target, const RegionImage& reference,
                           const NetworkWeights& weights);

/// Soft (training) loss of one pair and, when `grads` is non-null, its parameter gradient.
LossBreakdown network_loss(const NetworkWeights& weights, const RegionPair& pair,
                           NetworkWeights* grads, std::size_t bins = kDefaultHistogramBins,
                           std::size_t bandwidth = 1);

/// Reported (hard-binned) loss of the network's enhancement of one pair.
LossBreakdown evaluate_pair(const NetworkWeights& weights, const RegionPair& pair,
                            std::size_t bins = kDefaultHistogramBins);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 5;
  double momentum = 0.9;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
  /// Global gradient-norm clip applied per update; 0 disables it.
  double grad_clip = 1.0;
  /// Stop after this many samples have been seen; 0 means epochs x dataset size.
  std::size_t max_samples = 0;
  std::size_t bins = kDefaultHistogramBins;
  /// Soft-histogram kernel half-width at the first sample, shrunk geometrically
  /// to 1 over the first anneal_fraction of the sample budget.
  std::size_t bandwidth_start = 8;
  double anneal_fraction = 0.6;
  /// Cosine-decays the learning rate to zero over the sample budget.
  bool cosine_decay = false;
  AttentionConfig attention;

  void validate() const;
  std::size_t budget(std::size_t dataset_size) const;
  std::size_t bandwidth_at(std::size_t sample, std::size_t dataset_size) const;
  double learning_rate_at(std::size_t sample, std::size_t dataset_size) const;
};

struct TrainResult {
  NetworkWeights weights;
  double initial_loss = 0.0;           ///< mean reported loss before the first update
  double final_loss = 0.0;             ///< mean reported loss after training
  std::vector<double> epoch_losses;    ///< running mean soft loss per epoch (at the bandwidth in use)
  std::size_t samples_seen = 0;
};

using TrainProgress = std::function<void(std::size_t epoch, double mean_loss)>;

/// SGD with momentum over the dataset, deterministic per-epoch shuffling from cfg.seed.
TrainResult train(const std::vector<RegionPair>& dataset, const TrainConfig& cfg,
                  const TrainProgress& progress = {});

/// Mean reported (hard-binned) loss of the network's enhancement over a dataset.
double mean_loss(const NetworkWeights& weights, const std::vector<RegionPair>& dataset,
                 std::size_t bins = kDefaultHistogramBins);

}  // namespace thermocal::enhance
