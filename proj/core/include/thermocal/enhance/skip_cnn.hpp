#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "thermocal/enhance/curve.hpp"
#include "thermocal/enhance/tensor.hpp"

namespace thermocal::enhance {

inline constexpr std::size_t kFeatureChannels = 32;
inline constexpr std::size_t kConvLayers = 7;

/// Input channel count of each convolution. Layer 1 sees the normalized plane
/// concatenated with the attention-fused features.
inline constexpr std::array<std::size_t, kConvLayers> kConvInputs = {
    1 + kFeatureChannels, kFeatureChannels,     kFeatureChannels,    kFeatureChannels,
    2 * kFeatureChannels, 2 * kFeatureChannels, 2 * kFeatureChannels};
inline constexpr std::array<std::size_t, kConvLayers> kConvOutputs = {
    kFeatureChannels, kFeatureChannels, kFeatureChannels, kFeatureChannels,
    kFeatureChannels, kFeatureChannels, kCurveIterations};

/// Non-owning view of one 3x3 convolution's parameters.
struct ConvView {
  std::span<const double> weight;  ///< out x in x 3 x 3
  std::span<const double> bias;    ///< out
  std::size_t in = 0;
  std::size_t out = 0;
};

struct ConvGradView {
  std::span<double> weight;
  std::span<double> bias;
};

/// Stride 1, zero padding 1.
Tensor3 conv3x3(const Tensor3& in, const ConvView& conv);

/// Accumulates parameter gradients; grad_in (if non-null) is accumulated too.
void conv3x3_backward(const Tensor3& in, const ConvView& conv, const Tensor3& grad_out,
                      ConvGradView grads, Tensor3* grad_in);

/// Activations of the seven layers, kept for backprop.
struct SkipCnnTape {
  std::array<Tensor3, kConvLayers> out;  ///< post-activation (ReLU, tanh for the last)
  std::array<Tensor3, kConvLayers> in;   ///< input of each layer (after concatenation)
};

/// Layers 1-6: conv + ReLU; 5 sees concat(Y3, Y4), 6 concat(Y2, Y5), 7 concat(Y1, Y6).
/// Layer 7: conv + tanh, giving 8 channels of curve parameters.
Tensor3 skip_cnn_forward(const Tensor3& input, std::span<const ConvView, kConvLayers> layers,
                         SkipCnnTape* tape = nullptr);

/// Backward from dL/dtheta. Returns dL/dinput.
Tensor3 skip_cnn_backward(const SkipCnnTape& tape, std::span<const ConvView, kConvLayers> layers,
                          const Tensor3& grad_theta,
                          std::span<const ConvGradView, kConvLayers> grads);

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b);

}  // namespace thermocal::enhance
