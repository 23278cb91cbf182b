#include "thermocal/enhance/skip_cnn.hpp"

#include <algorithm>
#include <cmath>

#include "thermocal/error.hpp"

namespace thermocal::enhance {

namespace {

struct Span1d {
  std::size_t lo, hi;  ///< output indices whose shifted input is inside [0, n)
};

Span1d valid_range(std::size_t n, int offset) {
  const std::size_t lo = offset < 0 ? static_cast<std::size_t>(-offset) : 0;
  const std::size_t hi = offset > 0 ? n - static_cast<std::size_t>(offset) : n;
  return {lo, std::max(lo, hi)};
}

void check_layer(const Tensor3& in, const ConvView& conv) {
  if (in.channels != conv.in) {
    throw ShapeError("conv3x3: input has " + std::to_string(in.channels) + " channels, layer expects " +
                     std::to_string(conv.in));
  }
  if (conv.weight.size() != conv.out * conv.in * 9 || conv.bias.size() != conv.out) {
    throw ShapeError("conv3x3: parameter size mismatch");
  }
}

}  // namespace

Tensor3 conv3x3(const Tensor3& in, const ConvView& conv) {
  check_layer(in, conv);
  const std::size_t h = in.height, w = in.width;
  Tensor3 out(conv.out, h, w);
  for (std::size_t oc = 0; oc < conv.out; ++oc) {
    auto dst = out.channel(oc);
    std::fill(dst.begin(), dst.end(), conv.bias[oc]);
    for (std::size_t ic = 0; ic < conv.in; ++ic) {
      const double* src = in.channel(ic).data();
      const double* k = conv.weight.data() + (oc * conv.in + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const Span1d ry = valid_range(h, ky - 1);
        for (int kx = 0; kx < 3; ++kx) {
          const double wgt = k[ky * 3 + kx];
          if (wgt == 0.0) continue;
          const Span1d rx = valid_range(w, kx - 1);
          for (std::size_t y = ry.lo; y < ry.hi; ++y) {
            double* o = dst.data() + y * w;
            const double* s = src + (y + ky - 1) * w + (kx - 1);
            for (std::size_t x = rx.lo; x < rx.hi; ++x) o[x] += wgt * s[x];
          }
        }
      }
    }
  }
  return out;
}

void conv3x3_backward(const Tensor3& in, const ConvView& conv, const Tensor3& grad_out,
                      ConvGradView grads, Tensor3* grad_in) {
  check_layer(in, conv);
  const std::size_t h = in.height, w = in.width;
  for (std::size_t oc = 0; oc < conv.out; ++oc) {
    const auto g = grad_out.channel(oc);
    double bsum = 0.0;
    for (double v : g) bsum += v;
    grads.bias[oc] += bsum;
    for (std::size_t ic = 0; ic < conv.in; ++ic) {
      const double* src = in.channel(ic).data();
      double* gsrc = grad_in != nullptr ? grad_in->channel(ic).data() : nullptr;
      const double* k = conv.weight.data() + (oc * conv.in + ic) * 9;
      double* gk = grads.weight.data() + (oc * conv.in + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const Span1d ry = valid_range(h, ky - 1);
        for (int kx = 0; kx < 3; ++kx) {
          const Span1d rx = valid_range(w, kx - 1);
          const double wgt = k[ky * 3 + kx];
          double acc = 0.0;
          for (std::size_t y = ry.lo; y < ry.hi; ++y) {
            const double* go = g.data() + y * w;
            const std::size_t off = (y + ky - 1) * w + (kx - 1);
            const double* s = src + off;
            for (std::size_t x = rx.lo; x < rx.hi; ++x) acc += go[x] * s[x];
            if (gsrc != nullptr && wgt != 0.0) {
              double* gs = gsrc + off;
              for (std::size_t x = rx.lo; x < rx.hi; ++x) gs[x] += wgt * go[x];
            }
          }
          gk[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
  if (a.height != b.height || a.width != b.width) throw ShapeError("concat: spatial size mismatch");
  Tensor3 out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

namespace {

void relu_inplace(Tensor3& t) {
  for (auto& v : t.data) v = v > 0.0 ? v : 0.0;
}

// Splits a concatenated gradient back into its two parts, accumulating.
void split_accumulate(const Tensor3& g, Tensor3& a, Tensor3& b) {
  const std::size_t na = a.data.size();
  for (std::size_t i = 0; i < na; ++i) a.data[i] += g.data[i];
  for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] += g.data[na + i];
}

}  // namespace

Tensor3 skip_cnn_forward(const Tensor3& input, std::span<const ConvView, kConvLayers> layers,
                         SkipCnnTape* tape) {
  std::array<Tensor3, kConvLayers> y;
  std::array<Tensor3, kConvLayers> ins;
  for (std::size_t l = 0; l < kConvLayers; ++l) {
    switch (l) {
      case 0: ins[l] = input; break;
      case 4: ins[l] = concat_channels(y[2], y[3]); break;
      case 5: ins[l] = concat_channels(y[1], y[4]); break;
      case 6: ins[l] = concat_channels(y[0], y[5]); break;
      default: ins[l] = y[l - 1]; break;
    }
    y[l] = conv3x3(ins[l], layers[l]);
    if (l + 1 < kConvLayers) {
      relu_inplace(y[l]);
    } else {
      for (auto& v : y[l].data) v = std::tanh(v);
    }
  }
  Tensor3 theta = y[kConvLayers - 1];
  if (tape != nullptr) {
    tape->out = std::move(y);
    tape->in = std::move(ins);
  }
  return theta;
}

Tensor3 skip_cnn_backward(const SkipCnnTape& tape, std::span<const ConvView, kConvLayers> layers,
                          const Tensor3& grad_theta,
                          std::span<const ConvGradView, kConvLayers> grads) {
  std::array<Tensor3, kConvLayers> gy;
  for (std::size_t l = 0; l < kConvLayers; ++l) {
    gy[l] = Tensor3(tape.out[l].channels, tape.out[l].height, tape.out[l].width);
  }
  gy[kConvLayers - 1] = grad_theta;
  Tensor3 grad_input;

  for (std::size_t l = kConvLayers; l-- > 0;) {
    // through the activation
    Tensor3 gz = gy[l];
    const auto& act = tape.out[l].data;
    if (l + 1 == kConvLayers) {
      for (std::size_t i = 0; i < gz.data.size(); ++i) gz.data[i] *= 1.0 - act[i] * act[i];
    } else {
      for (std::size_t i = 0; i < gz.data.size(); ++i) {
        if (!(act[i] > 0.0)) gz.data[i] = 0.0;
      }
    }
    const Tensor3& in = tape.in[l];
    Tensor3 gin(in.channels, in.height, in.width);
    conv3x3_backward(in, layers[l], gz, grads[l], &gin);
    switch (l) {
      case 0: grad_input = std::move(gin); break;
      case 4: split_accumulate(gin, gy[2], gy[3]); break;
      case 5: split_accumulate(gin, gy[1], gy[4]); break;
      case 6: split_accumulate(gin, gy[0], gy[5]); break;
      default:
        for (std::size_t i = 0; i < gin.data.size(); ++i) gy[l - 1].data[i] += gin.data[i];
        break;
    }
  }
  return grad_input;
}

}  // namespace thermocal::enhance
