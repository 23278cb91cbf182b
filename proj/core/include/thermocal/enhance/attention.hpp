#pragma once

#include <cstddef>

#include "thermocal/enhance/tensor.hpp"

namespace thermocal::enhance {

struct AttentionConfig {
  std::size_t stages = 4;  ///< number of 2x average-pool steps before attention
  std::size_t d_k = 32;    ///< query/key width

  void validate() const;
  std::size_t block() const noexcept { return std::size_t{1} << stages; }
};

/// Projection matrices: query/key are (channels x d_k), value is (channels x channels).
struct AttentionWeights {
  TokenMatrix query;
  TokenMatrix key;
  TokenMatrix value;
};

/// Intermediate results kept for the backward pass.
struct AttentionTape {
  TokenMatrix q, k, v;
  TokenMatrix weights;  ///< softmax rows (queries x keys)
};

/// softmax(Q K^T / sqrt(d_k)) V. Rows of the attention matrix are written to
/// `tape` when given.
TokenMatrix scaled_dot_attention(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v,
                                 AttentionTape* tape = nullptr);

/// Queries projected from target tokens, keys and values from reference tokens.
TokenMatrix cross_attention(const TokenMatrix& target, const TokenMatrix& reference,
                            const AttentionWeights& weights, AttentionTape* tape = nullptr);

struct AttentionGrads {
  TokenMatrix query, key, value;  ///< same shapes as AttentionWeights
  TokenMatrix target;             ///< dL/d target tokens
  TokenMatrix reference;          ///< dL/d reference tokens
};

/// Backward pass of cross_attention; gradients are accumulated into `grads`
/// (which must be zero-initialized with matching shapes).
void cross_attention_backward(const TokenMatrix& target, const TokenMatrix& reference,
                              const AttentionWeights& weights, const AttentionTape& tape,
                              const TokenMatrix& grad_out, AttentionGrads& grads);

/// 2x2 average pooling of every channel. Height and width must be even.
Tensor3 avg_pool2(const Tensor3& in);

/// Replicates each cell into a factor x factor block.
Tensor3 upsample_nearest(const Tensor3& in, std::size_t factor);

}  // namespace thermocal::enhance
