#include "thermocal/enhance/attention.hpp"

#include <algorithm>
#include <cmath>

#include "thermocal/error.hpp"

namespace thermocal::enhance {

void AttentionConfig::validate() const {
  if (stages < 1 || stages > 16) throw ConfigError("attention stages must lie in [1, 16]");
  if (d_k < 1) throw ConfigError("attention d_k must be positive");
}

namespace {

// c = a * b   (a: n x m, b: m x p)
TokenMatrix matmul(const TokenMatrix& a, const TokenMatrix& b) {
  TokenMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* ci = &c.data[i * c.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      const double* bk = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// c += a^T * b   (a: n x m, b: n x p, c: m x p)
void matmul_at_b_acc(const TokenMatrix& a, const TokenMatrix& b, TokenMatrix& c) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double ari = a.at(r, i);
      double* ci = &c.data[i * c.cols];
      const double* br = &b.data[r * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += ari * br[j];
    }
  }
}

// c += a * b^T   (a: n x m, b: p x m, c: n x p)
void matmul_a_bt_acc(const TokenMatrix& a, const TokenMatrix& b, TokenMatrix& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(j, k);
      c.at(i, j) += s;
    }
  }
}

}  // namespace

TokenMatrix scaled_dot_attention(const TokenMatrix& q, const TokenMatrix& k, const TokenMatrix& v,
                                 AttentionTape* tape) {
  if (q.cols != k.cols) throw ShapeError("attention: query and key widths differ");
  if (k.rows != v.rows) {
    throw ShapeError("attention: key/value token count mismatch (" + std::to_string(k.rows) +
                     " vs " + std::to_string(v.rows) + ")");
  }
  if (k.rows == 0) throw ShapeError("attention: no reference tokens");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
  TokenMatrix a(q.rows, k.rows);
  matmul_a_bt_acc(q, k, a);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* row = &a.data[i * a.cols];
    double mx = -INFINITY;
    for (std::size_t j = 0; j < a.cols; ++j) {
      row[j] *= scale;
      mx = std::max(mx, row[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::size_t j = 0; j < a.cols; ++j) row[j] /= sum;
  }
  TokenMatrix out = matmul(a, v);
  if (tape != nullptr) {
    tape->q = q;
    tape->k = k;
    tape->v = v;
    tape->weights = std::move(a);
  }
  return out;
}

TokenMatrix cross_attention(const TokenMatrix& target, const TokenMatrix& reference,
                            const AttentionWeights& w, AttentionTape* tape) {
  if (target.cols != w.query.rows || reference.cols != w.key.rows ||
      reference.cols != w.value.rows) {
    throw ShapeError("cross_attention: token width does not match projections");
  }
  return scaled_dot_attention(matmul(target, w.query), matmul(reference, w.key),
                              matmul(reference, w.value), tape);
}

void cross_attention_backward(const TokenMatrix& target, const TokenMatrix& reference,
                              const AttentionWeights& w, const AttentionTape& tape,
                              const TokenMatrix& grad_out, AttentionGrads& grads) {
  const TokenMatrix& a = tape.weights;
  const double scale = 1.0 / std::sqrt(static_cast<double>(tape.q.cols));

  // dV = A^T dO ; dA = dO V^T
  TokenMatrix dv(tape.v.rows, tape.v.cols);
  matmul_at_b_acc(a, grad_out, dv);
  TokenMatrix da(a.rows, a.cols);
  matmul_a_bt_acc(grad_out, tape.v, da);

  // softmax backward, then the 1/sqrt(d_k) scale
  TokenMatrix ds(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) dot += da.at(i, j) * a.at(i, j);
    for (std::size_t j = 0; j < a.cols; ++j) ds.at(i, j) = a.at(i, j) * (da.at(i, j) - dot) * scale;
  }
  TokenMatrix dq = matmul(ds, tape.k);
  TokenMatrix dk(tape.k.rows, tape.k.cols);
  matmul_at_b_acc(ds, tape.q, dk);

  matmul_at_b_acc(target, dq, grads.query);
  matmul_at_b_acc(reference, dk, grads.key);
  matmul_at_b_acc(reference, dv, grads.value);
  matmul_a_bt_acc(dq, w.query, grads.target);
  matmul_a_bt_acc(dk, w.key, grads.reference);
  matmul_a_bt_acc(dv, w.value, grads.reference);
}

Tensor3 avg_pool2(const Tensor3& in) {
  if (in.height % 2 != 0 || in.width % 2 != 0) throw ShapeError("avg_pool2 needs even dimensions");
  Tensor3 out(in.channels, in.height / 2, in.width / 2);
  for (std::size_t c = 0; c < in.channels; ++c) {
    for (std::size_t y = 0; y < out.height; ++y) {
      for (std::size_t x = 0; x < out.width; ++x) {
        out.at(c, y, x) = 0.25 * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) +
                                  in.at(c, 2 * y + 1, 2 * x) + in.at(c, 2 * y + 1, 2 * x + 1));
      }
    }
  }
  return out;
}

Tensor3 upsample_nearest(const Tensor3& in, std::size_t factor) {
  Tensor3 out(in.channels, in.height * factor, in.width * factor);
  for (std::size_t c = 0; c < in.channels; ++c) {
    for (std::size_t y = 0; y < out.height; ++y) {
      for (std::size_t x = 0; x < out.width; ++x) out.at(c, y, x) = in.at(c, y / factor, x / factor);
    }
  }
  return out;
}

}  // namespace thermocal::enhance
