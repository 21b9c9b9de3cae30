// Copyright 2026 The Calibre Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Pre-LN transformer encoder with hand-written backward pass.
//
//   X0 = E_W[ids] + E_P[0..n) + E_I[indicator]
//   per block:  X' = X + Attn(LN1(X)),  X'' = X' + FFN(LN2(X'))
//   H = LN_f(X_K)
//
// FFN uses the tanh approximation of GELU. One sequence at a time, no
// padding, so attention is unmasked.

#include <cmath>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/model/params.hpp"

namespace calibre {

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
  Mat xhat;
  Vec inv_sigma;
};

inline Mat layer_norm(const Mat& x, const Mat& g, const Mat& b, LayerNormCache* cache) {
  const Eigen::Index n = x.rows();
  const double d = static_cast<double>(x.cols());
  Mat xhat(n, x.cols());
  Vec inv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mu).square().sum() / d;
    inv(i) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(i) = (x.row(i).array() - mu) * inv(i);
  }
  Mat y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_sigma = std::move(inv);
  }
  return y;
}

/// Returns dX and accumulates dg, db.
inline Mat layer_norm_backward(const Mat& dy, const Mat& g, const LayerNormCache& c, Mat& dg,
                               Mat& db) {
  dg.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  db.row(0) += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * g.row(0).array();
  const double d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double m1 = dxhat.row(i).sum() / d;
    const double m2 = dxhat.row(i).dot(c.xhat.row(i)) / d;
    dx.row(i) = c.inv_sigma(i) * (dxhat.row(i).array() - m1 - c.xhat.row(i).array() * m2);
  }
  return dx;
}

namespace detail {

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
inline constexpr double kGeluA = 0.044715;

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

inline double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

/// Softmax of each row in place.
inline void softmax_rows(Mat& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

}  // namespace detail

struct BlockCache {
  LayerNormCache ln1;
  Mat a, q, k, v;
  std::vector<Mat> probs;  // per head, n x n
  Mat ctx;                 // concatenated head outputs, n x d
  LayerNormCache ln2;
  Mat b, pre, act;
};

struct EncoderCache {
  std::vector<int> ids;
  std::vector<int> indicator;
  std::vector<BlockCache> blocks;
  LayerNormCache lnf;
};

/// Hidden states H (n x d). Throws on sequences longer than max_len or ids
/// outside the vocabulary.
inline Mat encode(const ModelParams& p, const std::vector<int>& ids,
                  const std::vector<int>& indicator, EncoderCache* cache = nullptr) {
  const int n = static_cast<int>(ids.size());
  const int d = p.config.d_model;
  if (n > p.config.max_len) {
    throw InvalidArgument("encode: sequence of " + std::to_string(n) + " tokens exceeds max_len " +
                          std::to_string(p.config.max_len));
  }
  if (indicator.size() != ids.size()) throw InvalidArgument("encode: indicator length mismatch");
  Mat x(n, d);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= p.config.vocab_size) throw InvalidArgument("encode: id out of range");
    if (indicator[i] != 0 && indicator[i] != 1) throw InvalidArgument("encode: indicator not 0/1");
    x.row(i) = p.word_emb.row(ids[i]) + p.pos_emb.row(i) + p.index_emb.row(indicator[i]);
  }
  if (cache) {
    cache->ids = ids;
    cache->indicator = indicator;
    cache->blocks.assign(p.blocks.size(), BlockCache{});
  }
  const int h = p.config.n_heads;
  const int dh = d / h;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const auto& blk = p.blocks[k];
    BlockCache local;
    BlockCache& c = cache ? cache->blocks[k] : local;
    c.a = layer_norm(x, blk.ln1_g, blk.ln1_b, &c.ln1);
    c.q.noalias() = c.a * blk.wq;
    c.q.rowwise() += blk.bq.row(0);
    c.k.noalias() = c.a * blk.wk;
    c.v.noalias() = c.a * blk.wv;
    c.v.rowwise() += blk.bv.row(0);
    c.ctx.resize(n, d);
    c.probs.resize(static_cast<std::size_t>(h));
    for (int head = 0; head < h; ++head) {
      Mat s = (c.q.middleCols(head * dh, dh) * c.k.middleCols(head * dh, dh).transpose()) * scale;
      detail::softmax_rows(s);
      c.ctx.middleCols(head * dh, dh).noalias() = s * c.v.middleCols(head * dh, dh);
      c.probs[static_cast<std::size_t>(head)] = std::move(s);
    }
    x.noalias() += c.ctx * blk.wo;
    x.rowwise() += blk.bo.row(0);
    c.b = layer_norm(x, blk.ln2_g, blk.ln2_b, &c.ln2);
    c.pre.noalias() = c.b * blk.w1;
    c.pre.rowwise() += blk.b1.row(0);
    c.act = c.pre.unaryExpr([](double v) { return detail::gelu(v); });
    x.noalias() += c.act * blk.w2;
    x.rowwise() += blk.b2.row(0);
  }
  return layer_norm(x, p.lnf_g, p.lnf_b, cache ? &cache->lnf : nullptr);
}

/// Accumulates parameter gradients for dL/dH into `g`.
inline void encode_backward(const ModelParams& p, const EncoderCache& cache, const Mat& dh_out,
                            ModelParams& g) {
  Mat dx = layer_norm_backward(dh_out, p.lnf_g, cache.lnf, g.lnf_g, g.lnf_b);
  const int d = p.config.d_model;
  const int h = p.config.n_heads;
  const int dh = d / h;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t k = p.blocks.size(); k-- > 0;) {
    const auto& blk = p.blocks[k];
    auto& gb = g.blocks[k];
    const auto& c = cache.blocks[k];

    // Feed-forward residual branch.
    gb.b2.row(0) += dx.colwise().sum();
    gb.w2.noalias() += c.act.transpose() * dx;
    Mat dpre = dx * blk.w2.transpose();
    dpre.array() *= c.pre.unaryExpr([](double v) { return detail::gelu_grad(v); }).array();
    gb.b1.row(0) += dpre.colwise().sum();
    gb.w1.noalias() += c.b.transpose() * dpre;
    const Mat db = dpre * blk.w1.transpose();
    dx += layer_norm_backward(db, blk.ln2_g, c.ln2, gb.ln2_g, gb.ln2_b);

    // Attention residual branch.
    gb.bo.row(0) += dx.colwise().sum();
    gb.wo.noalias() += c.ctx.transpose() * dx;
    const Mat dctx = dx * blk.wo.transpose();
    Mat dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
    for (int head = 0; head < h; ++head) {
      const Mat& pr = c.probs[static_cast<std::size_t>(head)];
      const auto dctx_h = dctx.middleCols(head * dh, dh);
      dv.middleCols(head * dh, dh).noalias() = pr.transpose() * dctx_h;
      Mat dp = dctx_h * c.v.middleCols(head * dh, dh).transpose();
      const Vec rowdot = (dp.array() * pr.array()).rowwise().sum();
      Mat ds = pr.array() * (dp.colwise() - rowdot).array();
      ds *= scale;
      dq.middleCols(head * dh, dh).noalias() = ds * c.k.middleCols(head * dh, dh);
      dk.middleCols(head * dh, dh).noalias() = ds.transpose() * c.q.middleCols(head * dh, dh);
    }
    gb.bq.row(0) += dq.colwise().sum();
    gb.bv.row(0) += dv.colwise().sum();
    gb.wq.noalias() += c.a.transpose() * dq;
    gb.wk.noalias() += c.a.transpose() * dk;
    gb.wv.noalias() += c.a.transpose() * dv;
    Mat da = dq * blk.wq.transpose();
    da.noalias() += dk * blk.wk.transpose();
    da.noalias() += dv * blk.wv.transpose();
    dx += layer_norm_backward(da, blk.ln1_g, c.ln1, gb.ln1_g, gb.ln1_b);
  }
  for (std::size_t i = 0; i < cache.ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    g.word_emb.row(cache.ids[i]) += dx.row(r);
    g.pos_emb.row(r) += dx.row(r);
    g.index_emb.row(cache.indicator[i]) += dx.row(r);
  }
}

}  // namespace calibre
