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

// Trainable tensors. Every tensor is a dense row-major-semantics matrix
// (rows index tokens/positions/outputs); biases and vectors are 1 x n.
// Gradients use the same struct.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/model/config.hpp"
#include "calibre/rng.hpp"

namespace calibre {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

struct EncoderBlock {
  Mat ln1_g, ln1_b;
  // No key bias: it adds the same amount to every score in a softmax row.
  Mat wq, bq, wk, wv, bv, wo, bo;
  Mat ln2_g, ln2_b;
  Mat w1, b1, w2, b2;

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + "ln1_g", self.ln1_g);
    f(prefix + "ln1_b", self.ln1_b);
    f(prefix + "wq", self.wq);
    f(prefix + "bq", self.bq);
    f(prefix + "wk", self.wk);
    f(prefix + "wv", self.wv);
    f(prefix + "bv", self.bv);
    f(prefix + "wo", self.wo);
    f(prefix + "bo", self.bo);
    f(prefix + "ln2_g", self.ln2_g);
    f(prefix + "ln2_b", self.ln2_b);
    f(prefix + "w1", self.w1);
    f(prefix + "b1", self.b1);
    f(prefix + "w2", self.w2);
    f(prefix + "b2", self.b2);
  }
};

struct ModelParams {
  ModelConfig config;

  Mat word_emb;    // V x d
  Mat pos_emb;     // L x d
  Mat index_emb;   // 2 x d, row 1 marks passage tokens inside the noisy span
  std::vector<EncoderBlock> blocks;
  Mat lnf_g, lnf_b;
  Mat w_start, b_start;  // 1 x d, 1 x 1
  Mat w_end, b_end;
  Mat w_cls, b_cls;      // |C| x d, 1 x |C|
  Mat w_idx, b_idx;      // 1 x 2d, 1 x 1
  Mat w_mlm, b_mlm;      // V x d, 1 x V
  Mat w_bio, b_bio;      // |BIO| x d, 1 x |BIO|

  /// Calls f(name, tensor) for every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  /// Same shapes, all zeros.
  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.visit([](const std::string&, Mat& m) { m.setZero(); });
    return z;
  }

  bool all_finite() const {
    bool ok = true;
    visit([&](const std::string&, const Mat& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  /// Seeded initialization. Weights are uniform in +-1/sqrt(fan_in), word and
  /// noisy-index embeddings have unit variance, biases start at zero,
  /// layer-norm gains at one, positions sinusoidal.
  static ModelParams init(const ModelConfig& cfg) {
    cfg.validate();
    const int d = cfg.d_model;
    const int ff = cfg.ff_width();
    ModelParams p;
    p.config = cfg;
    p.word_emb = Mat(cfg.vocab_size, d);
    p.pos_emb = Mat(cfg.max_len, d);
    p.index_emb = Mat(2, d);
    p.blocks.resize(static_cast<std::size_t>(cfg.n_layers));
    for (auto& b : p.blocks) {
      b.ln1_g = Mat::Ones(1, d);
      b.ln1_b = Mat::Zero(1, d);
      b.wq = Mat(d, d);
      b.wk = Mat(d, d);
      b.wv = Mat(d, d);
      b.wo = Mat(d, d);
      b.bq = b.bv = b.bo = Mat::Zero(1, d);
      b.ln2_g = Mat::Ones(1, d);
      b.ln2_b = Mat::Zero(1, d);
      b.w1 = Mat(d, ff);
      b.b1 = Mat::Zero(1, ff);
      b.w2 = Mat(ff, d);
      b.b2 = Mat::Zero(1, d);
    }
    p.lnf_g = Mat::Ones(1, d);
    p.lnf_b = Mat::Zero(1, d);
    p.w_start = Mat(1, d);
    p.w_end = Mat(1, d);
    p.b_start = p.b_end = Mat::Zero(1, 1);
    p.w_cls = Mat(cfg.n_types, d);
    p.b_cls = Mat::Zero(1, cfg.n_types);
    p.w_idx = Mat(1, 2 * d);
    p.b_idx = Mat::Zero(1, 1);
    p.w_mlm = Mat(cfg.vocab_size, d);
    p.b_mlm = Mat::Zero(1, cfg.vocab_size);
    p.w_bio = Mat(cfg.n_bio, d);
    p.b_bio = Mat::Zero(1, cfg.n_bio);

    p.visit([&](const std::string& name, Mat& m) {
      Rng rng(cfg.seed, name);
      auto fill = [&](double a) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * a;
      };
      if (name == "word_emb" || name == "index_emb") {
        fill(std::sqrt(3.0));
      } else if (name == "pos_emb") {
        for (int pos = 0; pos < cfg.max_len; ++pos) {
          for (int i = 0; i < d; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
            m(pos, i) = i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq);
          }
        }
      } else if (name.ends_with("w1") || name.ends_with("w2") || name.ends_with("wq") ||
                 name.ends_with("wk") || name.ends_with("wv") || name.ends_with("wo")) {
        fill(1.0 / std::sqrt(static_cast<double>(m.rows())));
      } else if (name == "w_start" || name == "w_end" || name == "w_cls" || name == "w_mlm" ||
                 name == "w_bio" || name == "w_idx") {
        fill(1.0 / std::sqrt(static_cast<double>(m.cols())));
      }
    });
    return p;
  }

  /// Replaces the classification head for a new type inventory.
  void reset_cls_head(int n_types, std::uint64_t seed) {
    config.n_types = n_types;
    const int d = config.d_model;
    w_cls = Mat(n_types, d);
    b_cls = Mat::Zero(1, n_types);
    Rng rng(seed, "w_cls");
    for (Eigen::Index i = 0; i < w_cls.size(); ++i) {
      w_cls.data()[i] = (2.0 * rng.uniform() - 1.0) / std::sqrt(static_cast<double>(d));
    }
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("word_emb"), self.word_emb);
    f(std::string("pos_emb"), self.pos_emb);
    f(std::string("index_emb"), self.index_emb);
    for (std::size_t k = 0; k < self.blocks.size(); ++k) {
      EncoderBlock::visit(self.blocks[k], "block" + std::to_string(k) + ".", f);
    }
    f(std::string("lnf_g"), self.lnf_g);
    f(std::string("lnf_b"), self.lnf_b);
    f(std::string("w_start"), self.w_start);
    f(std::string("b_start"), self.b_start);
    f(std::string("w_end"), self.w_end);
    f(std::string("b_end"), self.b_end);
    f(std::string("w_cls"), self.w_cls);
    f(std::string("b_cls"), self.b_cls);
    f(std::string("w_idx"), self.w_idx);
    f(std::string("b_idx"), self.b_idx);
    f(std::string("w_mlm"), self.w_mlm);
    f(std::string("b_mlm"), self.b_mlm);
    f(std::string("w_bio"), self.w_bio);
    f(std::string("b_bio"), self.b_bio);
  }
};

/// Adds `scale * other` to every tensor of `into`.
inline void axpy(ModelParams& into, const ModelParams& other, double scale) {
  std::vector<const Mat*> src;
  other.visit([&](const std::string&, const Mat& m) { src.push_back(&m); });
  std::size_t i = 0;
  into.visit([&](const std::string&, Mat& m) { m += scale * *src[i++]; });
}

}  // namespace calibre
