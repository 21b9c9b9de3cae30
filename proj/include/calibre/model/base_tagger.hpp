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

// First-pass BIO tagger: the shared encoder over "[CLS] tokens" with a
// per-token softmax head, trained with token-level cross-entropy.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/model/encoder.hpp"
#include "calibre/model/params.hpp"
#include "calibre/model/train.hpp"
#include "calibre/model/vocab.hpp"
#include "calibre/textcore/bio.hpp"

namespace calibre {

struct TaggerInput {
  std::vector<int> ids;
  /// Label index per token (ids.size() - 1 entries); empty at inference.
  std::vector<int> labels;
};

inline TaggerInput encode_tagger_input(const TokenSeq& tokens, const Vocab& vocab) {
  TaggerInput in;
  in.ids.push_back(Vocab::kCls);
  for (const auto& t : tokens.tokens) in.ids.push_back(vocab.id(t));
  return in;
}

inline TaggerInput encode_tagger_input(const LabeledSentence& s, const Vocab& vocab,
                                       const std::vector<std::string>& bio) {
  if (s.labels.size() != s.tokens.size()) throw FormatError("tagger: label/token count mismatch");
  TaggerInput in = encode_tagger_input(s.tokens, vocab);
  for (const auto& l : s.labels) {
    int k = -1;
    for (std::size_t i = 0; i < bio.size(); ++i) {
      if (bio[i] == l) k = static_cast<int>(i);
    }
    if (k < 0) throw FormatError("tagger: label '" + l + "' not in the inventory");
    in.labels.push_back(k);
  }
  return in;
}

/// Row-wise label distributions for the sentence tokens (n x |BIO|).
inline Mat tagger_probs(const ModelParams& p, const Mat& h) {
  Mat z = h.bottomRows(h.rows() - 1) * p.w_bio.transpose();
  z.rowwise() += p.b_bio.row(0);
  detail::softmax_rows(z);
  return z;
}

/// Mean token cross-entropy; adds its gradient into `grads` when set.
inline double tagger_loss_and_grad(const ModelParams& p, const TaggerInput& in,
                                   ModelParams* grads = nullptr) {
  if (p.config.n_bio < 1) throw InvalidArgument("tagger: model has no BIO head");
  const int n = static_cast<int>(in.ids.size()) - 1;
  if (n < 1) throw InvalidArgument("tagger: empty sentence");
  if (static_cast<int>(in.labels.size()) != n) throw InvalidArgument("tagger: missing labels");
  const std::vector<int> indicator(in.ids.size(), 0);
  EncoderCache cache;
  const Mat h = encode(p, in.ids, indicator, grads ? &cache : nullptr);
  Mat probs = tagger_probs(p, h);
  double loss = 0.0;
  for (int t = 0; t < n; ++t) loss -= std::log(probs(t, in.labels[static_cast<std::size_t>(t)]));
  loss /= n;
  if (!std::isfinite(loss)) throw NonFiniteLoss("non-finite tagger loss");
  if (!grads) return loss;
  for (int t = 0; t < n; ++t) probs(t, in.labels[static_cast<std::size_t>(t)]) -= 1.0;
  probs /= n;
  const Mat hs = h.bottomRows(n);
  grads->w_bio.noalias() += probs.transpose() * hs;
  grads->b_bio.row(0) += probs.colwise().sum();
  Mat dh = Mat::Zero(h.rows(), h.cols());
  dh.bottomRows(n).noalias() = probs * p.w_bio;
  encode_backward(p, cache, dh, *grads);
  return loss;
}

/// Per-token argmax (ties to the lowest label index), then BIO repair.
inline std::vector<std::string> base_tag(const TokenSeq& tokens, const ModelParams& p,
                                         const Vocab& vocab, const std::vector<std::string>& bio) {
  if (static_cast<int>(bio.size()) != p.config.n_bio) {
    throw InvalidArgument("tagger: label inventory does not match the BIO head");
  }
  if (tokens.size() == 0) return {};
  const TaggerInput in = encode_tagger_input(tokens, vocab);
  const Mat probs = tagger_probs(p, encode(p, in.ids, std::vector<int>(in.ids.size(), 0)));
  std::vector<std::string> labels;
  for (Eigen::Index t = 0; t < probs.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probs.cols(); ++k) {
      if (probs(t, k) > probs(t, best)) best = k;
    }
    labels.push_back(bio[static_cast<std::size_t>(best)]);
  }
  return repair_bio(labels);
}

/// Trains the tagger head and encoder. Logged losses carry the token
/// cross-entropy in `total` only.
inline ModelParams fit_tagger(ModelParams params, const std::vector<TaggerInput>& data,
                              const TrainConfig& cfg, TrainLog* log = nullptr,
                              const std::function<void(const EpochRecord&, const ModelParams&)>& on_epoch = {}) {
  auto grad = [&](const ModelParams& p, std::size_t i, int, ModelParams& g) {
    LossBreakdown b;
    b.total = tagger_loss_and_grad(p, data[i], &g);
    return b;
  };
  return detail::run_training(std::move(params), data.size(), cfg, grad, log, on_epoch);
}

/// Fraction of tokens whose predicted label equals the gold label.
inline double token_accuracy(const std::vector<LabeledSentence>& sentences, const ModelParams& p,
                             const Vocab& vocab, const std::vector<std::string>& bio) {
  long hit = 0, total = 0;
  for (const auto& s : sentences) {
    const auto pred = base_tag(s.tokens, p, vocab, bio);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      hit += pred[i] == s.labels[i] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace calibre
