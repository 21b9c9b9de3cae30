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

// The calibration model reads
//
//   [CLS] question [SEP] noisy answer [SEP] passage
//
// with the noisy-index indicator set on the passage tokens covered by the
// noisy span, and predicts the gold span through start/end pointers over
// the passage, a span-matching score for (start, end) pairs, an entity type
// from the pointed rows, and (while pre-training) masked passage words.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/model/config.hpp"
#include "calibre/model/encoder.hpp"
#include "calibre/model/params.hpp"
#include "calibre/model/vocab.hpp"
#include "calibre/rng.hpp"
#include "calibre/textcore/pbr_jsonl.hpp"

namespace calibre {

inline constexpr int kNegativePairs = 8;
inline constexpr double kMlmRate = 0.05;
inline constexpr double kMlmMaskShare = 0.8;
inline constexpr int kMaxAnswerLenNer = 8;
inline constexpr int kMaxAnswerLenMrc = 30;

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

/// Token ids and layout of one calibration input.
struct EncodedExample {
  std::vector<int> ids;
  /// 1 exactly on passage tokens inside the noisy span.
  std::vector<int> indicator;
  int passage_offset = 0;
  int passage_len = 0;
  /// Absolute positions of the gold start and (inclusive) end token.
  int gold_start = -1;
  int gold_end = -1;
  /// Index into the model's type list, -1 when untyped.
  int type = -1;
};

inline EncodedExample encode_example(const CalibrationExample& ex, const Vocab& vocab,
                                     const TypeList& types, int max_len) {
  ex.validate();
  if (ex.noisy.empty()) throw InvalidArgument("example '" + ex.id + "': empty noisy span");
  EncodedExample e;
  e.ids.push_back(Vocab::kCls);
  if (ex.question && ex.question->size() > 0) {
    for (const auto& t : ex.question->tokens) e.ids.push_back(vocab.id(t));
  } else {
    e.ids.push_back(Vocab::kPad);
  }
  e.ids.push_back(Vocab::kSep);
  for (int i = ex.noisy.start; i < ex.noisy.end; ++i) e.ids.push_back(vocab.id(ex.passage.tokens[i]));
  e.ids.push_back(Vocab::kSep);
  e.passage_offset = static_cast<int>(e.ids.size());
  e.passage_len = static_cast<int>(ex.passage.size());
  for (const auto& t : ex.passage.tokens) e.ids.push_back(vocab.id(t));
  if (static_cast<int>(e.ids.size()) > max_len) {
    throw InvalidArgument("example '" + ex.id + "': " + std::to_string(e.ids.size()) +
                          " tokens exceed max_len " + std::to_string(max_len));
  }
  e.indicator.assign(e.ids.size(), 0);
  for (int i = ex.noisy.start; i < ex.noisy.end; ++i) e.indicator[e.passage_offset + i] = 1;
  e.gold_start = e.passage_offset + ex.gold.start;
  e.gold_end = e.passage_offset + ex.gold.end - 1;
  if (ex.gold_type) e.type = type_index(types, *ex.gold_type);
  return e;
}

/// Input length encode_example would produce.
inline int encoded_length(const CalibrationExample& ex) {
  const int q = ex.question && ex.question->size() > 0 ? static_cast<int>(ex.question->size()) : 1;
  return 3 + q + ex.noisy.length() + static_cast<int>(ex.passage.size());
}

struct PointerProbs {
  Vec start;  // length n, zero outside the passage
  Vec end;
};

namespace detail {

inline Vec masked_softmax(const Vec& logits, int offset, int len) {
  Vec p = Vec::Zero(logits.size());
  const double m = logits.segment(offset, len).maxCoeff();
  p.segment(offset, len) = (logits.segment(offset, len).array() - m).exp();
  p.segment(offset, len) /= p.segment(offset, len).sum();
  return p;
}

inline int argmax_lowest(const Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

/// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail

/// Start/end distributions over the passage segment [offset, offset + len).
/// The scalar biases b_start and b_end shift every logit equally and cancel
/// in the softmax, so they are left out of the computation (and receive a
/// zero gradient).
inline PointerProbs pointer_probs(const Mat& h, const ModelParams& p, int offset, int len) {
  if (len < 1 || offset < 0 || offset + len > h.rows()) {
    throw InvalidArgument("pointer_probs: passage segment outside the sequence");
  }
  const Vec zs = h * p.w_start.transpose();
  const Vec ze = h * p.w_end.transpose();
  return {detail::masked_softmax(zs, offset, len), detail::masked_softmax(ze, offset, len)};
}

inline double loss_position(const Vec& p_start, const Vec& p_end, int y_start, int y_end) {
  if (y_start < 0 || y_start >= p_start.size() || y_end < 0 || y_end >= p_end.size()) {
    throw InvalidArgument("loss_position: gold index out of range");
  }
  if (p_start(y_start) == 0.0 || p_end(y_end) == 0.0) {
    throw InvalidArgument("loss_position: gold position is masked out");
  }
  return -0.5 * (std::log(p_start(y_start)) + std::log(p_end(y_end)));
}

/// Type distribution from the mean of rows i and j.
inline Vec type_probs(const Mat& h, const ModelParams& p, int i, int j) {
  const RowVec f = 0.5 * (h.row(i) + h.row(j));
  Vec z = p.w_cls * f.transpose() + p.b_cls.row(0).transpose();
  const double m = z.maxCoeff();
  z = (z.array() - m).exp();
  return z / z.sum();
}

inline double loss_cls(const Mat& h, const Vec& p_start, const Vec& p_end, int y_cls,
                       const ModelParams& p) {
  if (p.config.n_types < 2) throw InvalidArgument("loss_cls: need at least two types");
  if (y_cls < 0 || y_cls >= p.config.n_types) throw InvalidArgument("loss_cls: bad type index");
  const Vec pc =
      type_probs(h, p, detail::argmax_lowest(p_start), detail::argmax_lowest(p_end));
  return -std::log(pc(y_cls));
}

struct SpanPair {
  int i = 0;  // absolute start
  int j = 0;  // absolute inclusive end
  double label = 0.0;
};

inline double span_score(const Mat& h, const ModelParams& p, int i, int j) {
  const int d = p.config.d_model;
  return p.w_idx.leftCols(d).row(0).dot(h.row(i)) + p.w_idx.rightCols(d).row(0).dot(h.row(j)) +
         p.b_idx(0, 0);
}

/// Mean binary cross-entropy of sigmoid(w_idx . [H_i; H_j] + b) over pairs.
inline double loss_span(const Mat& h, const std::vector<SpanPair>& pairs, const ModelParams& p) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& pr : pairs) {
    const double s = span_score(h, p, pr.i, pr.j);
    total -= pr.label * detail::log_sigmoid(s) + (1.0 - pr.label) * detail::log_sigmoid(-s);
  }
  return total / static_cast<double>(pairs.size());
}

/// Gold pair plus up to k distinct non-gold pairs (i <= j) inside the
/// passage, uniformly sampled.
inline std::vector<SpanPair> sample_span_pairs(const EncodedExample& e, Rng& rng,
                                               int k = kNegativePairs) {
  std::vector<SpanPair> out{{e.gold_start, e.gold_end, 1.0}};
  const int n = e.passage_len;
  const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2;
  // Pair index r enumerates (i, j) row by row; the gold pair is skipped.
  const int gs = e.gold_start - e.passage_offset;
  const int ge = e.gold_end - e.passage_offset;
  auto pair_at = [n](std::size_t r) {
    int i = 0;
    while (r >= static_cast<std::size_t>(n - i)) {
      r -= static_cast<std::size_t>(n - i);
      ++i;
    }
    return std::pair<int, int>{i, i + static_cast<int>(r)};
  };
  const std::size_t negatives = total - 1;
  const std::size_t take = std::min<std::size_t>(negatives, static_cast<std::size_t>(k));
  for (std::size_t r : rng.sample_without_replacement(negatives, take)) {
    auto [i, j] = pair_at(r);
    if (i > gs || (i == gs && j >= ge)) {
      // Shift past the gold pair in the enumeration.
      std::tie(i, j) = pair_at(r + 1);
    }
    out.push_back({e.passage_offset + i, e.passage_offset + j, 0.0});
  }
  return out;
}

struct MlmMask {
  std::vector<int> ids;
  /// (absolute position, original id) for every selected position.
  std::vector<std::pair<int, int>> targets;
};

/// Selects each passage token outside the gold span (and not a special
/// token) with probability `rate`; 80% of the selections become [MASK],
/// the rest a random non-special word.
inline MlmMask mask_for_mlm(const EncodedExample& e, int vocab_size, Rng& rng,
                            double rate = kMlmRate) {
  MlmMask m{e.ids, {}};
  for (int k = 0; k < e.passage_len; ++k) {
    const int pos = e.passage_offset + k;
    if (pos >= e.gold_start && pos <= e.gold_end) continue;
    if (e.ids[pos] < Vocab::kNumSpecial) continue;
    if (!rng.bernoulli(rate)) continue;
    m.targets.emplace_back(pos, e.ids[pos]);
    if (rng.bernoulli(kMlmMaskShare)) {
      m.ids[pos] = Vocab::kMask;
    } else {
      m.ids[pos] = static_cast<int>(rng.between(Vocab::kNumSpecial, vocab_size - 1));
    }
  }
  return m;
}

struct LossBreakdown {
  double position = 0.0;
  double cls = 0.0;
  double span = 0.0;
  double mlm = 0.0;
  double total = 0.0;
};

/// Combines components. Ner: a*pos + b*cls + g*span. Mrc: (pos + span) / 2.
/// Pretrain: a*pos + b*cls + g*span + mlm, where cls is zero for untyped
/// data.
inline LossBreakdown joint_loss(double position, double cls, double span, double mlm,
                                const LossWeights& w, TaskMode mode) {
  w.validate();
  LossBreakdown b{position, cls, span, mlm, 0.0};
  switch (mode) {
    case TaskMode::Ner:
      b.mlm = 0.0;
      b.total = w.alpha * position + w.beta * cls + w.gamma * span;
      break;
    case TaskMode::Mrc:
      b.cls = 0.0;
      b.mlm = 0.0;
      b.total = 0.5 * (position + span);
      break;
    case TaskMode::Pretrain:
      b.total = w.alpha * position + w.beta * cls + w.gamma * span + mlm;
      break;
  }
  return b;
}

/// Effective multipliers of each component under `mode`.
struct ComponentScale {
  double position, cls, span, mlm;
};

inline ComponentScale component_scale(const LossWeights& w, TaskMode mode) {
  switch (mode) {
    case TaskMode::Ner: return {w.alpha, w.beta, w.gamma, 0.0};
    case TaskMode::Mrc: return {0.5, 0.0, 0.5, 0.0};
    case TaskMode::Pretrain: return {w.alpha, w.beta, w.gamma, 1.0};
  }
  return {0, 0, 0, 0};
}

/// One encoded example with its sampled negatives and MLM corruption.
struct TrainingSample {
  EncodedExample enc;
  std::vector<int> input_ids;  // enc.ids after MLM corruption
  std::vector<SpanPair> pairs;
  std::vector<std::pair<int, int>> mlm_targets;
};

inline TrainingSample make_sample(const EncodedExample& enc, TaskMode mode, int vocab_size,
                                  Rng& rng) {
  TrainingSample s;
  s.enc = enc;
  s.pairs = sample_span_pairs(enc, rng);
  if (mode == TaskMode::Pretrain) {
    MlmMask m = mask_for_mlm(enc, vocab_size, rng);
    s.input_ids = std::move(m.ids);
    s.mlm_targets = std::move(m.targets);
  } else {
    s.input_ids = enc.ids;
  }
  return s;
}

/// Loss of one sample; when `grads` is set, adds the gradient of the total.
/// `cls_rows` pins the rows feeding the type head (used by the gradient
/// check so the loss is smooth around the evaluation point).
inline LossBreakdown loss_and_grad(const ModelParams& p, const TrainingSample& s, TaskMode mode,
                                   const LossWeights& w, ModelParams* grads = nullptr,
                                   std::optional<std::pair<int, int>> cls_rows = std::nullopt) {
  const ComponentScale sc = component_scale(w, mode);
  EncoderCache cache;
  const Mat h = encode(p, s.input_ids, s.enc.indicator, grads ? &cache : nullptr);
  const int n = static_cast<int>(h.rows());
  const int off = s.enc.passage_offset;
  const int len = s.enc.passage_len;
  const PointerProbs pp = pointer_probs(h, p, off, len);

  const double l_pos = loss_position(pp.start, pp.end, s.enc.gold_start, s.enc.gold_end);

  const bool typed = s.enc.type >= 0 && p.config.n_types >= 2 && sc.cls > 0.0;
  double l_cls = 0.0;
  int ci = 0, cj = 0;
  Vec pc;
  if (typed) {
    if (cls_rows) {
      std::tie(ci, cj) = *cls_rows;
    } else {
      ci = detail::argmax_lowest(pp.start);
      cj = detail::argmax_lowest(pp.end);
    }
    pc = type_probs(h, p, ci, cj);
    l_cls = -std::log(pc(s.enc.type));
  }

  const double l_span = loss_span(h, s.pairs, p);

  double l_mlm = 0.0;
  Mat mlm_probs;
  if (sc.mlm > 0.0 && !s.mlm_targets.empty()) {
    mlm_probs.resize(p.config.vocab_size, static_cast<Eigen::Index>(s.mlm_targets.size()));
    for (std::size_t t = 0; t < s.mlm_targets.size(); ++t) {
      const auto [pos, target] = s.mlm_targets[t];
      Vec z = p.w_mlm * h.row(pos).transpose() + p.b_mlm.row(0).transpose();
      const double m = z.maxCoeff();
      z = (z.array() - m).exp();
      z /= z.sum();
      l_mlm -= std::log(z(target));
      mlm_probs.col(static_cast<Eigen::Index>(t)) = z;
    }
    l_mlm /= static_cast<double>(s.mlm_targets.size());
  }

  LossBreakdown out = joint_loss(l_pos, l_cls, l_span, l_mlm, w, mode);
  if (!std::isfinite(out.total)) throw NonFiniteLoss("non-finite loss");
  if (!grads) return out;

  ModelParams& g = *grads;
  Mat dh = Mat::Zero(n, p.config.d_model);

  // Pointer heads: d(-log p[y]) / dz = p - onehot(y), over the passage only.
  Vec dzs = pp.start;
  Vec dze = pp.end;
  dzs(s.enc.gold_start) -= 1.0;
  dze(s.enc.gold_end) -= 1.0;
  dzs *= 0.5 * sc.position;
  dze *= 0.5 * sc.position;
  g.w_start.row(0) += dzs.transpose() * h;
  g.w_end.row(0) += dze.transpose() * h;
  dh.noalias() += dzs * p.w_start;
  dh.noalias() += dze * p.w_end;

  if (typed) {
    Vec dz = pc;
    dz(s.enc.type) -= 1.0;
    dz *= sc.cls;
    const RowVec f = 0.5 * (h.row(ci) + h.row(cj));
    g.w_cls.noalias() += dz * f;
    g.b_cls.row(0) += dz.transpose();
    const RowVec df = dz.transpose() * p.w_cls;
    dh.row(ci) += 0.5 * df;
    dh.row(cj) += 0.5 * df;
  }

  if (!s.pairs.empty() && sc.span > 0.0) {
    const int d = p.config.d_model;
    const double inv = sc.span / static_cast<double>(s.pairs.size());
    for (const auto& pr : s.pairs) {
      const double ds = (detail::sigmoid(span_score(h, p, pr.i, pr.j)) - pr.label) * inv;
      g.w_idx.leftCols(d).row(0) += ds * h.row(pr.i);
      g.w_idx.rightCols(d).row(0) += ds * h.row(pr.j);
      g.b_idx(0, 0) += ds;
      dh.row(pr.i) += ds * p.w_idx.leftCols(d).row(0);
      dh.row(pr.j) += ds * p.w_idx.rightCols(d).row(0);
    }
  }

  if (mlm_probs.size() > 0) {
    const double inv = sc.mlm / static_cast<double>(s.mlm_targets.size());
    for (std::size_t t = 0; t < s.mlm_targets.size(); ++t) {
      const auto [pos, target] = s.mlm_targets[t];
      Vec dz = mlm_probs.col(static_cast<Eigen::Index>(t));
      dz(target) -= 1.0;
      dz *= inv;
      g.w_mlm.noalias() += dz * h.row(pos);
      g.b_mlm.row(0) += dz.transpose();
      dh.row(pos) += dz.transpose() * p.w_mlm;
    }
  }

  encode_backward(p, cache, dh, g);
  return out;
}

struct Decoded {
  /// Passage-relative span.
  Span span;
  std::optional<std::string> type;
  double score = 0.0;
  /// No finite (i, j) candidate; the whole passage was returned.
  bool fallback = false;
};

/// Best (i, j) with i <= j < i + max_len inside the passage, maximizing
/// log p_start[i] + log p_end[j] + lambda * log sigmoid(span score). Ties
/// keep the smallest (i, j).
inline Decoded decode_answer(const Vec& p_start, const Vec& p_end, const ModelParams& p,
                             const Mat& h, int offset, int len, int max_len,
                             const TypeList& types = {}, double lambda = 1.0) {
  if (max_len < 1) throw InvalidArgument("decode_answer: max_len < 1");
  double best = -std::numeric_limits<double>::infinity();
  int bi = -1, bj = -1;
  for (int i = offset; i < offset + len; ++i) {
    const double ls = std::log(p_start(i));
    if (!std::isfinite(ls)) continue;
    for (int j = i; j < std::min(offset + len, i + max_len); ++j) {
      double sc = ls + std::log(p_end(j));
      if (lambda != 0.0) sc += lambda * detail::log_sigmoid(span_score(h, p, i, j));
      if (std::isfinite(sc) && sc > best) {
        best = sc;
        bi = i;
        bj = j;
      }
    }
  }
  Decoded out;
  if (bi < 0) {
    out.span = Span(0, len);
    out.fallback = true;
    out.score = best;
    return out;
  }
  out.span = Span(bi - offset, bj - offset + 1);
  out.score = best;
  if (p.config.n_types >= 1 && static_cast<int>(types.size()) == p.config.n_types) {
    out.type = types[static_cast<std::size_t>(detail::argmax_lowest(type_probs(h, p, bi, bj)))];
    out.span.label = out.type;
  }
  return out;
}

/// Calibrated span for one encoded example.
inline Decoded predict(const ModelParams& p, const EncodedExample& e, const TypeList& types,
                       int max_len, double lambda = 1.0) {
  const Mat h = encode(p, e.ids, e.indicator);
  const PointerProbs pp = pointer_probs(h, p, e.passage_offset, e.passage_len);
  return decode_answer(pp.start, pp.end, p, h, e.passage_offset, e.passage_len, max_len, types,
                       lambda);
}

struct GradCheckGroup {
  std::string name;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
  double max_abs_diff = 0.0;
  /// max |g_a - g_n| / max(max |g_a|, max |g_n|, 1e-8) over the group.
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0.0;
};

/// Central-difference check of the gradient of the summed total loss over
/// `samples`, for every parameter tensor.
inline GradCheckReport grad_check(const ModelParams& params, const std::vector<TrainingSample>& samples,
                                  TaskMode mode, const LossWeights& w, double eps = 1e-5) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) throw InvalidArgument("grad_check: eps outside [1e-6, 1e-4]");
  ModelParams p = params;
  ModelParams analytic = p.zeros_like();
  std::vector<std::optional<std::pair<int, int>>> rows;
  for (const auto& s : samples) {
    loss_and_grad(p, s, mode, w, &analytic);
    const Mat h = encode(p, s.input_ids, s.enc.indicator);
    const auto pp = pointer_probs(h, p, s.enc.passage_offset, s.enc.passage_len);
    rows.emplace_back(std::pair<int, int>{detail::argmax_lowest(pp.start), detail::argmax_lowest(pp.end)});
  }
  auto total = [&] {
    double t = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      t += loss_and_grad(p, samples[k], mode, w, nullptr, rows[k]).total;
    }
    return t;
  };

  std::vector<Mat*> tensors;
  std::vector<std::string> names;
  p.visit([&](const std::string& name, Mat& m) {
    tensors.push_back(&m);
    names.push_back(name);
  });
  std::vector<const Mat*> grads;
  analytic.visit([&](const std::string&, const Mat& m) { grads.push_back(&m); });

  GradCheckReport report;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Mat& m = *tensors[t];
    GradCheckGroup grp;
    grp.name = names[t];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + eps;
      const double up = total();
      m.data()[i] = orig - eps;
      const double down = total();
      m.data()[i] = orig;
      const double gn = (up - down) / (2.0 * eps);
      const double ga = grads[t]->data()[i];
      grp.max_abs_analytic = std::max(grp.max_abs_analytic, std::abs(ga));
      grp.max_abs_numeric = std::max(grp.max_abs_numeric, std::abs(gn));
      grp.max_abs_diff = std::max(grp.max_abs_diff, std::abs(ga - gn));
    }
    grp.rel_error = grp.max_abs_diff /
                    std::max({grp.max_abs_analytic, grp.max_abs_numeric, 1e-8});
    report.max_rel_error = std::max(report.max_rel_error, grp.rel_error);
    report.groups.push_back(std::move(grp));
  }
  return report;
}

}  // namespace calibre
