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

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/model/calibrator.hpp"
#include "calibre/model/params.hpp"
#include "calibre/rng.hpp"
#include "json.hpp"

namespace calibre {

struct TrainConfig {
  TaskMode mode = TaskMode::Ner;
  LossWeights weights;
  int epochs = 5;
  int batch_size = 16;
  double lr = 1e-3;
  double weight_decay = 0.01;
  /// Fraction of all steps spent in linear warm-up.
  double warmup = 0.1;
  /// Hard restarts of the cosine decay after warm-up.
  int cycles = 1;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    weights.validate();
    if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be finite and >= 0");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
    if (!(warmup >= 0.0 && warmup < 1.0)) throw InvalidArgument("warmup must lie in [0, 1)");
    if (cycles < 1) throw InvalidArgument("cycles must be >= 1");
    if (!(clip_norm >= 0.0)) throw InvalidArgument("clip_norm must be >= 0");
  }

  nlohmann::ordered_json to_json() const {
    return {{"mode", to_string(mode)},
            {"alpha", weights.alpha},
            {"beta", weights.beta},
            {"gamma", weights.gamma},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"lr", lr},
            {"weight_decay", weight_decay},
            {"warmup", warmup},
            {"cycles", cycles},
            {"clip_norm", clip_norm},
            {"seed", seed}};
  }
};

/// Learning-rate multiplier at `step` of `total`: linear warm-up, then
/// cosine decay restarted `cycles` times.
inline double lr_multiplier(long step, long total, double warmup, int cycles) {
  if (total <= 0) return 0.0;
  const long warm = static_cast<long>(std::floor(warmup * static_cast<double>(total)));
  if (step < warm) return static_cast<double>(step + 1) / static_cast<double>(warm);
  const double progress =
      static_cast<double>(step - warm) / static_cast<double>(std::max<long>(1, total - warm));
  if (progress >= 1.0) return 0.0;
  const double phase = std::fmod(static_cast<double>(cycles) * progress, 1.0);
  return 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(const ModelParams& shape, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8)
      : m_(shape.zeros_like()), v_(shape.zeros_like()), wd_(weight_decay), b1_(beta1), b2_(beta2),
        eps_(eps) {}

  void step(ModelParams& p, const ModelParams& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    std::vector<const Mat*> gs;
    std::vector<Mat*> ms, vs;
    g.visit([&](const std::string&, const Mat& x) { gs.push_back(&x); });
    m_.visit([&](const std::string&, Mat& x) { ms.push_back(&x); });
    v_.visit([&](const std::string&, Mat& x) { vs.push_back(&x); });
    std::size_t i = 0;
    p.visit([&](const std::string&, Mat& w) {
      Mat& m = *ms[i];
      Mat& v = *vs[i];
      const Mat& gr = *gs[i];
      ++i;
      m = b1_ * m + (1.0 - b1_) * gr;
      v = b2_ * v + (1.0 - b2_) * gr.cwiseProduct(gr);
      w *= 1.0 - lr * wd_;
      w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    });
  }

 private:
  ModelParams m_, v_;
  double wd_, b1_, b2_, eps_;
  long t_ = 0;
};

inline double grad_norm(const ModelParams& g) {
  double s = 0.0;
  g.visit([&](const std::string&, const Mat& m) { s += m.squaredNorm(); });
  return std::sqrt(s);
}

inline void scale_params(ModelParams& g, double c) {
  g.visit([&](const std::string&, Mat& m) { m *= c; });
}

struct StepRecord {
  int epoch = 0;
  long step = 0;
  double lr = 0.0;
  LossBreakdown loss;
};

struct EpochRecord {
  int epoch = 0;
  long examples = 0;
  LossBreakdown mean;
};

inline nlohmann::ordered_json loss_json(const LossBreakdown& b) {
  return {{"l_position", b.position}, {"l_cls", b.cls}, {"l_span", b.span},
          {"l_mlm", b.mlm},           {"l_total", b.total}};
}

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  /// One JSON object per line: every step, then an epoch summary after the
  /// last step of each epoch.
  std::string to_jsonl() const {
    std::string out;
    std::size_t s = 0;
    for (const auto& e : epochs) {
      for (; s < steps.size() && steps[s].epoch <= e.epoch; ++s) {
        nlohmann::ordered_json j{{"kind", "step"}, {"epoch", steps[s].epoch},
                                 {"step", steps[s].step}, {"lr", steps[s].lr}};
        j.update(loss_json(steps[s].loss));
        out += j.dump() + "\n";
      }
      nlohmann::ordered_json j{{"kind", "epoch"}, {"epoch", e.epoch}, {"examples", e.examples}};
      j.update(loss_json(e.mean));
      out += j.dump() + "\n";
    }
    return out;
  }
};

/// Training hit a non-finite loss or parameter. Carries the parameters from
/// before the failing step.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, ModelParams last_good, int epoch, long step)
      : Error(what), last_good(std::move(last_good)), epoch(epoch), step(step) {}
  ModelParams last_good;
  int epoch;
  long step;
};

namespace detail {

/// Shared mini-batch loop. `example_grad(params, index, epoch, grads)`
/// returns the loss of one example and adds its gradient.
template <typename ExampleGrad>
ModelParams run_training(ModelParams params, std::size_t n, const TrainConfig& cfg,
                         ExampleGrad&& example_grad, TrainLog* log,
                         const std::function<void(const EpochRecord&, const ModelParams&)>& on_epoch) {
  cfg.validate();
  if (n == 0) throw InvalidArgument("fit: empty dataset");
  AdamW opt(params, cfg.weight_decay);
  const long per_epoch = static_cast<long>((n + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                           static_cast<std::size_t>(cfg.batch_size));
  const long total = per_epoch * cfg.epochs;
  long step = 0;
  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng(cfg.seed, "epoch:" + std::to_string(epoch)).shuffle(order);
    EpochRecord rec{epoch, 0, {}};
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(n, b + static_cast<std::size_t>(cfg.batch_size));
      ModelParams grads = params.zeros_like();
      LossBreakdown sum;
      for (std::size_t k = b; k < e; ++k) {
        LossBreakdown l;
        try {
          l = example_grad(static_cast<const ModelParams&>(params), order[k], epoch, grads);
        } catch (const NonFiniteLoss& ex) {
          throw DivergenceError(ex.what(), params, epoch, step);
        }
        sum.position += l.position;
        sum.cls += l.cls;
        sum.span += l.span;
        sum.mlm += l.mlm;
        sum.total += l.total;
      }
      const double inv = 1.0 / static_cast<double>(e - b);
      scale_params(grads, inv);
      const double norm = grad_norm(grads);
      if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient", params, epoch, step);
      if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) scale_params(grads, cfg.clip_norm / norm);
      const double lr = cfg.lr * lr_multiplier(step, total, cfg.warmup, cfg.cycles);
      if (lr > 0.0) {
        ModelParams before = params;
        opt.step(params, grads, lr);
        if (!params.all_finite()) {
          throw DivergenceError("non-finite parameters", std::move(before), epoch, step);
        }
      }
      if (log) {
        log->steps.push_back({epoch, step, lr,
                              {sum.position * inv, sum.cls * inv, sum.span * inv, sum.mlm * inv,
                               sum.total * inv}});
      }
      rec.examples += static_cast<long>(e - b);
      rec.mean.position += sum.position;
      rec.mean.cls += sum.cls;
      rec.mean.span += sum.span;
      rec.mean.mlm += sum.mlm;
      rec.mean.total += sum.total;
      ++step;
    }
    const double inv = 1.0 / static_cast<double>(rec.examples);
    rec.mean.position *= inv;
    rec.mean.cls *= inv;
    rec.mean.span *= inv;
    rec.mean.mlm *= inv;
    rec.mean.total *= inv;
    if (log) log->epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, params);
  }
  return params;
}

}  // namespace detail

/// Trains the calibration model. Negative pairs and MLM corruption are
/// redrawn every epoch from Rng(seed, "sample:<epoch>:<index>").
inline ModelParams fit(ModelParams params, const std::vector<EncodedExample>& data,
                       const TrainConfig& cfg, TrainLog* log = nullptr,
                       const std::function<void(const EpochRecord&, const ModelParams&)>& on_epoch = {}) {
  const int vocab = params.config.vocab_size;
  auto grad = [&](const ModelParams& p, std::size_t i, int epoch, ModelParams& g) {
    Rng rng(cfg.seed, "sample:" + std::to_string(epoch) + ":" + std::to_string(i));
    const TrainingSample s = make_sample(data[i], cfg.mode, vocab, rng);
    return loss_and_grad(p, s, cfg.mode, cfg.weights, &g);
  };
  return detail::run_training(std::move(params), data.size(), cfg, grad, log, on_epoch);
}

}  // namespace calibre
