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

#include <cstdint>
#include <string>

#include "calibre/error.hpp"
#include "json.hpp"

namespace calibre {

/// Shapes of the encoder and its heads.
struct ModelConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  /// Feed-forward width; 0 means 4 * d_model.
  int d_ff = 0;
  int max_len = 128;
  /// Entity types for the classification head (0 for untyped models).
  int n_types = 0;
  /// BIO labels for the base tagger head (0 when unused).
  int n_bio = 0;
  std::uint64_t seed = 0;

  int ff_width() const { return d_ff > 0 ? d_ff : 4 * d_model; }

  void validate() const {
    if (vocab_size < 6) throw InvalidArgument("ModelConfig: vocab_size must cover the specials");
    if (d_model < 1 || n_layers < 0 || n_heads < 1 || d_model % n_heads != 0) {
      throw InvalidArgument("ModelConfig: d_model must be a positive multiple of n_heads");
    }
    if (max_len < 4) throw InvalidArgument("ModelConfig: max_len < 4");
    if (n_types < 0 || n_bio < 0 || d_ff < 0) throw InvalidArgument("ModelConfig: negative size");
  }

  nlohmann::ordered_json to_json() const {
    return {{"vocab_size", vocab_size}, {"d_model", d_model}, {"n_layers", n_layers},
            {"n_heads", n_heads},       {"d_ff", ff_width()},  {"max_len", max_len},
            {"n_types", n_types},       {"n_bio", n_bio},      {"seed", seed}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.n_types = j.at("n_types").get<int>();
    c.n_bio = j.at("n_bio").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  }
};

enum class TaskMode {
  /// Phrase boundary recovery: alpha * position + gamma * span + MLM.
  Pretrain,
  /// alpha * position + beta * cls + gamma * span.
  Ner,
  /// (position + span) / 2.
  Mrc,
};

inline const char* to_string(TaskMode m) {
  switch (m) {
    case TaskMode::Pretrain: return "pretrain";
    case TaskMode::Ner: return "ner";
    case TaskMode::Mrc: return "mrc";
  }
  return "?";
}

inline TaskMode parse_task_mode(const std::string& s) {
  if (s == "pretrain") return TaskMode::Pretrain;
  if (s == "ner") return TaskMode::Ner;
  if (s == "mrc") return TaskMode::Mrc;
  throw InvalidArgument("unknown task '" + s + "' (expected pretrain, ner or mrc)");
}

struct LossWeights {
  double alpha = 0.3;
  double beta = 0.3;
  double gamma = 0.4;

  void validate() const {
    for (double w : {alpha, beta, gamma}) {
      if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("loss weights must lie in [0, 1]");
    }
  }
};

}  // namespace calibre
