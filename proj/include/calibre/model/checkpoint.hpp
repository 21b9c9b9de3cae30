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

// JSON tensor dump:
//   {"format": "calibre-checkpoint", "version": 1, "config": {...},
//    "vocab": [...], "types": [...], "tensors": {name: {rows, cols, data}}}
// Doubles are written with round-trip precision, so a reload is bit-exact.

#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/io.hpp"
#include "calibre/model/params.hpp"
#include "calibre/model/vocab.hpp"
#include "json.hpp"

namespace calibre {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  Vocab vocab;
  TypeList types;
  /// Free-form provenance of the run (training config, stage, ...).
  nlohmann::json meta = nlohmann::json::object();
};

inline std::string checkpoint_to_string(const Checkpoint& c) {
  nlohmann::ordered_json j;
  j["format"] = "calibre-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = c.params.config.to_json();
  j["vocab"] = c.vocab.to_json();
  j["types"] = c.types;
  j["meta"] = c.meta;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  c.params.visit([&](const std::string& name, const Mat& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(r, k));
    }
    tensors[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  });
  j["tensors"] = std::move(tensors);
  return j.dump() + "\n";
}

inline Checkpoint checkpoint_from_string(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.value("format", "") != "calibre-checkpoint") throw FormatError("checkpoint: wrong format tag");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw FormatError("checkpoint: unsupported version " + j.at("version").dump());
    }
    Checkpoint c;
    const ModelConfig cfg = ModelConfig::from_json(j.at("config"));
    c.params = ModelParams::init(cfg);
    c.vocab = Vocab::from_json(j.at("vocab"));
    c.types = j.at("types").get<TypeList>();
    c.meta = j.value("meta", nlohmann::json::object());
    if (c.vocab.size() != cfg.vocab_size) throw FormatError("checkpoint: vocab size mismatch");
    const auto& tensors = j.at("tensors");
    c.params.visit([&](const std::string& name, Mat& m) {
      const auto& t = tensors.at(name);
      if (t.at("rows").get<Eigen::Index>() != m.rows() || t.at("cols").get<Eigen::Index>() != m.cols()) {
        throw FormatError("checkpoint: tensor '" + name + "' has the wrong shape");
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != m.size()) {
        throw FormatError("checkpoint: tensor '" + name + "' has the wrong size");
      }
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) m(r, k) = data[i++];
      }
    });
    if (!c.params.all_finite()) throw FormatError("checkpoint: non-finite tensor values");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  write_file(path, checkpoint_to_string(c));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_string(read_file(path));
}

}  // namespace calibre
