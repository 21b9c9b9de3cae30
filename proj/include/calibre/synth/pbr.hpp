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

// Phrase boundary recovery records: every anchor of every passage becomes a
// gold answer paired with a garbled copy of itself.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/corpus/passages.hpp"
#include "calibre/error.hpp"
#include "calibre/rng.hpp"
#include "calibre/synth/noise.hpp"
#include "calibre/synth/question.hpp"
#include "calibre/textcore/pbr_jsonl.hpp"
#include "json.hpp"

namespace calibre {

enum class SynthMode { Ner, Mrc };

struct SynthStats {
  long long records = 0;
  std::array<long long, 4> applied{};  // indexed by NoiseKind
  long long flagged = 0;

  nlohmann::ordered_json to_json() const {
    return {{"records", records},
            {"noop", applied[0]},
            {"add", applied[1]},
            {"delete", applied[2]},
            {"shift", applied[3]},
            {"flagged", flagged}};
  }
};

inline TokenSeq pad_question() { return TokenSeq::from_tokens({"[PAD]"}); }

/// Noise for one record, drawn from the stream keyed by (policy.seed, key).
inline NoiseResult garble(const TokenSeq& passage, const Span& gold, const NoisePolicy& policy,
                          std::string_view key) {
  Rng rng(policy.seed, key);
  const NoiseOp op = sample_noise_op(gold.length(), policy, rng);
  return apply_noise(static_cast<int>(passage.size()), gold, op);
}

/// Record ids are "<passage id>:<anchor index>"; records follow passage and
/// anchor order.
inline std::vector<CalibrationExample> build_pbr_records(const std::vector<Passage>& passages,
                                                         const NoisePolicy& policy, SynthMode mode,
                                                         const Typer& typer,
                                                         SynthStats* stats = nullptr) {
  policy.validate();
  std::vector<CalibrationExample> out;
  for (const auto& p : passages) {
    for (std::size_t k = 0; k < p.anchors.size(); ++k) {
      CalibrationExample ex;
      ex.id = p.id + ":" + std::to_string(k);
      ex.passage = p.text;
      ex.gold = Span(p.anchors[k].start, p.anchors[k].end);
      ex.language = p.language;
      const NoiseResult noise = garble(p.text, ex.gold, policy, ex.id);
      ex.noisy = noise.span;
      ex.question = mode == SynthMode::Mrc ? generate_question(p.text, ex.gold, typer)
                                           : pad_question();
      if (stats) {
        ++stats->records;
        ++stats->applied[static_cast<std::size_t>(noise.applied)];
        if (noise.flagged) ++stats->flagged;
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

/// Returns the training set with a garbled copy ("<id>#sna") placed right
/// after each original the policy chose to garble. Copies share the gold
/// span and type of their original.
inline std::vector<CalibrationExample> self_noise_augment(
    const std::vector<CalibrationExample>& train, const NoisePolicy& policy) {
  policy.validate();
  std::vector<CalibrationExample> out;
  out.reserve(train.size() * 2);
  for (const auto& ex : train) {
    out.push_back(ex);
    const std::string id = ex.id + "#sna";
    const NoiseResult noise = garble(ex.passage, ex.gold, policy, id);
    if (noise.applied == NoiseKind::NoOp) continue;
    CalibrationExample copy = ex;
    copy.id = id;
    copy.noisy = noise.span;
    out.push_back(std::move(copy));
  }
  return out;
}

/// Op weights proportional to the adding/missing/common columns of an error
/// report (a single report object or an array of them, summed).
inline std::array<double, 3> empirical_op_weights(const nlohmann::json& report) {
  std::array<double, 3> w{0.0, 0.0, 0.0};
  auto add_row = [&](const nlohmann::json& row) {
    if (!row.is_object()) throw FormatError("empirical report: expected an object per language");
    const char* keys[3] = {"adding", "missing", "common"};
    for (int i = 0; i < 3; ++i) {
      if (!row.contains(keys[i]) || !row[keys[i]].is_number()) {
        throw FormatError(std::string("empirical report: missing numeric field '") + keys[i] + "'");
      }
      w[i] += row[keys[i]].get<double>();
    }
  };
  if (report.is_array()) {
    for (const auto& row : report) add_row(row);
  } else if (report.is_object() && report.contains("reports")) {
    for (const auto& row : report["reports"]) add_row(row);
  } else {
    add_row(report);
  }
  if (!(w[0] + w[1] + w[2] > 0.0)) {
    throw FormatError("empirical report: adding/missing/common counts are all zero");
  }
  return w;
}

}  // namespace calibre
