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

// Training manifests for multilingual pre-training.
//
//   Continual   stage k adds language k in full and keeps a sample of every
//               earlier language
//   Sequential  stage k holds language k only
//   Mixed       one stage with everything
//
// Records are addressed by their index in the per-language corpus.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/rng.hpp"
#include "json.hpp"

namespace calibre {

enum class Plan { Continual, Sequential, Mixed };

inline const char* to_string(Plan p) {
  switch (p) {
    case Plan::Continual: return "continual";
    case Plan::Sequential: return "sequential";
    case Plan::Mixed: return "mixed";
  }
  return "?";
}

inline Plan parse_plan(const std::string& s) {
  if (s == "continual") return Plan::Continual;
  if (s == "sequential") return Plan::Sequential;
  if (s == "mixed") return Plan::Mixed;
  throw InvalidArgument("unknown plan '" + s + "' (expected continual, sequential or mixed)");
}

struct StageOverride {
  int stage = 1;  // 1-based, as printed in manifests
  std::string language;
  long long count = 0;
};

/// Parses "stage:lang:count", e.g. "3:es:18000".
inline StageOverride parse_override(const std::string& s) {
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  if (b == std::string::npos) {
    throw InvalidArgument("override '" + s + "' is not stage:lang:count");
  }
  try {
    std::size_t used = 0;
    StageOverride o;
    o.stage = std::stoi(s.substr(0, a), &used);
    if (used != a) throw std::invalid_argument("stage");
    o.language = s.substr(a + 1, b - a - 1);
    const std::string count = s.substr(b + 1);
    o.count = std::stoll(count, &used);
    if (used != count.size()) throw std::invalid_argument("count");
    return o;
  } catch (const std::logic_error&) {
    throw InvalidArgument("override '" + s + "' is not stage:lang:count");
  }
}

struct ScheduleConfig {
  /// Fraction of an earlier language's corpus kept in later stages.
  double retain = 0.5;
  std::uint64_t seed = 0;
  /// Draw each retained sample from the previous stage's sample of the same
  /// language instead of the full corpus.
  bool nested = true;
  std::vector<StageOverride> overrides;
};

struct LanguageSample {
  std::string language;
  long long count = 0;
  std::vector<long long> record_ids;  // ascending
};

struct StageManifest {
  int stage_index = 1;
  std::vector<LanguageSample> languages;

  long long total() const {
    long long t = 0;
    for (const auto& l : languages) t += l.count;
    return t;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json langs = nlohmann::ordered_json::array();
    for (const auto& l : languages) {
      langs.push_back({{"language", l.language}, {"count", l.count}, {"record_ids", l.record_ids}});
    }
    return {{"stage", stage_index}, {"total", total()}, {"languages", langs}};
  }
};

namespace detail {

inline std::vector<long long> all_ids(long long n) {
  std::vector<long long> ids(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

inline std::vector<long long> sample_ids(const std::vector<long long>& pool, long long count,
                                         std::uint64_t seed, const std::string& key) {
  if (count == static_cast<long long>(pool.size())) return pool;
  Rng rng(seed, key);
  std::vector<long long> out;
  out.reserve(static_cast<std::size_t>(count));
  for (auto i : rng.sample_without_replacement(pool.size(), static_cast<std::size_t>(count))) {
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace detail

/// `corpus_sizes` lists languages in training order.
inline std::vector<StageManifest> build_stages(
    const std::vector<std::pair<std::string, long long>>& corpus_sizes, Plan plan,
    const ScheduleConfig& cfg) {
  if (corpus_sizes.empty()) throw InvalidArgument("build_stages: no languages");
  if (!(cfg.retain > 0.0 && cfg.retain <= 1.0)) {
    throw InvalidArgument("build_stages: retain must be in (0, 1]");
  }
  std::map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < corpus_sizes.size(); ++i) {
    const auto& [lang, n] = corpus_sizes[i];
    if (n <= 0) throw InvalidArgument("build_stages: corpus '" + lang + "' is empty");
    if (!order.emplace(lang, i).second) {
      throw InvalidArgument("build_stages: language '" + lang + "' listed twice");
    }
  }
  const int n_stages = plan == Plan::Mixed ? 1 : static_cast<int>(corpus_sizes.size());
  std::map<std::pair<int, std::string>, long long> override_count;
  for (const auto& o : cfg.overrides) {
    if (!order.count(o.language)) {
      throw InvalidArgument("override names unknown language '" + o.language + "'");
    }
    if (o.stage < 1 || o.stage > n_stages) {
      throw InvalidArgument("override stage " + std::to_string(o.stage) + " out of range");
    }
    if (o.count < 0 || o.count > corpus_sizes[order[o.language]].second) {
      throw InvalidArgument("override count for '" + o.language + "' exceeds its corpus");
    }
    override_count[{o.stage, o.language}] = o.count;
  }

  std::vector<StageManifest> stages;
  std::map<std::string, std::vector<long long>> pool;
  for (int s = 1; s <= n_stages; ++s) {
    StageManifest m;
    m.stage_index = s;
    std::size_t first = 0, last = 0;
    switch (plan) {
      case Plan::Mixed: first = 0; last = corpus_sizes.size() - 1; break;
      case Plan::Sequential: first = last = static_cast<std::size_t>(s - 1); break;
      case Plan::Continual: first = 0; last = static_cast<std::size_t>(s - 1); break;
    }
    for (std::size_t j = first; j <= last; ++j) {
      const auto& [lang, size] = corpus_sizes[j];
      const bool introduced = plan != Plan::Continual || j == last;
      long long count =
          introduced ? size : std::llround(cfg.retain * static_cast<double>(size));
      if (auto it = override_count.find({s, lang}); it != override_count.end()) {
        count = it->second;
      }
      const std::string key = "stage" + std::to_string(s) + ":" + lang;
      std::vector<long long> ids;
      if (cfg.nested && pool.count(lang)) {
        const auto& prev = pool[lang];
        if (count > static_cast<long long>(prev.size())) {
          throw InvalidArgument("build_stages: nested sampling needs stage " + std::to_string(s) +
                                " count for '" + lang + "' <= previous stage count");
        }
        ids = detail::sample_ids(prev, count, cfg.seed, key);
      } else {
        ids = detail::sample_ids(detail::all_ids(size), count, cfg.seed, key);
      }
      pool[lang] = ids;
      m.languages.push_back({lang, count, std::move(ids)});
    }
    stages.push_back(std::move(m));
  }
  return stages;
}

inline nlohmann::ordered_json to_json(const std::vector<StageManifest>& stages, Plan plan) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : stages) arr.push_back(s.to_json());
  return {{"plan", to_string(plan)}, {"stages", arr}};
}

}  // namespace calibre
