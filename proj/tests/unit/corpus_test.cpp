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

#include <algorithm>
#include <string>
#include <vector>

#include "calibre/corpus/passages.hpp"
#include "calibre/corpus/wikitext.hpp"
#include "calibre/io.hpp"
#include "calibre/rng.hpp"
#include "gtest/gtest.h"
#include "json.hpp"

namespace calibre {
namespace {

const std::string kDataDir = CALIBRE_TEST_DATA_DIR;
const std::string kFixtureDir = CALIBRE_FIXTURE_DIR;

std::vector<std::string> RangeTexts(const AnchorExtraction& ex) {
  std::vector<std::string> out;
  for (const auto& r : ex.anchors) out.push_back(ex.plain_text.substr(r.begin, r.end - r.begin));
  return out;
}

TEST(ExtractAnchorsTest, PlainLink) {
  const auto ex = extract_anchors("born in [[Bonn]]");
  EXPECT_EQ(ex.plain_text, "born in Bonn");
  ASSERT_EQ(ex.anchors.size(), 1u);
  EXPECT_EQ(ex.anchors[0].begin, 8u);
  EXPECT_EQ(ex.anchors[0].end, 12u);
  EXPECT_EQ(ex.skipped, 0);
}

TEST(ExtractAnchorsTest, PipedLink) {
  const auto ex = extract_anchors("[[Q1234|Berlin]] is big");
  EXPECT_EQ(ex.plain_text, "Berlin is big");
  ASSERT_EQ(ex.anchors.size(), 1u);
  EXPECT_EQ(ex.anchors[0].begin, 0u);
  EXPECT_EQ(ex.anchors[0].end, 6u);
}

TEST(ExtractAnchorsTest, SevenLinksOneMalformed) {
  const std::string page =
      "== Early life ==\n"
      "'''Ludwig''' was born in [[Bonn]] on the [[Rhine|river Rhine]].\n"
      "He moved to [[Vienna]] and met [[Joseph Haydn|Haydn]], then [[broken link\n"
      "\n"
      "=== Works ===\n"
      "He wrote the [[Symphony No. 9 (Beethoven)|Ninth Symphony]] in [[1824]].\n";
  const auto ex = extract_anchors(page);
  EXPECT_EQ(ex.skipped, 1);
  EXPECT_EQ(RangeTexts(ex), (std::vector<std::string>{"Bonn", "river Rhine", "Vienna", "Haydn",
                                                       "Ninth Symphony", "1824"}));
  EXPECT_EQ(ex.plain_text,
            "Ludwig was born in Bonn on the river Rhine.\n"
            "He moved to Vienna and met Haydn, then [[broken link\n"
            "\n"
            "He wrote the Ninth Symphony in 1824.\n");
}

TEST(ExtractAnchorsTest, ReopenedAndEmptyLinksAreSkipped) {
  const auto ex = extract_anchors("a [[b [[c]] d [[x|]] e");
  EXPECT_EQ(ex.plain_text, "a [[b c d [[x|]] e");
  EXPECT_EQ(RangeTexts(ex), std::vector<std::string>{"c"});
  EXPECT_EQ(ex.skipped, 2);
}

// Re-inserting "[[...]]" around every range gives back the wikitext of a
// page that only uses simple links.
TEST(ExtractAnchorsTest, RoundTripOnWellFormedText) {
  Rng rng(11);
  const std::vector<std::string> words = {"alpha", "beta", "Gamma", "delta", ",", "."};
  for (int trial = 0; trial < 200; ++trial) {
    std::string wikitext;
    const int n = static_cast<int>(rng.between(1, 30));
    for (int i = 0; i < n; ++i) {
      if (!wikitext.empty()) wikitext += ' ';
      const std::string w = words[rng.below(words.size())];
      wikitext += rng.bernoulli(0.3) ? "[[" + w + "]]" : w;
    }
    const auto ex = extract_anchors(wikitext);
    std::string rebuilt = ex.plain_text;
    for (auto it = ex.anchors.rbegin(); it != ex.anchors.rend(); ++it) {
      rebuilt.insert(it->end, "]]");
      rebuilt.insert(it->begin, "[[");
    }
    EXPECT_EQ(rebuilt, wikitext);
  }
}

std::string Words(int n, const std::string& word = "word") {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + word;
  return s;
}

TEST(FilterPassagesTest, ShortPassageDropped) {
  const WikiPage page{"a", "en", "[[x]] [[y]] " + Words(38)};
  const auto r = filter_passages({page}, FilterConfig{});
  EXPECT_TRUE(r.passages.empty());
  EXPECT_EQ(r.stats.too_short, 1);
}

TEST(FilterPassagesTest, SingleAnchorDropped) {
  const WikiPage page{"a", "en", "[[x]] " + Words(99)};
  const auto r = filter_passages({page}, FilterConfig{});
  EXPECT_TRUE(r.passages.empty());
  EXPECT_EQ(r.stats.too_few_anchors, 1);
}

TEST(FilterPassagesTest, LongAnchorsDroppedBeforeAnchorCount) {
  const std::string nine = "[[" + Words(9, "x") + "]]";
  const std::string eight = "[[" + Words(8, "y") + "]]";
  const WikiPage bad{"a", "en", "[[x]] " + nine + " " + Words(90)};
  const WikiPage good{"b", "en", "[[x]] " + eight + " " + Words(90)};
  const auto r = filter_passages({bad, good}, FilterConfig{});
  ASSERT_EQ(r.passages.size(), 1u);
  EXPECT_EQ(r.passages[0].id, "b#0");
  EXPECT_EQ(r.passages[0].anchors, (std::vector<Span>{Span(0, 1), Span(1, 9)}));
  EXPECT_EQ(r.stats.long_anchors_dropped, 1);
}

TEST(FilterPassagesTest, InvalidPageRejected) {
  EXPECT_THROW(filter_passages({WikiPage{"a", "eng", "x"}}, FilterConfig{}), FormatError);
  EXPECT_THROW(filter_passages({WikiPage{"a", "en", ""}}, FilterConfig{}), FormatError);
}

nlohmann::json Expected() {
  return nlohmann::json::parse(read_file(kDataDir + "/corpus/minidump_expected.json"));
}

TEST(FilterPassagesTest, MiniDumpMatchesReferenceFilter) {
  const auto pages = parse_wiki_jsonl(read_file(kFixtureDir + "/minidump.jsonl"));
  ASSERT_EQ(pages.size(), 30u);
  const auto r = filter_passages(pages, FilterConfig{});
  const auto expected = Expected()["passages"];
  ASSERT_EQ(r.passages.size(), 11u);
  ASSERT_EQ(r.passages.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& p = r.passages[i];
    EXPECT_EQ(p.id, expected[i]["id"].get<std::string>());
    EXPECT_EQ(p.language, expected[i]["language"].get<std::string>());
    EXPECT_EQ(static_cast<int>(p.text.size()), expected[i]["tokens"].get<int>()) << p.id;
    std::vector<Span> anchors;
    for (const auto& a : expected[i]["anchors"]) anchors.emplace_back(a[0].get<int>(), a[1].get<int>());
    EXPECT_EQ(p.anchors, anchors) << p.id;
  }
}

TEST(FilterPassagesTest, EveryPassageSatisfiesTheRules) {
  const auto pages = parse_wiki_jsonl(read_file(kFixtureDir + "/minidump.jsonl"));
  for (const auto& p : filter_passages(pages, FilterConfig{}).passages) {
    const int n = static_cast<int>(p.text.size());
    EXPECT_GE(n, 50);
    EXPECT_LE(n, 250);
    EXPECT_GE(p.anchors.size(), 2u);
    for (std::size_t k = 0; k < p.anchors.size(); ++k) {
      EXPECT_TRUE(p.anchors[k].valid_in(n));
      EXPECT_LE(p.anchors[k].length(), 8);
      if (k > 0) EXPECT_LE(p.anchors[k - 1].end, p.anchors[k].start);
    }
  }
}

TEST(FilterPassagesTest, OrderIndependent) {
  auto pages = parse_wiki_jsonl(read_file(kFixtureDir + "/minidump.jsonl"));
  const auto base = emit_passages_jsonl(filter_passages(pages, FilterConfig{}).passages);
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    rng.shuffle(pages);
    EXPECT_EQ(emit_passages_jsonl(filter_passages(pages, FilterConfig{}).passages), base);
  }
}

TEST(FilterPassagesTest, PerPageCapIsSeeded) {
  const auto pages = parse_wiki_jsonl(read_file(kFixtureDir + "/minidump.jsonl"));
  FilterConfig cfg;
  cfg.per_page_cap = 1;
  cfg.seed = 5;
  const auto a = filter_passages(pages, cfg);
  const auto b = filter_passages(pages, cfg);
  EXPECT_EQ(a.passages.size(), 10u);  // p21 has two qualifying paragraphs
  EXPECT_EQ(a.stats.capped, 1);
  EXPECT_EQ(emit_passages_jsonl(a.passages), emit_passages_jsonl(b.passages));
}

TEST(CorpusStatsTest, Arithmetic) {
  Passage p;
  p.language = "en";
  p.text = tokenize("a b c");
  p.anchors = {Span(0, 1), Span(2, 3)};
  const auto s = corpus_stats({p}).at("en");
  EXPECT_EQ(s.passage_count, 1);
  EXPECT_EQ(s.answer_count, 2);
  EXPECT_DOUBLE_EQ(s.avg_answer_tokens, 1.0);
  EXPECT_DOUBLE_EQ(s.avg_answers_per_passage, 2.0);
  EXPECT_TRUE(corpus_stats({}).empty());
}

TEST(CorpusStatsTest, MiniDumpMatchesReference) {
  const auto pages = parse_wiki_jsonl(read_file(kFixtureDir + "/minidump.jsonl"));
  const auto stats = corpus_stats(filter_passages(pages, FilterConfig{}).passages);
  const auto expected = Expected()["stats"];
  ASSERT_EQ(stats.size(), expected.size());
  for (const auto& [lang, e] : expected.items()) {
    const auto& s = stats.at(lang);
    EXPECT_EQ(s.passage_count, e["passages"].get<long long>());
    EXPECT_EQ(s.answer_count, e["answers"].get<long long>());
    EXPECT_DOUBLE_EQ(s.avg_answer_tokens, e["avg_answer_tokens"].get<double>());
    EXPECT_DOUBLE_EQ(s.avg_answers_per_passage, e["avg_answers_per_passage"].get<double>());
  }
}

TEST(PassageJsonlTest, RoundTrip) {
  const auto pages = parse_wiki_jsonl(read_file(kFixtureDir + "/minidump.jsonl"));
  const auto bytes = emit_passages_jsonl(filter_passages(pages, FilterConfig{}).passages);
  EXPECT_EQ(emit_passages_jsonl(parse_passages_jsonl(bytes)), bytes);
}

}  // namespace
}  // namespace calibre
