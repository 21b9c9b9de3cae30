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

#include <chrono>
#include <regex>
#include <string>
#include <vector>

#include "calibre/io.hpp"
#include "calibre/rng.hpp"
#include "calibre/textcore/bio.hpp"
#include "calibre/textcore/conll.hpp"
#include "calibre/textcore/mrc_json.hpp"
#include "calibre/textcore/pbr_jsonl.hpp"
#include "calibre/textcore/tokenize.hpp"
#include "gtest/gtest.h"

namespace calibre {
namespace {

const std::string kDataDir = CALIBRE_TEST_DATA_DIR;

// Reference splitter: one regex alternation, independent of the scanner.
std::vector<std::pair<std::string, CharRange>> regex_split(const std::string& text) {
  static const std::regex re(
      R"(\[PAD\]|\[CLS\]|\[SEP\]|\[MASK\]|\[UNK\]|[!-/:-@\[-`{-~]|[^ \t\n\r\f\v!-/:-@\[-`{-~]+)");
  std::vector<std::pair<std::string, CharRange>> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator();
       ++it) {
    const auto b = static_cast<std::size_t>(it->position());
    out.push_back({it->str(), {b, b + static_cast<std::size_t>(it->length())}});
  }
  return out;
}

std::vector<std::string> TokenizerFixture() {
  std::vector<std::string> fixed = {
      "",
      "Bonn, Germany",
      "a b",
      "  leading and trailing  ",
      "tabs\tand\nnewlines\r\nmixed",
      "don't stop-believing!",
      "U.S.A. (1990) [PAD] [MASK]x",
      "Café Müller, Zürich",
      "日本語のテキスト。 東京",
      "[PA D] [pad] [SEP][CLS]",
  };
  const std::vector<std::string> pieces = {
      "word", "Bonn", "é", "日本", "42", ",", ".", "?", "!", "'", "\"", "(", ")", "-",
      "[", "]", "[PAD]", "[MASK]", "_", "~", "/", " ", " ", "  ", "\t", "\n", "ß", "x1"};
  Rng rng(7);
  while (fixed.size() < 50) {
    std::string s;
    const auto n = rng.between(1, 12);
    for (long long i = 0; i < n; ++i) s += pieces[rng.below(pieces.size())];
    fixed.push_back(s);
  }
  return fixed;
}

TEST(Tokenize, MatchesRegexOracleOnFixture) {
  const auto fixture = TokenizerFixture();
  ASSERT_EQ(fixture.size(), 50u);
  for (const auto& text : fixture) {
    const TokenSeq seq = tokenize(text);
    const auto ref = regex_split(text);
    ASSERT_EQ(seq.size(), ref.size()) << "text: '" << text << "'";
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(seq.tokens[i], ref[i].first) << "text: '" << text << "'";
      EXPECT_EQ(seq.offsets[i], ref[i].second) << "text: '" << text << "'";
    }
  }
}

TEST(Tokenize, Examples) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("Bonn, Germany").tokens, (std::vector<std::string>{"Bonn", ",", "Germany"}));
  const auto ab = tokenize("a b");
  EXPECT_EQ(ab.tokens, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ab.offsets, (std::vector<CharRange>{{0, 1}, {2, 3}}));
}

TEST(Tokenize, OffsetsReproduceNonWhitespaceContent) {
  for (const auto& text : TokenizerFixture()) {
    const TokenSeq seq = tokenize(text);
    std::string joined;
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      ASSERT_FALSE(seq.tokens[i].empty());
      ASSERT_LT(seq.offsets[i].begin, seq.offsets[i].end);
      ASSERT_GE(seq.offsets[i].begin, prev_end);
      prev_end = seq.offsets[i].end;
      EXPECT_EQ(text.substr(seq.offsets[i].begin, seq.offsets[i].end - seq.offsets[i].begin),
                seq.tokens[i]);
      joined += seq.tokens[i];
    }
    std::string stripped;
    for (char c : text) {
      if (!detail::is_space_byte(static_cast<unsigned char>(c))) stripped.push_back(c);
    }
    EXPECT_EQ(joined, stripped);
  }
}

TEST(Tokenize, Deterministic) {
  for (const auto& text : TokenizerFixture()) {
    EXPECT_EQ(tokenize(text).tokens, tokenize(text).tokens);
  }
}

TEST(Bio, EmitExamples) {
  EXPECT_EQ(emit_bio({}, 3), (std::vector<std::string>{"O", "O", "O"}));
  EXPECT_EQ(emit_bio({Span(0, 2, "PER")}, 3),
            (std::vector<std::string>{"B-PER", "I-PER", "O"}));
  EXPECT_EQ(emit_bio({Span(0, 1, "LOC"), Span(1, 2, "LOC")}, 2),
            (std::vector<std::string>{"B-LOC", "B-LOC"}));
}

TEST(Bio, EmitRejectsOverlapNamingBothSpans) {
  try {
    emit_bio({Span(0, 3, "PER"), Span(2, 4, "LOC")}, 5);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[0,3)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2,4)"), std::string::npos) << msg;
  }
  EXPECT_THROW(emit_bio({Span(2, 4, "PER")}, 3), InvalidArgument);
}

TEST(Bio, DecodeExamples) {
  EXPECT_EQ(spans_from_bio({"B-PER", "I-PER", "O"}), (std::vector<Span>{Span(0, 2, "PER")}));
  EXPECT_EQ(spans_from_bio({"I-ORG"}), (std::vector<Span>{Span(0, 1, "ORG")}));
  EXPECT_TRUE(spans_from_bio({"O", "O"}).empty());
}

TEST(Bio, DecodeRepairsDanglingInside) {
  EXPECT_EQ(spans_from_bio({"O", "I-PER", "I-PER", "I-LOC", "B-LOC", "junk", "I-LOC"}),
            (std::vector<Span>{Span(1, 3, "PER"), Span(3, 4, "LOC"), Span(4, 5, "LOC"),
                               Span(6, 7, "LOC")}));
}

TEST(Bio, RoundTripProperty) {
  const std::vector<std::string> types = {"PER", "LOC", "ORG", "MISC"};
  Rng rng(20260101);
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(rng.between(0, 40));
    std::vector<Span> spans;
    int pos = 0;
    while (pos < n) {
      pos += static_cast<int>(rng.between(0, 3));
      if (pos >= n) break;
      const int len = static_cast<int>(rng.between(1, std::min(5, n - pos)));
      spans.emplace_back(pos, pos + len, types[rng.below(types.size())]);
      pos += len;
    }
    const auto labels = emit_bio(spans, n);
    ASSERT_EQ(static_cast<int>(labels.size()), n);
    ASSERT_EQ(spans_from_bio(labels), spans) << "trial " << trial;
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(Conll, SingleToken) {
  const auto s = parse_conll("John B-PER\n\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].tokens.tokens, (std::vector<std::string>{"John"}));
  EXPECT_EQ(s[0].labels, (std::vector<std::string>{"B-PER"}));
}

TEST(Conll, TwoSentenceFixture) {
  const std::string bytes = read_file(kDataDir + "/conll/two_sentences.conll");
  const auto s = parse_conll(bytes);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].tokens.size(), 9u);
  EXPECT_EQ(s[0].spans(), (std::vector<Span>{Span(0, 1, "ORG"), Span(2, 3, "MISC"),
                                             Span(6, 7, "MISC")}));
  EXPECT_EQ(s[1].spans(), (std::vector<Span>{Span(0, 2, "PER")}));
  EXPECT_EQ(emit_conll(s), bytes);
}

TEST(Conll, TabSeparatedParsesToCanonicalSpaces) {
  const auto s = parse_conll(read_file(kDataDir + "/conll/tab_separated.conll"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].spans(), (std::vector<Span>{Span(0, 1, "PER"), Span(2, 4, "LOC"),
                                             Span(5, 7, "LOC")}));
  EXPECT_EQ(parse_conll(emit_conll(s))[0].labels, s[0].labels);
}

TEST(Conll, Iob1IsNormalized) {
  const auto s = parse_conll("Peter I-PER\nBlackburn I-PER\n\n");
  EXPECT_EQ(s[0].labels, (std::vector<std::string>{"B-PER", "I-PER"}));
}

TEST(Conll, MalformedLineReportsLineNumber) {
  try {
    parse_conll("John B-PER\nbroken\n\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  try {
    parse_conll("John B-PER\n\nMary X-PER\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("unknown tag"), std::string::npos) << e.what();
  }
}

TEST(MrcJson, AlignsAnswersIncludingMultibyteContext) {
  const auto recs = parse_mrc_json(read_file(kDataDir + "/mrc/sample.json"));
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].answers[0].span, Span(4, 5));
  EXPECT_EQ(recs[1].answers[0].span, Span(10, 12));
  EXPECT_EQ(recs[2].answers[0].span, Span(6, 8));
  for (const auto& r : recs) {
    for (const auto& a : r.answers) {
      EXPECT_EQ(r.passage.slice_text(a.span.start, a.span.end), a.text);
    }
  }
}

TEST(MrcJson, PadQuestionIsSingleToken) {
  const auto recs = parse_mrc_json(read_file(kDataDir + "/mrc/sample.json"));
  EXPECT_EQ(recs[1].question.tokens, (std::vector<std::string>{"[PAD]"}));
}

TEST(MrcJson, MisalignedAnswerNamesRecord) {
  const std::string doc =
      R"({"data":[{"paragraphs":[{"context":"Berlin is big","qas":[{"id":"bad-7","question":"q",)"
      R"("answers":[{"text":"erlin","answer_start":1}]}]}]}]})";
  try {
    parse_mrc_json(doc);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad-7"), std::string::npos) << e.what();
  }
}

TEST(MrcJson, RoundTripPreservesContent) {
  const auto recs = parse_mrc_json(read_file(kDataDir + "/mrc/sample.json"));
  const auto again = parse_mrc_json(emit_mrc_json(recs));
  ASSERT_EQ(again.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(again[i].id, recs[i].id);
    EXPECT_EQ(again[i].title, recs[i].title);
    EXPECT_EQ(again[i].question.source, recs[i].question.source);
    EXPECT_EQ(again[i].passage.source, recs[i].passage.source);
    ASSERT_EQ(again[i].answers.size(), recs[i].answers.size());
    EXPECT_EQ(again[i].answers[0].span, recs[i].answers[0].span);
    EXPECT_EQ(again[i].answers[0].text, recs[i].answers[0].text);
  }
  EXPECT_EQ(emit_mrc_json(again), emit_mrc_json(recs));
}

TEST(PbrJsonl, RoundTripIsByteIdentical) {
  CalibrationExample a;
  a.id = "p1:0";
  a.question = TokenSeq::from_tokens({"[PAD]"});
  a.passage = tokenize("born in Bonn , Germany");
  a.noisy = Span(1, 3);
  a.gold = Span(2, 3);
  a.language = "en";
  CalibrationExample b = a;
  b.id = "p1:1";
  b.question.reset();
  b.gold = Span(4, 5, "LOC");
  b.gold_type = "LOC";
  b.noisy = Span(3, 5);
  const std::string bytes = emit_pbr_jsonl({a, b});
  EXPECT_EQ(emit_pbr_jsonl(parse_pbr_jsonl(bytes)), bytes);
  EXPECT_NE(bytes.find(R"("noisy_answer":"in Bonn")"), std::string::npos) << bytes;
}

TEST(PbrJsonl, RejectsOutOfBoundsSpans) {
  const std::string line =
      R"({"id":"x","question":null,"passage":["a","b"],"noisy_span":[0,3],"gold_span":[0,1],)"
      R"("gold_type":null,"language":"en"})";
  EXPECT_THROW(parse_pbr_jsonl(line), FormatError);
}

}  // namespace
}  // namespace calibre
