// tests/test_textnorm.cpp
//
// Copyright 2026  The seqkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/rng.hpp"
#include "seqkd/textnorm.hpp"
#include "seqkd/utf8.hpp"

using namespace seqkd;

namespace {

std::string Golden() {
  return std::string(SEQKD_TEST_DATA_DIR) + "/textnorm_golden.jsonl";
}

// Random strings mixing Arabic letters, diacritics, Latin, digits,
// punctuation and whitespace, used by the fuzz properties.
std::string RandomText(Rng *rng) {
  static const std::vector<char32_t> pool = [] {
    std::vector<char32_t> p;
    for (char32_t c = 0x0621; c <= 0x064A; ++c) p.push_back(c);   // letters
    for (char32_t c = 0x064B; c <= 0x065F; ++c) p.push_back(c);   // diacritics
    p.push_back(0x0670);
    for (char32_t c = 0x0660; c <= 0x0669; ++c) p.push_back(c);
    for (char32_t c = 0x06F0; c <= 0x06F9; ++c) p.push_back(c);
    for (char32_t c = 'a'; c <= 'z'; ++c) p.push_back(c);
    for (char32_t c = 'A'; c <= 'F'; ++c) p.push_back(c);
    for (char32_t c = '0'; c <= '9'; ++c) p.push_back(c);
    for (char32_t c : {U'!', U'?', U'.', U',', U':', U';', U'-', U'_', U'(',
                       U')', U'[', U']', U'"', U'\'', U'$', U'%', U'&', U'*',
                       U'+', U'=', U'/', U'\\', U'#', U'@', U'<', U'>'})
      p.push_back(c);
    for (char32_t c : {U'،', U'؛', U'؟', U'«', U'»',
                       U'–', U'…', U'€', U'×', U'÷'})
      p.push_back(c);
    p.push_back(0x0640);
    for (char32_t c : {U' ', U' ', U' ', U'\t', U'\n', U' ', U'　',
                       U' '})
      p.push_back(c);
    for (char32_t c : {U'آ', U'أ', U'إ', U'ٱ'})
      p.push_back(c);
    for (char32_t c : {U'é', U'ü', U'Ａ', U'ﬁ'})
      p.push_back(c);
    p.push_back(0x1F44B);  // emoji, category So
    return p;
  }();
  size_t len = rng->Below(60);
  std::string s;
  for (size_t i = 0; i < len; ++i)
    Utf8Append(&s, pool[rng->Below(pool.size())]);
  return s;
}

// Diacritic removal followed by whitespace re-collapse; the reference
// definition used by the mode-ordering property.
std::string StripDiacritics(const std::string &text) {
  std::vector<char32_t> kept;
  for (char32_t cp : Utf8Decode(text))
    if (!IsDiacritic(cp)) kept.push_back(cp);
  return Normalize(Utf8Encode(kept), NormMode::kOrthographic);
}

}  // namespace

TEST_CASE("textnorm golden fixture is matched byte for byte") {
  std::ifstream in(Golden());
  REQUIRE(in.good());
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line);
    std::string input = rec["input"];
    CHECK(Normalize(input, NormMode::kOrthographic) ==
          rec["orthographic"].get<std::string>());
    CHECK(Normalize(input, NormMode::kNormalized) ==
          rec["normalized"].get<std::string>());
    CHECK(Normalize(input, NormMode::kNormalizedNoDiacritics) ==
          rec["normalized_nd"].get<std::string>());
    ++cases;
  }
  CHECK(cases >= 50);
}

TEST_CASE("normalization is idempotent on random input") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    std::string s = RandomText(&rng);
    for (NormMode m : AllNormModes()) {
      std::string once = Normalize(s, m);
      CHECK(Normalize(once, m) == once);
    }
  }
}

TEST_CASE("no-diacritics mode equals diacritic stripping after normalization") {
  Rng rng(77);
  for (int i = 0; i < 2000; ++i) {
    std::string s = RandomText(&rng);
    CHECK(Normalize(s, NormMode::kNormalizedNoDiacritics) ==
          StripDiacritics(Normalize(s, NormMode::kNormalized)));
  }
}

TEST_CASE("normalized output never contains removed-set codepoints") {
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    std::string s = RandomText(&rng);
    for (char32_t cp : Utf8Decode(Normalize(s, NormMode::kNormalized))) {
      CHECK(!IsAlefVariant(cp));
      CHECK(!IsTransliteratedDigit(cp));
      CHECK(!IsLatinLetter(cp));
      CHECK(!IsSpecialChar(cp));
      if (IsWhitespaceChar(cp)) CHECK(cp == U' ');
    }
    for (char32_t cp :
         Utf8Decode(Normalize(s, NormMode::kNormalizedNoDiacritics)))
      CHECK(!IsDiacritic(cp));
  }
}

TEST_CASE("whitespace collapses to single spaces and trims in every mode") {
  for (NormMode m : AllNormModes()) {
    std::string out = Normalize(" \t a \n\n b  c ", m);
    CHECK(Normalize("\t\n  ", m) == "");
    CHECK(out.find("  ") == std::string::npos);
    CHECK(!out.starts_with(" "));
    CHECK(!out.ends_with(" "));
  }
  CHECK(Normalize("س  ل", NormMode::kOrthographic) ==
        "س ل");
}

TEST_CASE("rule sets are pairwise disjoint over all of Unicode") {
  for (char32_t cp = 0; cp < 0x110000; ++cp) {
    int hits = IsDiacritic(cp) + IsAlefVariant(cp) +
               IsTransliteratedDigit(cp) + IsLatinLetter(cp) +
               IsSpecialChar(cp) + IsWhitespaceChar(cp);
    if (hits > 1) {
      CAPTURE(static_cast<uint32_t>(cp));
      REQUIRE(hits <= 1);
    }
  }
}

TEST_CASE("rule dump covers the membership functions") {
  std::ostringstream os;
  DumpRules(os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "rule\tfirst\tlast\taction\treplacement");
  std::map<std::string, std::vector<std::pair<char32_t, char32_t>>> rules;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string rule, first, last, action, repl;
    REQUIRE(std::getline(ls, rule, '\t'));
    REQUIRE(std::getline(ls, first, '\t'));
    REQUIRE(std::getline(ls, last, '\t'));
    REQUIRE(std::getline(ls, action, '\t'));
    REQUIRE(std::getline(ls, repl, '\t'));
    rules[rule].push_back({static_cast<char32_t>(std::stoul(first, nullptr, 16)),
                           static_cast<char32_t>(std::stoul(last, nullptr, 16))});
  }
  auto covers = [&](const std::string &rule, char32_t cp) {
    for (auto [lo, hi] : rules[rule])
      if (cp >= lo && cp <= hi) return true;
    return false;
  };
  for (char32_t cp = 0; cp < 0x110000; ++cp) {
    if (IsDiacritic(cp)) CHECK(covers("diacritic", cp));
    if (IsAlefVariant(cp)) CHECK(covers("alef_variant", cp));
    if (IsTransliteratedDigit(cp)) CHECK(covers("digit", cp));
    if (IsLatinLetter(cp)) CHECK(covers("latin", cp));
    if (IsSpecialChar(cp)) CHECK(covers("special", cp));
    if (IsWhitespaceChar(cp)) CHECK(covers("whitespace", cp));
  }
  // And the other direction: no dumped range strays outside its rule set.
  for (auto &[rule, ranges] : rules) {
    for (auto [lo, hi] : ranges) {
      for (char32_t cp = lo; cp <= hi; ++cp) {
        bool member = (rule == "diacritic" && IsDiacritic(cp)) ||
                      (rule == "alef_variant" && IsAlefVariant(cp)) ||
                      (rule == "digit" && IsTransliteratedDigit(cp)) ||
                      (rule == "latin" && IsLatinLetter(cp)) ||
                      (rule == "special" && IsSpecialChar(cp)) ||
                      (rule == "whitespace" && IsWhitespaceChar(cp));
        if (!member) {
          CAPTURE(rule);
          CAPTURE(static_cast<uint32_t>(cp));
          REQUIRE(member);
        }
      }
    }
  }
}

TEST_CASE("mode names round-trip and junk is rejected") {
  for (NormMode m : AllNormModes()) CHECK(ParseNormMode(NormModeName(m)) == m);
  CHECK_THROWS_AS(ParseNormMode("nfc"), Error);
}

TEST_CASE("tokenize splits on any whitespace") {
  auto t = Tokenize("سلام \t  يا");
  REQUIRE(t.size() == 2);
  CHECK(t[0] == "سلام");
  CHECK(Tokenize("").empty());
  CHECK(Tokenize("   ").empty());
}
