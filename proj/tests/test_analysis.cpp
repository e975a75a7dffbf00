// tests/test_analysis.cpp
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

#include <algorithm>

#include "doctest.h"
#include "seqkd/analysis.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/metrics.hpp"
#include "seqkd/rng.hpp"
#include "seqkd/utf8.hpp"

using namespace seqkd;

namespace {

bool Has(const std::vector<ErrorFlag> &flags, Flag f) {
  return std::any_of(flags.begin(), flags.end(),
                     [&](const ErrorFlag &e) { return e.category == f; });
}

std::vector<Flag> Categories(const std::vector<ErrorFlag> &flags) {
  std::vector<Flag> out;
  for (const ErrorFlag &e : flags) out.push_back(e.category);
  return out;
}

const std::set<std::string> kNoLexicon;

}  // namespace

TEST_CASE("empty hypotheses are flagged and imply the CER flag") {
  auto flags = FlagErrors("سلم", "", kNoLexicon);
  CHECK(Categories(flags) == std::vector<Flag>{Flag::kEmpty, Flag::kHighCer});

  // Whitespace and bare diacritics also normalize to empty.
  CHECK(Has(FlagErrors("سلم", "   ", kNoLexicon), Flag::kEmpty));
  CHECK(Has(FlagErrors("سلم", "ًٌ", kNoLexicon),
            Flag::kEmpty));

  CHECK_THROWS_AS(FlagErrors("", "س", kNoLexicon), Error);
  CHECK_THROWS_AS(FlagErrors("ً", "س", kNoLexicon), Error);
}

TEST_CASE("the CER triage boundary is strict at 75") {
  // One kept character and three substitutions: exactly 75.0.
  std::string ref = "ابجد";
  CHECK(Cer(ref, "اووو",
            NormMode::kNormalizedNoDiacritics) == doctest::Approx(75.0));
  CHECK(!Has(FlagErrors(ref, "اووو", kNoLexicon),
             Flag::kHighCer));

  // Four substitutions out of four: 100.
  auto flags = FlagErrors(ref, "وزطق", kNoLexicon);
  CHECK(Has(flags, Flag::kHighCer));
  CHECK(!Has(flags, Flag::kEmpty));
  for (const ErrorFlag &f : flags)
    if (f.category == Flag::kHighCer) CHECK(f.evidence == "cer=100.00");

  // Raising the threshold only ever removes the flag.
  Rng rng(40);
  for (int i = 0; i < 200; ++i) {
    std::vector<char32_t> cps;
    for (int k = 0; k < 6; ++k)
      cps.push_back(static_cast<char32_t>(0x627 + rng.Below(20)));
    std::string hyp;
    for (char32_t cp : cps) Utf8Append(&hyp, cp);
    FlagConfig low, high;
    low.highCerThreshold = 30.0;
    high.highCerThreshold = 60.0;
    bool flaggedHigh = Has(FlagErrors(ref, hyp, kNoLexicon, high), Flag::kHighCer);
    bool flaggedLow = Has(FlagErrors(ref, hyp, kNoLexicon, low), Flag::kHighCer);
    if (flaggedHigh) CHECK(flaggedLow);
  }
}

TEST_CASE("consecutive repetition marks deterioration") {
  std::string ref = "سلم على";
  std::set<std::string> lexicon = {"لا", "اب",
                                   "جد"};
  auto word = [](int n, const std::string &w) {
    std::string out;
    for (int i = 0; i < n; ++i) {
      if (i) out += ' ';
      out += w;
    }
    return out;
  };

  auto ten = FlagErrors(ref, word(10, "لا"), lexicon);
  CHECK(Has(ten, Flag::kDeterioration));
  for (const ErrorFlag &f : ten)
    if (f.category == Flag::kDeterioration)
      CHECK(f.evidence == "'لا' x 10");

  CHECK(Has(FlagErrors(ref, word(4, "لا"), lexicon),
            Flag::kDeterioration));
  CHECK(!Has(FlagErrors(ref, word(3, "لا"), lexicon),
             Flag::kDeterioration));

  // A repeated two-word block whose single words never repeat in a row.
  std::string pair = "اب جد";
  std::string looped = pair + " " + pair + " " + pair + " " + pair;
  auto flags = FlagErrors(ref, looped, lexicon);
  CHECK(Has(flags, Flag::kDeterioration));
  for (const ErrorFlag &f : flags)
    if (f.category == Flag::kDeterioration)
      CHECK(f.evidence == "'اب جد' x 4");
}

TEST_CASE("low in-lexicon rates mark deterioration as gibberish") {
  std::string ref = "سلم على";
  std::set<std::string> lexicon = {"سلم", "على"};

  // One known word among six distinct ones: rate 1/6 < 0.2.
  std::string hyp =
      "سلم بت جح خد "
      "ذر زط";
  auto flags = FlagErrors(ref, hyp, lexicon);
  CHECK(Has(flags, Flag::kDeterioration));
  for (const ErrorFlag &f : flags)
    if (f.category == Flag::kDeterioration)
      CHECK(f.evidence == "lexicon rate 0.17");

  // Exactly 0.2 stays unflagged: one known word of five.
  std::string five =
      "سلم بت جح خد ذر";
  CHECK(!Has(FlagErrors(ref, five, lexicon), Flag::kDeterioration));
}

TEST_CASE("verbatim prefixes of under half the reference are incomplete") {
  std::vector<std::string> words = {
      "سل", "ما", "بت", "جح",
      "خد", "ذر", "زط", "عغ",
      "فق", "كن", "هو", "يء"};
  std::string ref;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) ref += ' ';
    ref += words[i];
  }
  std::set<std::string> lexicon(words.begin(), words.end());

  std::string four = words[0] + " " + words[1] + " " + words[2] + " " + words[3];
  auto flags = FlagErrors(ref, four, lexicon);
  CHECK(Categories(flags) == std::vector<Flag>{Flag::kIncomplete});
  CHECK(flags[0].evidence == "length ratio 0.33, prefix error 0.00");

  // Six of twelve sits on the ratio boundary and is not flagged.
  std::string six = four + " " + words[4] + " " + words[5];
  CHECK(!Has(FlagErrors(ref, six, lexicon), Flag::kIncomplete));

  // Short but unrelated output fails the prefix-alignment test.
  std::string noise = "وو زز طط قق";
  CHECK(!Has(FlagErrors(ref, noise, lexicon), Flag::kIncomplete));

  // A short suffix is not a prefix either.
  std::string tail = words[8] + " " + words[9] + " " + words[10] + " " + words[11];
  CHECK(!Has(FlagErrors(ref, tail, lexicon), Flag::kIncomplete));
}

TEST_CASE("one transcription can carry several flags at once") {
  std::string ref =
      "سلم على بت جح";
  std::string hyp;
  for (int i = 0; i < 10; ++i) {
    if (i) hyp += ' ';
    hyp += "لا";
  }
  auto flags = FlagErrors(ref, hyp, kNoLexicon);
  CHECK(Categories(flags) ==
        std::vector<Flag>{Flag::kHighCer, Flag::kDeterioration});
}

TEST_CASE("flag names round-trip") {
  for (int i = 0; i < kFlagCount; ++i) {
    Flag f = static_cast<Flag>(i);
    CHECK(ParseFlag(FlagName(f)) == f);
  }
  CHECK_THROWS_AS(ParseFlag("bogus"), Error);
}

TEST_CASE("error reports count per dialect and sample for review") {
  Corpus corpus;
  std::map<std::string, std::string> hyps;
  auto add = [&](const std::string &id, const std::string &dialect,
                 const std::string &ref, const std::string &hyp) {
    Utterance u;
    u.id = id;
    u.dialect = dialect;
    u.dataset = "d";
    u.reference = ref;
    u.frames = Eigen::MatrixXf::Zero(1, 1);
    corpus.push_back(u);
    hyps[id] = hyp;
  };

  std::string ref = "سلم على";
  std::string loop;
  for (int i = 0; i < 10; ++i) loop += i ? " لا" : "لا";

  add("a-1", "west", ref, ref);        // clean
  add("a-2", "west", ref, "");         // empty + high_cer
  add("a-3", "west", ref, loop);       // high_cer + deterioration
  add("b-1", "east", ref, ref);        // clean
  add("b-2", "east", "ً", ref);   // reference unusable
  for (int i = 0; i < 6; ++i)
    add("c-" + std::to_string(i), "bulk", ref, ref);

  ErrorReport report = BuildErrorReport(corpus, hyps, 3, 5);
  CHECK(report.perUtterance.size() == corpus.size() - 1);
  CHECK(report.excludedIds == std::vector<std::string>{"b-2"});

  const DialectErrorRow &west = report.perDialect.at("west");
  CHECK(west.utterances == 3);
  CHECK(west.counts[static_cast<int>(Flag::kEmpty)] == 1);
  CHECK(west.counts[static_cast<int>(Flag::kHighCer)] == 2);
  CHECK(west.counts[static_cast<int>(Flag::kDeterioration)] == 1);
  CHECK(west.counts[static_cast<int>(Flag::kIncomplete)] == 0);
  CHECK(west.Percent(Flag::kHighCer) == doctest::Approx(200.0 / 3.0));
  double sum = 0;
  for (int i = 0; i < kFlagCount; ++i) sum += west.Percent(static_cast<Flag>(i));
  CHECK(sum > 100.0);  // multi-label rows may exceed 100

  CHECK(report.perDialect.at("east").utterances == 1);
  CHECK(report.perDialect.at("bulk").utterances == 6);

  CHECK(report.reviewSamples.at("west").size() == 3);
  CHECK(report.reviewSamples.at("east").size() == 1);
  CHECK(report.reviewSamples.at("bulk").size() == 3);
  for (const std::string &id : report.reviewSamples.at("bulk"))
    CHECK(id.rfind("c-", 0) == 0);

  ErrorReport again = BuildErrorReport(corpus, hyps, 3, 5);
  CHECK(again.reviewSamples.at("bulk") == report.reviewSamples.at("bulk"));
  ErrorReport moved = BuildErrorReport(corpus, hyps, 3, 6);
  bool anyDiff = moved.reviewSamples.at("bulk") != report.reviewSamples.at("bulk");
  CHECK(anyDiff);

  hyps.erase("a-1");
  CHECK_THROWS_AS(BuildErrorReport(corpus, hyps, 3, 5), Error);
}
