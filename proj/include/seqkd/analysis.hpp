// include/seqkd/analysis.hpp
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

#ifndef SEQKD_ANALYSIS_HPP_
#define SEQKD_ANALYSIS_HPP_

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seqkd/data.hpp"

namespace seqkd {

enum class Flag { kEmpty = 0, kHighCer, kDeterioration, kIncomplete };
inline constexpr int kFlagCount = 4;

const char *FlagName(Flag f);
Flag ParseFlag(const std::string &name);

// One triage verdict with the measurement that triggered it: a repetition
// span, a lexicon or length ratio, or the CER value.
struct ErrorFlag {
  Flag category;
  std::string evidence;
};

struct FlagConfig {
  double highCerThreshold = 75.0;  // flag strictly above
  int maxNgram = 5;
  int minRepeats = 4;              // consecutive occurrences that count
  double minLexiconRate = 0.2;     // flag strictly below
  double lengthRatio = 0.5;        // hyp/ref token ratio strictly below
  double prefixErrorRate = 0.3;    // best prefix per-token error below
};

// Reference-side word inventory under diacritic-insensitive normalization.
std::set<std::string> CorpusLexicon(const Corpus &corpus);

// Deterministic triage of one hypothesis; flags are emitted in enum order
// and a transcription can carry several at once.  The reference must not
// normalize to empty (EmptyReference).
std::vector<ErrorFlag> FlagErrors(const std::string &reference,
                                  const std::string &hypothesis,
                                  const std::set<std::string> &lexicon,
                                  const FlagConfig &cfg = {});

struct FlaggedUtterance {
  std::string id;
  std::string dialect;
  std::vector<ErrorFlag> flags;
};

struct DialectErrorRow {
  int64_t utterances = 0;
  std::array<int64_t, kFlagCount> counts = {0, 0, 0, 0};

  double Percent(Flag f) const {
    return utterances == 0
               ? 0.0
               : 100.0 * static_cast<double>(counts[static_cast<int>(f)]) /
                     static_cast<double>(utterances);
  }
};

// Per-dialect count table plus a seeded per-dialect sample for the review
// passes that cannot be automated.  Utterances whose reference normalizes
// to empty cannot be triaged and are listed, never silently dropped.
struct ErrorReport {
  std::vector<FlaggedUtterance> perUtterance;
  std::map<std::string, DialectErrorRow> perDialect;
  std::map<std::string, std::vector<std::string>> reviewSamples;
  std::vector<std::string> excludedIds;
};

ErrorReport BuildErrorReport(const Corpus &corpus,
                             const std::map<std::string, std::string> &hyps,
                             int sampleSize, uint64_t seed,
                             const FlagConfig &cfg = {});

}  // namespace seqkd

#endif  // SEQKD_ANALYSIS_HPP_
