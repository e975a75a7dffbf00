// src/analysis.cpp
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

#include "seqkd/analysis.hpp"

#include <algorithm>
#include <cstdio>

#include "seqkd/errors.hpp"
#include "seqkd/metrics.hpp"
#include "seqkd/rng.hpp"
#include "seqkd/textnorm.hpp"

namespace seqkd {
namespace {

std::string Fmt(const char *pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, value);
  return buf;
}

// First repeated block in scan order: shortest n-gram first, then leftmost.
bool FindRepetition(const std::vector<std::string> &toks, int maxNgram,
                    int minRepeats, std::string *evidence) {
  const int M = static_cast<int>(toks.size());
  for (int n = 1; n <= maxNgram; ++n) {
    if (M < n * minRepeats) break;
    for (int s = 0; s + n * minRepeats <= M; ++s) {
      int repeats = 1;
      while (s + (repeats + 1) * n <= M &&
             std::equal(toks.begin() + s, toks.begin() + s + n,
                        toks.begin() + s + repeats * n))
        ++repeats;
      if (repeats >= minRepeats) {
        std::string block;
        for (int i = 0; i < n; ++i) {
          if (i) block += ' ';
          block += toks[s + i];
        }
        *evidence = "'" + block + "' x " + std::to_string(repeats);
        return true;
      }
    }
  }
  return false;
}

}  // namespace

const char *FlagName(Flag f) {
  switch (f) {
    case Flag::kEmpty:
      return "empty";
    case Flag::kHighCer:
      return "high_cer";
    case Flag::kDeterioration:
      return "deterioration";
    case Flag::kIncomplete:
      return "incomplete";
  }
  return "?";
}

Flag ParseFlag(const std::string &name) {
  for (int i = 0; i < kFlagCount; ++i)
    if (name == FlagName(static_cast<Flag>(i))) return static_cast<Flag>(i);
  Fail(ErrorCode::kInvalidArgument, "unknown flag '" + name + "'");
}

std::set<std::string> CorpusLexicon(const Corpus &corpus) {
  std::set<std::string> lexicon;
  for (const Utterance &u : corpus)
    for (const std::string &tok :
         Tokenize(Normalize(u.reference, NormMode::kNormalizedNoDiacritics)))
      lexicon.insert(tok);
  return lexicon;
}

std::vector<ErrorFlag> FlagErrors(const std::string &reference,
                                  const std::string &hypothesis,
                                  const std::set<std::string> &lexicon,
                                  const FlagConfig &cfg) {
  const NormMode mode = NormMode::kNormalizedNoDiacritics;
  std::string ref = Normalize(reference, mode);
  std::string hyp = Normalize(hypothesis, mode);
  Require(!ref.empty(), ErrorCode::kEmptyReference,
          "cannot triage against an empty reference");

  std::vector<std::string> refToks = Tokenize(ref);
  std::vector<std::string> hypToks = Tokenize(hyp);

  std::vector<ErrorFlag> flags;
  if (hyp.empty()) flags.push_back({Flag::kEmpty, "hypothesis normalizes to empty"});

  double cer = Cer(reference, hypothesis, mode);
  if (cer > cfg.highCerThreshold)
    flags.push_back({Flag::kHighCer, Fmt("cer=%.2f", cer)});

  if (!hypToks.empty()) {
    std::string span;
    if (FindRepetition(hypToks, cfg.maxNgram, cfg.minRepeats, &span)) {
      flags.push_back({Flag::kDeterioration, span});
    } else {
      int64_t known = 0;
      for (const std::string &tok : hypToks) known += lexicon.count(tok);
      double rate = static_cast<double>(known) /
                    static_cast<double>(hypToks.size());
      if (rate < cfg.minLexiconRate)
        flags.push_back({Flag::kDeterioration, Fmt("lexicon rate %.2f", rate)});
    }
  }

  if (!hypToks.empty() &&
      static_cast<double>(hypToks.size()) <
          cfg.lengthRatio * static_cast<double>(refToks.size())) {
    std::vector<int64_t> dist = PrefixDistances(refToks, hypToks);
    double best = 1.0;
    for (size_t i = 1; i < dist.size(); ++i)
      best = std::min(best, static_cast<double>(dist[i]) /
                                static_cast<double>(i));
    if (best < cfg.prefixErrorRate) {
      double ratio = static_cast<double>(hypToks.size()) /
                     static_cast<double>(refToks.size());
      flags.push_back({Flag::kIncomplete, Fmt("length ratio %.2f, ", ratio) +
                                              Fmt("prefix error %.2f", best)});
    }
  }
  return flags;
}

ErrorReport BuildErrorReport(const Corpus &corpus,
                             const std::map<std::string, std::string> &hyps,
                             int sampleSize, uint64_t seed,
                             const FlagConfig &cfg) {
  Require(sampleSize >= 0, ErrorCode::kInvalidArgument,
          "negative review sample size");
  ErrorReport report;
  std::set<std::string> lexicon = CorpusLexicon(corpus);
  std::map<std::string, std::vector<std::string>> byDialect;
  for (const Utterance &u : corpus) {
    auto it = hyps.find(u.id);
    Require(it != hyps.end(), ErrorCode::kInvalidArgument,
            "no hypothesis for '" + u.id + "'");
    FlaggedUtterance fu;
    fu.id = u.id;
    fu.dialect = u.dialect;
    try {
      fu.flags = FlagErrors(u.reference, it->second, lexicon, cfg);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kEmptyReference) throw;
      report.excludedIds.push_back(u.id);
      continue;
    }
    DialectErrorRow &row = report.perDialect[u.dialect];
    row.utterances += 1;
    for (const ErrorFlag &f : fu.flags)
      row.counts[static_cast<int>(f.category)] += 1;
    byDialect[u.dialect].push_back(u.id);
    report.perUtterance.push_back(std::move(fu));
  }
  for (auto &[dialect, ids] : byDialect) {
    std::sort(ids.begin(), ids.end());
    Rng rng = Rng::Stream(seed, "review-" + dialect);
    rng.Shuffle(&ids);
    if (static_cast<int>(ids.size()) > sampleSize) ids.resize(sampleSize);
    std::sort(ids.begin(), ids.end());
    report.reviewSamples[dialect] = ids;
  }
  return report;
}

}  // namespace seqkd
