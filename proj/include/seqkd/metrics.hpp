// include/seqkd/metrics.hpp
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

#ifndef SEQKD_METRICS_HPP_
#define SEQKD_METRICS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqkd/textnorm.hpp"

namespace seqkd {

struct EditBreakdown {
  int64_t substitutions = 0;
  int64_t deletions = 0;
  int64_t insertions = 0;
  int64_t referenceLength = 0;

  int64_t Total() const { return substitutions + deletions + insertions; }

  EditBreakdown &operator+=(const EditBreakdown &o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    referenceLength += o.referenceLength;
    return *this;
  }
};

// Levenshtein distance with unit costs.  The backtrace resolves ties in the
// fixed order match > substitution > deletion > insertion, so the breakdown
// is deterministic even when several minimal alignments exist.
EditBreakdown EditDistance(const std::vector<std::string> &ref,
                           const std::vector<std::string> &hyp);
EditBreakdown EditDistance(const std::vector<char32_t> &ref,
                           const std::vector<char32_t> &hyp);

// distance(ref[0..i], hyp) for every prefix length i in [0, ref.size()].
std::vector<int64_t> PrefixDistances(const std::vector<std::string> &ref,
                                     const std::vector<std::string> &hyp);

// 100 * (S + D + I) / N.  N == 0 with a perfect (empty) hypothesis is 0;
// N == 0 with edits raises EmptyReference, the rate is undefined there.
double ErrorRate(const EditBreakdown &b);

struct ScorePair {
  double wer = 0.0;
  double cer = 0.0;
};

// Single-utterance rates.  Both sides are normalized under `mode` first;
// WER counts whitespace tokens, CER counts codepoints including the
// single spaces between words.
double Wer(const std::string &ref, const std::string &hyp, NormMode mode);
double Cer(const std::string &ref, const std::string &hyp, NormMode mode);
ScorePair Score(const std::string &ref, const std::string &hyp, NormMode mode);

struct UtterancePair {
  std::string id;
  std::string dataset;
  std::string reference;
  std::string hypothesis;
};

struct DatasetBreakdown {
  EditBreakdown words;
  EditBreakdown chars;
  int64_t utterances = 0;
  int64_t excluded = 0;
};

// Corpus-level scores: error counts are pooled over utterances per dataset
// before dividing, so long utterances weigh more than short ones.
// Utterances whose reference normalizes to empty while the hypothesis does
// not are excluded and reported, never silently dropped.
struct CorpusScore {
  std::map<std::string, DatasetBreakdown> perDataset;
  std::vector<std::string> excludedIds;

  ScorePair Pair(const std::string &dataset) const;
  // Error counts pooled over every dataset.
  ScorePair Overall() const;
};

CorpusScore ScoreCorpus(const std::vector<UtterancePair> &pairs, NormMode mode);

struct AggregateEntry {
  std::string dataset;
  std::string group;  // e.g. "benchmark" or "in_house"
  ScorePair scores;
};

// Macro averages: each group averages its datasets with equal weight and
// the overall row is the mean of the group averages.
struct AggregateReport {
  std::map<std::string, ScorePair> perDataset;
  std::map<std::string, ScorePair> groupAverage;
  ScorePair overallAverage;
};

AggregateReport Aggregate(const std::vector<AggregateEntry> &entries);

}  // namespace seqkd

#endif  // SEQKD_METRICS_HPP_
