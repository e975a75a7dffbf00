// src/metrics.cpp
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

#include "seqkd/metrics.hpp"

#include <algorithm>

#include "seqkd/errors.hpp"

namespace seqkd {
namespace {

template <typename Tok>
EditBreakdown EditDistanceImpl(const std::vector<Tok> &ref,
                               const std::vector<Tok> &hyp) {
  const size_t m = ref.size(), n = hyp.size();
  std::vector<int64_t> d((m + 1) * (n + 1));
  auto at = [&](size_t i, size_t j) -> int64_t & { return d[i * (n + 1) + j]; };
  for (size_t i = 0; i <= m; ++i) at(i, 0) = static_cast<int64_t>(i);
  for (size_t j = 0; j <= n; ++j) at(0, j) = static_cast<int64_t>(j);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      int64_t sub = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int64_t del = at(i - 1, j) + 1;
      int64_t ins = at(i, j - 1) + 1;
      at(i, j) = std::min({sub, del, ins});
    }
  }
  EditBreakdown b;
  b.referenceLength = static_cast<int64_t>(m);
  size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] &&
        at(i - 1, j - 1) == at(i, j)) {
      --i, --j;
    } else if (i > 0 && j > 0 && at(i - 1, j - 1) + 1 == at(i, j)) {
      ++b.substitutions;
      --i, --j;
    } else if (i > 0 && at(i - 1, j) + 1 == at(i, j)) {
      ++b.deletions;
      --i;
    } else {
      ++b.insertions;
      --j;
    }
  }
  return b;
}

}  // namespace

EditBreakdown EditDistance(const std::vector<std::string> &ref,
                           const std::vector<std::string> &hyp) {
  return EditDistanceImpl(ref, hyp);
}

EditBreakdown EditDistance(const std::vector<char32_t> &ref,
                           const std::vector<char32_t> &hyp) {
  return EditDistanceImpl(ref, hyp);
}

std::vector<int64_t> PrefixDistances(const std::vector<std::string> &ref,
                                     const std::vector<std::string> &hyp) {
  const size_t m = ref.size(), n = hyp.size();
  std::vector<int64_t> prev(n + 1), cur(n + 1);
  std::vector<int64_t> out(m + 1);
  for (size_t j = 0; j <= n; ++j) prev[j] = static_cast<int64_t>(j);
  out[0] = prev[n];
  for (size_t i = 1; i <= m; ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= n; ++j) {
      int64_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    out[i] = cur[n];
    std::swap(prev, cur);
  }
  return out;
}

double ErrorRate(const EditBreakdown &b) {
  if (b.referenceLength == 0) {
    if (b.Total() == 0) return 0.0;
    Fail(ErrorCode::kEmptyReference,
         "error rate undefined for empty reference with non-empty hypothesis");
  }
  return 100.0 * static_cast<double>(b.Total()) /
         static_cast<double>(b.referenceLength);
}

double Wer(const std::string &ref, const std::string &hyp, NormMode mode) {
  return ErrorRate(EditDistance(Tokenize(Normalize(ref, mode)),
                                Tokenize(Normalize(hyp, mode))));
}

double Cer(const std::string &ref, const std::string &hyp, NormMode mode) {
  return ErrorRate(EditDistance(Codepoints(Normalize(ref, mode)),
                                Codepoints(Normalize(hyp, mode))));
}

ScorePair Score(const std::string &ref, const std::string &hyp, NormMode mode) {
  return {Wer(ref, hyp, mode), Cer(ref, hyp, mode)};
}

ScorePair CorpusScore::Pair(const std::string &dataset) const {
  auto it = perDataset.find(dataset);
  Require(it != perDataset.end(), ErrorCode::kInvalidArgument,
          "no such dataset '" + dataset + "'");
  return {ErrorRate(it->second.words), ErrorRate(it->second.chars)};
}

ScorePair CorpusScore::Overall() const {
  EditBreakdown words, chars;
  for (const auto &[name, ds] : perDataset) {
    words += ds.words;
    chars += ds.chars;
  }
  return {ErrorRate(words), ErrorRate(chars)};
}

CorpusScore ScoreCorpus(const std::vector<UtterancePair> &pairs,
                        NormMode mode) {
  CorpusScore out;
  for (const UtterancePair &p : pairs) {
    std::string ref = Normalize(p.reference, mode);
    std::string hyp = Normalize(p.hypothesis, mode);
    DatasetBreakdown &ds = out.perDataset[p.dataset];
    if (ref.empty() && !hyp.empty()) {
      ++ds.excluded;
      out.excludedIds.push_back(p.id);
      continue;
    }
    ds.words += EditDistance(Tokenize(ref), Tokenize(hyp));
    ds.chars += EditDistance(Codepoints(ref), Codepoints(hyp));
    ++ds.utterances;
  }
  return out;
}

AggregateReport Aggregate(const std::vector<AggregateEntry> &entries) {
  Require(!entries.empty(), ErrorCode::kEmptyInput,
          "nothing to aggregate");
  AggregateReport rep;
  std::map<std::string, std::pair<ScorePair, int64_t>> groups;
  for (const AggregateEntry &e : entries) {
    Require(!rep.perDataset.count(e.dataset), ErrorCode::kDuplicateId,
            "dataset '" + e.dataset + "' listed twice");
    rep.perDataset[e.dataset] = e.scores;
    auto &[sum, count] = groups[e.group];
    sum.wer += e.scores.wer;
    sum.cer += e.scores.cer;
    ++count;
  }
  double ow = 0.0, oc = 0.0;
  for (auto &[group, acc] : groups) {
    ScorePair avg{acc.first.wer / acc.second, acc.first.cer / acc.second};
    rep.groupAverage[group] = avg;
    ow += avg.wer;
    oc += avg.cer;
  }
  rep.overallAverage = {ow / static_cast<double>(groups.size()),
                        oc / static_cast<double>(groups.size())};
  return rep;
}

}  // namespace seqkd
