// include/seqkd/data.hpp
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

#ifndef SEQKD_DATA_HPP_
#define SEQKD_DATA_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace seqkd {

struct Utterance {
  std::string id;
  std::string reference;
  std::string dialect;
  std::string dataset;
  Eigen::MatrixXf frames;  // rows are time steps
};

using Corpus = std::vector<Utterance>;

// Manifest: one JSON object per line with fields id, reference, dialect,
// dataset and either frames_path (sidecar record file, resolved relative
// to the manifest) or inline frames for small fixtures.  Writing uses the
// sidecar unless inlineFrames is set.
void WriteCorpus(const std::string &manifestPath, const Corpus &corpus,
                 bool inlineFrames = false);
Corpus ReadCorpus(const std::string &manifestPath);

// Synthetic speech-like corpus.  Every character of the reference,
// including spaces, contributes framesPerChar frames: a fixed per-character
// embedding (shared across corpora via embedSeed) plus Gaussian noise.
struct SynthConfig {
  int utterances = 1000;
  int minWords = 1, maxWords = 2;
  int minWordLen = 2, maxWordLen = 4;
  int framesPerChar = 2;
  int frameDim = 16;
  double noiseStd = 0.3;
  uint64_t seed = 0;
  uint64_t embedSeed = 7;
  std::string dataset = "synth";
  std::string dialect = "base";
  std::string idPrefix;                        // defaults to dataset
  std::vector<uint32_t> alphabet;              // letters; space is implicit
  std::map<uint32_t, uint32_t> substitution;   // dialect codepoint shifts
};

Corpus SynthesizeCorpus(const SynthConfig &cfg);

// The character inventory a model needs for this corpus: space plus the
// alphabet with any substitutions applied.
std::vector<uint32_t> SynthVocab(const SynthConfig &cfg);

struct DatasetStats {
  int64_t utterances = 0;
  int64_t words = 0;
  int64_t frames = 0;
  double WordsPerUtterance() const {
    return utterances == 0 ? 0.0
                           : static_cast<double>(words) /
                                 static_cast<double>(utterances);
  }
  double HoursProxy() const {
    return static_cast<double>(frames) / (100.0 * 3600.0);
  }
};

struct CorpusStats {
  std::map<std::string, DatasetStats> perDataset;
  DatasetStats total;
};

CorpusStats ComputeStats(const Corpus &corpus);

// Seeded shuffle followed by a prefix: for a fixed seed, smaller samples
// are strict prefixes of larger ones.  SizeExceedsCorpus if asked for more
// than there is.
Corpus SampleNested(const Corpus &corpus, size_t size, uint64_t seed);

// Deterministic split; dev takes the first devCount of the shuffle.
std::pair<Corpus, Corpus> SplitTrainDev(const Corpus &corpus, size_t devCount,
                                        uint64_t seed);

}  // namespace seqkd

#endif  // SEQKD_DATA_HPP_
