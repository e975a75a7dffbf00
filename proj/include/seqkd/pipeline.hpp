// include/seqkd/pipeline.hpp
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

#ifndef SEQKD_PIPELINE_HPP_
#define SEQKD_PIPELINE_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "seqkd/analysis.hpp"
#include "seqkd/distill.hpp"

namespace seqkd {

inline constexpr const char *kToolVersion = "seqkd 1.0.0";

// Tabular artifacts.  All files are TSV with a header row; rates use four
// decimals and losses six, so identical runs rewrite identical bytes.
void WriteTrainLogs(const std::string &dir, const TrainLog &log);
void WriteScoresTsv(std::ostream &os, const CorpusScore &score);
void WriteScoresTsv(const std::string &path, const CorpusScore &score);
void WriteStatsTsv(std::ostream &os, const CorpusStats &stats);
void WriteStatsTsv(const std::string &path, const CorpusStats &stats);
void WriteSweepTsv(std::ostream &os, const std::vector<SweepPoint> &points);
void WriteSweepTsv(const std::string &path,
                   const std::vector<SweepPoint> &points);
void WriteScaleTsv(std::ostream &os, const std::vector<ScalePoint> &points);
void WriteScaleTsv(const std::string &path,
                   const std::vector<ScalePoint> &points);
void WriteErrorReport(const std::string &dir, const ErrorReport &report);
void WriteRunMeta(const std::string &path, const std::string &command,
                  const std::string &resolvedConfig);

// End-to-end distillation run: corpus synthesis, teacher training,
// pseudo-labeling, filtering, student init, distillation, evaluation.
struct PipelineConfig {
  std::string outDir;
  uint64_t seed = 0;
  int threads = 1;

  SynthConfig synth;       // training pool; dev is split off the same pool
  int devCount = 500;

  ModelConfig teacher;     // vocabulary is filled from the corpus
  TrainOptions teacherTrain;
  double teacherTargetWer = 10.0;
  int teacherMaxEpochs = 40;

  int studentEncoderLayers = 2;
  int studentDecoderLayers = 2;
  TrainOptions studentTrain;
  double lambda = 80.0;    // kNoThreshold disables filtering

  std::string ToJson() const;  // canonical, drives stage addressing
};

struct StageResult {
  std::string name;
  std::string dir;     // artifact directory under outDir
  bool skipped = false;
};

struct PipelineResult {
  std::vector<StageResult> stages;
  double teacherDevWer = 0.0;
  double retainedFraction = 0.0;
  ScorePair studentDev;  // distilled student on the dev split
};

// Stage artifact directories are named <stage>-<hash> where the hash folds
// in the stage's own settings and its inputs' hashes, so reruns skip
// finished stages and sweeps share the expensive upstream ones.  Any
// failure surfaces as StageFailed naming the stage; partial artifacts are
// left in place.
PipelineResult RunPipeline(const PipelineConfig &cfg);

}  // namespace seqkd

#endif  // SEQKD_PIPELINE_HPP_
