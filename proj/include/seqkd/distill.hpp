// include/seqkd/distill.hpp
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

#ifndef SEQKD_DISTILL_HPP_
#define SEQKD_DISTILL_HPP_

#include <string>
#include <vector>

#include "seqkd/data.hpp"
#include "seqkd/metrics.hpp"
#include "seqkd/model.hpp"

namespace seqkd {

// One training example.  `targets` is the label token sequence without
// start or end tokens; a non-empty `teacherProbs` ((targets.size() + 1)
// rows) adds a KL term toward those distributions.
struct Example {
  const Eigen::MatrixXf *frames = nullptr;
  std::vector<int> targets;
  Mat teacherProbs;
};

// Per-batch loss means.  `total` is klWeight * kl + plWeight * pl; the
// components are logged so the identity can be checked on every step.
struct LossBreakdown {
  double kl = 0.0;
  double pl = 0.0;
  double total = 0.0;
};

// Mean loss over the batch and, when `grads` is given, the gradient of
// that mean.  Examples are evaluated in windows of 16; each example gets
// its own graph and the window reduces in example order, so the result is
// bitwise identical for any thread count.  NonFiniteLoss if the total
// stops being finite.
LossBreakdown BatchLoss(const Model &model,
                        const std::vector<const Example *> &batch,
                        double klWeight, double plWeight, int threads,
                        GradBuffer *grads);

struct TrainOptions {
  int epochs = 10;
  int batchSize = 16;
  double lr = 3e-3;
  int warmupSteps = 50;
  uint64_t seed = 0;
  double klWeight = 0.8;
  double plWeight = 1.0;
  int threads = 1;
};

struct StepLog {
  int64_t step = 0;
  double lr = 0.0;
  LossBreakdown loss;
};

struct EpochLog {
  int epoch = 0;
  double trainLoss = 0.0;  // mean of the epoch's step totals
  double devWer = 0.0;
  double devCer = 0.0;
};

struct TrainLog {
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
};

// Transcribes every utterance and pools the scores; `mode` applies to both
// sides.  Threads only speed this up, the result does not depend on them.
CorpusScore EvaluateModel(const Model &model, const Corpus &corpus,
                          NormMode mode, int threads = 1);

// Gradient-descent driver shared by supervised training and distillation.
// Every epoch shuffles under its own derived stream, steps through
// mini-batches with Adam under a warmup-then-constant rate, and scores the
// dev set with diacritic-insensitive WER.  When a dev set is given, the
// model finishes at the parameters of its best dev epoch.
class Trainer {
 public:
  Trainer(Model *model, TrainOptions opts);

  // Cross-entropy on the corpus references.
  TrainLog Fit(const Corpus &train, const Corpus &dev);

  // Fit until dev WER reaches `targetWer`, at most `maxEpochs` epochs;
  // BudgetExhausted when the budget runs out first, with the model left at
  // its best dev epoch so the caller can still keep the checkpoint.
  TrainLog FitToWer(const Corpus &train, const Corpus &dev, double targetWer,
                    int maxEpochs);

  // Cross-entropy plus KL toward the teacher's next-token distributions
  // for the same targets.  The teacher must share the student's vocabulary
  // and frame width (IncompatibleConfig otherwise).
  TrainLog Distill(const Model &teacher, const Corpus &train,
                   const Corpus &dev);

 private:
  TrainLog Run(const std::vector<Example> &examples, const Corpus &dev,
               double klW, double plW, double targetWer, int maxEpochs);
  std::vector<Example> Encode(const Corpus &corpus) const;

  Model *model_;
  TrainOptions opts_;
};

// A teacher transcription for one utterance.  Nothing is dropped: an
// utterance whose decode or WER is unavailable keeps its row with the
// reason in `note`.
struct PseudoLabel {
  std::string id;
  std::string text;
  double wer = 0.0;      // diacritic-insensitive, against the reference
  bool decoded = false;  // text is valid
  bool scored = false;   // wer is valid
  std::string note;
};

using PseudoLabels = std::vector<PseudoLabel>;

// Greedy-decodes the corpus in utterance-id order.
PseudoLabels PseudoLabelCorpus(const Model &teacher, const Corpus &corpus,
                               int threads = 1);

void WritePseudoLabels(const std::string &path, const PseudoLabels &labels);
PseudoLabels ReadPseudoLabels(const std::string &path);

// No threshold: every decoded utterance is retained.
inline constexpr double kNoThreshold = -1.0;

struct FilterOutcome {
  Corpus retained;  // references replaced by the pseudo-label text
  int64_t total = 0;
  int64_t retainedCount = 0;
  double RetainedFraction() const {
    return total == 0 ? 0.0
                      : static_cast<double>(retainedCount) /
                            static_cast<double>(total);
  }
};

// Keeps utterances whose label scored at or under `lambda` (kNoThreshold
// keeps all decoded ones) and swaps in the pseudo text as the reference.
FilterOutcome FilterByWer(const Corpus &corpus, const PseudoLabels &labels,
                          double lambda);

struct SweepPoint {
  double lambda = 0.0;  // kNoThreshold for the unfiltered row
  double retainedFraction = 0.0;
  CorpusScore score;  // fresh student, distilled on the filtered corpus
};

// Distills one fresh student per threshold and scores it on `test`.
std::vector<SweepPoint> ThresholdSweep(
    const Model &teacher, const Corpus &train, const PseudoLabels &labels,
    const Corpus &dev, const Corpus &test, const std::vector<double> &lambdas,
    int encoderLayers, int decoderLayers, const TrainOptions &opts);

struct ScalePoint {
  size_t size = 0;
  double hoursProxy = 0.0;
  CorpusScore score;
};

// Distills one fresh student per subset size; subsets are nested, so a
// larger budget strictly extends a smaller one.
std::vector<ScalePoint> DataScaling(const Model &teacher, const Corpus &train,
                                    const std::vector<size_t> &sizes,
                                    uint64_t sampleSeed, const Corpus &dev,
                                    const Corpus &test, int encoderLayers,
                                    int decoderLayers,
                                    const TrainOptions &opts);

}  // namespace seqkd

#endif  // SEQKD_DISTILL_HPP_
