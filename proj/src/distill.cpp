// src/distill.cpp
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

#include "seqkd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/rng.hpp"

namespace seqkd {
namespace {

constexpr int kWindow = 16;

// Runs fn(i) for i in [0, n), striped over at most `threads` workers.  The
// work must not depend on ordering; when several indices throw, the lowest
// one wins so the surfaced error does not depend on the thread count.
void ParallelFor(size_t n, int threads,
                 const std::function<void(size_t)> &fn) {
  int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(std::min<size_t>(
                                             n, kWindow))));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  std::vector<size_t> errorIndex(static_cast<size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (size_t i = static_cast<size_t>(t); i < n;
           i += static_cast<size_t>(workers)) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<size_t>(t)] = std::current_exception();
          errorIndex[static_cast<size_t>(t)] = i;
          return;
        }
      }
    });
  }
  for (auto &th : pool) th.join();
  size_t first = n;
  std::exception_ptr picked;
  for (int t = 0; t < workers; ++t) {
    if (errors[static_cast<size_t>(t)] && errorIndex[static_cast<size_t>(t)] < first) {
      first = errorIndex[static_cast<size_t>(t)];
      picked = errors[static_cast<size_t>(t)];
    }
  }
  if (picked) std::rethrow_exception(picked);
}

}  // namespace

LossBreakdown BatchLoss(const Model &model,
                        const std::vector<const Example *> &batch,
                        double klWeight, double plWeight, int threads,
                        GradBuffer *grads) {
  Require(!batch.empty(), ErrorCode::kEmptyInput, "empty batch");
  const double invB = 1.0 / static_cast<double>(batch.size());

  struct Slot {
    LossBreakdown loss;
    GradBuffer grads;
  };

  LossBreakdown sums;
  for (size_t base = 0; base < batch.size(); base += kWindow) {
    size_t count = std::min<size_t>(kWindow, batch.size() - base);
    std::vector<Slot> slots(count);
    ParallelFor(count, threads, [&](size_t k) {
      const Example &ex = *batch[base + k];
      Graph g(&model.params().Dense());
      int logits = model.BuildLogits(&g, *ex.frames, ex.targets);
      std::vector<int> labels = ex.targets;
      labels.push_back(Vocab::kEos);
      int ce = g.SoftmaxCrossEntropy(logits, labels);
      int root;
      Slot &s = slots[k];
      if (ex.teacherProbs.size() != 0) {
        Require(ex.teacherProbs.rows() ==
                    static_cast<Eigen::Index>(ex.targets.size()) + 1,
                ErrorCode::kLengthMismatch,
                "teacher distributions do not cover the target sequence");
        int kl = g.KlToTarget(logits, ex.teacherProbs);
        root = g.WeightedSum(kl, klWeight, ce, plWeight);
        s.loss.kl = g.Scalar(kl);
      } else {
        root = g.Scale(ce, plWeight);
      }
      s.loss.pl = g.Scalar(ce);
      s.loss.total = g.Scalar(root);
      if (grads) {
        s.grads.Resize(model.params().Dense());
        g.Backward(root, invB, &s.grads);
      }
    });
    for (size_t k = 0; k < count; ++k) {
      sums.kl += slots[k].loss.kl;
      sums.pl += slots[k].loss.pl;
      sums.total += slots[k].loss.total;
      if (grads) grads->Add(slots[k].grads);
    }
  }

  LossBreakdown out{sums.kl * invB, sums.pl * invB, sums.total * invB};
  Require(std::isfinite(out.total) && std::isfinite(out.kl) &&
              std::isfinite(out.pl),
          ErrorCode::kNonFiniteLoss, "loss diverged");
  return out;
}

CorpusScore EvaluateModel(const Model &model, const Corpus &corpus,
                          NormMode mode, int threads) {
  std::vector<UtterancePair> pairs(corpus.size());
  ParallelFor(corpus.size(), threads, [&](size_t i) {
    const Utterance &u = corpus[i];
    pairs[i] = {u.id, u.dataset, u.reference, model.Transcribe(u.frames)};
  });
  return ScoreCorpus(pairs, mode);
}

Trainer::Trainer(Model *model, TrainOptions opts)
    : model_(model), opts_(opts) {
  Require(opts_.epochs >= 1 && opts_.batchSize >= 1 && opts_.lr > 0.0 &&
              opts_.warmupSteps >= 0 && opts_.threads >= 1 &&
              opts_.klWeight >= 0.0 && opts_.plWeight >= 0.0,
          ErrorCode::kInvalidConfig, "bad training settings");
}

std::vector<Example> Trainer::Encode(const Corpus &corpus) const {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const Utterance &u : corpus) {
    Example ex;
    ex.frames = &u.frames;
    ex.targets = model_->vocab().Encode(u.reference);
    out.push_back(std::move(ex));
  }
  return out;
}

TrainLog Trainer::Run(const std::vector<Example> &examples, const Corpus &dev,
                      double klW, double plW, double targetWer,
                      int maxEpochs) {
  Require(!examples.empty(), ErrorCode::kEmptyInput, "no training examples");
  TrainLog log;
  Adam adam(&model_->params());
  GradBuffer grads;
  grads.Resize(model_->params().Dense());
  int64_t step = 0;

  double bestWer = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXf> bestMasters;
  auto snapshot = [&] {
    bestMasters.clear();
    for (int i = 0; i < model_->params().Count(); ++i)
      bestMasters.push_back(model_->params().Master(i));
  };
  auto restoreBest = [&] {
    if (bestMasters.empty()) return;
    for (int i = 0; i < model_->params().Count(); ++i)
      model_->params().Master(i) = bestMasters[i];
    model_->params().SyncAll();
  };

  for (int epoch = 1; epoch <= maxEpochs; ++epoch) {
    std::vector<size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::Stream(opts_.seed, "epoch-" + std::to_string(epoch));
    rng.Shuffle(&order);

    double totalSum = 0.0;
    int64_t batches = 0;
    for (size_t base = 0; base < order.size();
         base += static_cast<size_t>(opts_.batchSize)) {
      size_t count = std::min<size_t>(static_cast<size_t>(opts_.batchSize),
                                      order.size() - base);
      std::vector<const Example *> batch(count);
      for (size_t k = 0; k < count; ++k) batch[k] = &examples[order[base + k]];
      ++step;
      double lr = WarmupConstantLr(opts_.lr, step, opts_.warmupSteps);
      grads.Zero();
      LossBreakdown loss =
          BatchLoss(*model_, batch, klW, plW, opts_.threads, &grads);
      adam.Step(grads, lr);
      log.steps.push_back({step, lr, loss});
      totalSum += loss.total;
      ++batches;
    }

    EpochLog e;
    e.epoch = epoch;
    e.trainLoss = totalSum / static_cast<double>(batches);
    if (!dev.empty()) {
      ScorePair pair =
          EvaluateModel(*model_, dev, NormMode::kNormalizedNoDiacritics,
                        opts_.threads)
              .Overall();
      e.devWer = pair.wer;
      e.devCer = pair.cer;
      if (e.devWer < bestWer) {
        bestWer = e.devWer;
        snapshot();
      }
    }
    log.epochs.push_back(e);
    if (targetWer >= 0.0 && !dev.empty() && e.devWer <= targetWer) return log;
  }
  // The model keeps the parameters of its best dev epoch, whether or not a
  // WER target was met.
  restoreBest();
  Require(targetWer < 0.0, ErrorCode::kBudgetExhausted,
          "dev WER still above " + std::to_string(targetWer) + " after " +
              std::to_string(maxEpochs) + " epochs");
  return log;
}

TrainLog Trainer::Fit(const Corpus &train, const Corpus &dev) {
  return Run(Encode(train), dev, 0.0, opts_.plWeight, -1.0, opts_.epochs);
}

TrainLog Trainer::FitToWer(const Corpus &train, const Corpus &dev,
                           double targetWer, int maxEpochs) {
  Require(!dev.empty(), ErrorCode::kEmptyInput,
          "a dev set is needed to train toward a WER target");
  Require(targetWer >= 0.0 && maxEpochs >= 0, ErrorCode::kInvalidArgument,
          "bad WER target or epoch budget");
  return Run(Encode(train), dev, 0.0, opts_.plWeight, targetWer, maxEpochs);
}

TrainLog Trainer::Distill(const Model &teacher, const Corpus &train,
                          const Corpus &dev) {
  Require(teacher.config().vocabCodepoints ==
                  model_->config().vocabCodepoints &&
              teacher.config().frameDim == model_->config().frameDim,
          ErrorCode::kIncompatibleConfig,
          "teacher and student disagree on vocabulary or frame width");
  std::vector<Example> examples = Encode(train);
  ParallelFor(examples.size(), opts_.threads, [&](size_t i) {
    examples[i].teacherProbs =
        teacher.PredictProbs(*examples[i].frames, examples[i].targets);
  });
  return Run(examples, dev, opts_.klWeight, opts_.plWeight, -1.0,
             opts_.epochs);
}

PseudoLabels PseudoLabelCorpus(const Model &teacher, const Corpus &corpus,
                               int threads) {
  std::vector<const Utterance *> order;
  order.reserve(corpus.size());
  for (const Utterance &u : corpus) order.push_back(&u);
  std::sort(order.begin(), order.end(),
            [](const Utterance *a, const Utterance *b) { return a->id < b->id; });

  PseudoLabels labels(order.size());
  ParallelFor(order.size(), threads, [&](size_t i) {
    const Utterance &u = *order[i];
    PseudoLabel &L = labels[i];
    L.id = u.id;
    try {
      L.text = teacher.Transcribe(u.frames);
      L.decoded = true;
    } catch (const Error &e) {
      L.note = ErrorCodeName(e.code());
      return;
    }
    try {
      L.wer = Wer(u.reference, L.text, NormMode::kNormalizedNoDiacritics);
      L.scored = true;
    } catch (const Error &e) {
      L.note = ErrorCodeName(e.code());
    }
  });
  return labels;
}

void WritePseudoLabels(const std::string &path, const PseudoLabels &labels) {
  std::ofstream os(path, std::ios::binary);
  Require(os.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  for (const PseudoLabel &L : labels) {
    nlohmann::ordered_json j;
    j["id"] = L.id;
    j["text"] = L.text;
    j["wer"] = L.wer;
    j["decoded"] = L.decoded;
    j["scored"] = L.scored;
    j["note"] = L.note;
    os << j.dump() << "\n";
  }
  Require(os.good(), ErrorCode::kIoError, "write failed to '" + path + "'");
}

PseudoLabels ReadPseudoLabels(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  PseudoLabels labels;
  std::map<std::string, size_t> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    PseudoLabel L;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      L.id = j.at("id").get<std::string>();
      L.text = j.at("text").get<std::string>();
      L.wer = j.at("wer").get<double>();
      L.decoded = j.at("decoded").get<bool>();
      L.scored = j.at("scored").get<bool>();
      L.note = j.at("note").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
      Fail(ErrorCode::kSchemaViolation, where + ": " + e.what());
    }
    Require(seen.emplace(L.id, labels.size()).second, ErrorCode::kDuplicateId,
            where + ": duplicate label id '" + L.id + "'");
    labels.push_back(std::move(L));
  }
  return labels;
}

FilterOutcome FilterByWer(const Corpus &corpus, const PseudoLabels &labels,
                          double lambda) {
  std::map<std::string, const PseudoLabel *> byId;
  for (const PseudoLabel &L : labels)
    Require(byId.emplace(L.id, &L).second, ErrorCode::kDuplicateId,
            "duplicate label id '" + L.id + "'");

  FilterOutcome out;
  out.total = static_cast<int64_t>(corpus.size());
  for (const Utterance &u : corpus) {
    auto it = byId.find(u.id);
    Require(it != byId.end(), ErrorCode::kInvalidArgument,
            "no pseudo label for '" + u.id + "'");
    const PseudoLabel &L = *it->second;
    bool keep = lambda < 0.0 ? L.decoded : (L.scored && L.wer <= lambda);
    if (!keep) continue;
    Utterance v = u;
    v.reference = L.text;
    out.retained.push_back(std::move(v));
    ++out.retainedCount;
  }
  return out;
}

std::vector<SweepPoint> ThresholdSweep(
    const Model &teacher, const Corpus &train, const PseudoLabels &labels,
    const Corpus &dev, const Corpus &test, const std::vector<double> &lambdas,
    int encoderLayers, int decoderLayers, const TrainOptions &opts) {
  std::vector<SweepPoint> out;
  for (double lambda : lambdas) {
    FilterOutcome f = FilterByWer(train, labels, lambda);
    Model student = InitStudent(teacher, encoderLayers, decoderLayers);
    if (!f.retained.empty()) {
      Trainer trainer(&student, opts);
      trainer.Distill(teacher, f.retained, dev);
    }
    SweepPoint p;
    p.lambda = lambda;
    p.retainedFraction = f.RetainedFraction();
    p.score = EvaluateModel(student, test,
                            NormMode::kNormalizedNoDiacritics, opts.threads);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ScalePoint> DataScaling(const Model &teacher, const Corpus &train,
                                    const std::vector<size_t> &sizes,
                                    uint64_t sampleSeed, const Corpus &dev,
                                    const Corpus &test, int encoderLayers,
                                    int decoderLayers,
                                    const TrainOptions &opts) {
  std::vector<ScalePoint> out;
  for (size_t size : sizes) {
    Corpus subset = SampleNested(train, size, sampleSeed);
    Model student = InitStudent(teacher, encoderLayers, decoderLayers);
    if (!subset.empty()) {
      Trainer trainer(&student, opts);
      trainer.Distill(teacher, subset, dev);
    }
    ScalePoint p;
    p.size = size;
    p.hoursProxy = ComputeStats(subset).total.HoursProxy();
    p.score = EvaluateModel(student, test,
                            NormMode::kNormalizedNoDiacritics, opts.threads);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace seqkd
