// tests/test_distill.cpp
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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "seqkd/distill.hpp"
#include "seqkd/errors.hpp"

using namespace seqkd;

namespace {

ModelConfig TinyConfig() {
  ModelConfig cfg;
  cfg.dModel = 8;
  cfg.nHeads = 2;
  cfg.encoderLayers = 2;
  cfg.decoderLayers = 2;
  cfg.ffnDim = 12;
  cfg.frameDim = 4;
  cfg.maxSourceLen = 40;
  cfg.maxTargetLen = 12;
  cfg.vocabCodepoints = {0x20, 0x633, 0x644, 0x645, 0x627};
  return cfg;
}

SynthConfig TinySynth() {
  SynthConfig cfg;
  cfg.utterances = 40;
  cfg.minWords = 1;
  cfg.maxWords = 1;
  cfg.minWordLen = 2;
  cfg.maxWordLen = 3;
  cfg.framesPerChar = 2;
  cfg.frameDim = 4;
  cfg.noiseStd = 0.05;
  cfg.seed = 4;
  cfg.alphabet = {0x633, 0x644, 0x645, 0x627};
  return cfg;
}

std::vector<Example> Encode(const Model &m, const Corpus &corpus) {
  std::vector<Example> out;
  for (const Utterance &u : corpus) {
    Example ex;
    ex.frames = &u.frames;
    ex.targets = m.vocab().Encode(u.reference);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<const Example *> Pointers(const std::vector<Example> &v) {
  std::vector<const Example *> out;
  for (const Example &e : v) out.push_back(&e);
  return out;
}

bool SameGrads(const GradBuffer &a, const GradBuffer &b) {
  if (a.g.size() != b.g.size()) return false;
  for (size_t i = 0; i < a.g.size(); ++i)
    if (a.g[i] != b.g[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("batch loss averages per-example losses and gradients") {
  Model m(TinyConfig());
  m.InitRandom(5);
  SynthConfig sc = TinySynth();
  sc.utterances = 3;
  Corpus corpus = SynthesizeCorpus(sc);
  std::vector<Example> ex = Encode(m, corpus);
  for (Example &e : ex)
    e.teacherProbs = Graph::Softmax(
        Mat::Random(static_cast<Eigen::Index>(e.targets.size()) + 1,
                    m.vocab().size()));

  std::vector<LossBreakdown> single;
  std::vector<GradBuffer> singleGrads(ex.size());
  for (size_t i = 0; i < ex.size(); ++i) {
    singleGrads[i].Resize(m.params().Dense());
    single.push_back(
        BatchLoss(m, {&ex[i]}, 0.8, 1.0, 1, &singleGrads[i]));
  }

  GradBuffer batchGrads;
  batchGrads.Resize(m.params().Dense());
  LossBreakdown batch = BatchLoss(m, Pointers(ex), 0.8, 1.0, 1, &batchGrads);

  double kl = 0, pl = 0, total = 0;
  for (const LossBreakdown &L : single) {
    kl += L.kl;
    pl += L.pl;
    total += L.total;
  }
  CHECK(batch.kl == doctest::Approx(kl / 3).epsilon(1e-12));
  CHECK(batch.pl == doctest::Approx(pl / 3).epsilon(1e-12));
  CHECK(batch.total == doctest::Approx(total / 3).epsilon(1e-12));
  CHECK(batch.total ==
        doctest::Approx(0.8 * batch.kl + 1.0 * batch.pl).epsilon(1e-9));

  GradBuffer mean;
  mean.Resize(m.params().Dense());
  for (const GradBuffer &g : singleGrads) mean.Add(g);
  for (Mat &g : mean.g) g /= 3.0;
  for (size_t i = 0; i < mean.g.size(); ++i)
    CHECK((mean.g[i] - batchGrads.g[i]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batch loss is bitwise identical for any thread count") {
  Model m(TinyConfig());
  m.InitRandom(6);
  SynthConfig sc = TinySynth();
  sc.utterances = 35;  // crosses two windows with a ragged tail
  Corpus corpus = SynthesizeCorpus(sc);
  std::vector<Example> ex = Encode(m, corpus);
  for (Example &e : ex)
    e.teacherProbs = Graph::Softmax(
        Mat::Random(static_cast<Eigen::Index>(e.targets.size()) + 1,
                    m.vocab().size()));

  GradBuffer g1, g4;
  g1.Resize(m.params().Dense());
  g4.Resize(m.params().Dense());
  LossBreakdown a = BatchLoss(m, Pointers(ex), 0.8, 1.0, 1, &g1);
  LossBreakdown b = BatchLoss(m, Pointers(ex), 0.8, 1.0, 4, &g4);
  CHECK(a.kl == b.kl);
  CHECK(a.pl == b.pl);
  CHECK(a.total == b.total);
  CHECK(SameGrads(g1, g4));
}

TEST_CASE("non-finite inputs surface as NonFiniteLoss") {
  Model m(TinyConfig());
  m.InitRandom(5);
  Eigen::MatrixXf bad = Eigen::MatrixXf::Zero(4, 4);
  bad(1, 2) = std::numeric_limits<float>::quiet_NaN();
  Example ex;
  ex.frames = &bad;
  ex.targets = {3, 4};
  try {
    BatchLoss(m, {&ex}, 0.0, 1.0, 1, nullptr);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kNonFiniteLoss);
  }
}

TEST_CASE("supervised training learns a tiny task and logs dev scores") {
  Corpus corpus = SynthesizeCorpus(TinySynth());
  auto [train, dev] = SplitTrainDev(corpus, 8, 1);

  Model m(TinyConfig());
  m.InitRandom(1);
  TrainOptions opts;
  opts.epochs = 20;
  opts.batchSize = 8;
  opts.lr = 1e-2;
  opts.warmupSteps = 10;
  opts.seed = 2;
  Trainer trainer(&m, opts);
  TrainLog log = trainer.Fit(train, dev);

  REQUIRE(log.epochs.size() == 20);
  CHECK(log.epochs.back().trainLoss < 0.5 * log.epochs.front().trainLoss);
  CHECK(log.epochs.back().devWer <= log.epochs.front().devWer);
  CHECK(log.steps.size() == 20 * 4);
  for (const StepLog &s : log.steps) {
    CHECK(std::isfinite(s.loss.total));
    CHECK(s.loss.kl == 0.0);
    CHECK(s.loss.total == doctest::Approx(s.loss.pl).epsilon(1e-12));
  }
  CHECK(log.steps.front().lr == doctest::Approx(1e-2 / 10));
  CHECK(log.steps.back().lr == doctest::Approx(1e-2));

  // Same seed, fresh model: the whole run replays identically.
  Model m2(TinyConfig());
  m2.InitRandom(1);
  Trainer trainer2(&m2, opts);
  TrainLog log2 = trainer2.Fit(train, dev);
  REQUIRE(log2.steps.size() == log.steps.size());
  for (size_t i = 0; i < log.steps.size(); ++i)
    CHECK(log.steps[i].loss.total == log2.steps[i].loss.total);
  for (size_t i = 0; i < log.epochs.size(); ++i)
    CHECK(log.epochs[i].devWer == log2.epochs[i].devWer);
}

TEST_CASE("training toward a WER target stops early or exhausts its budget") {
  Corpus corpus = SynthesizeCorpus(TinySynth());
  auto [train, dev] = SplitTrainDev(corpus, 8, 1);
  TrainOptions opts;
  opts.batchSize = 8;
  opts.seed = 2;

  Model easy(TinyConfig());
  easy.InitRandom(1);
  TrainLog log = Trainer(&easy, opts).FitToWer(train, dev, 1000.0, 5);
  CHECK(log.epochs.size() == 1);

  Model hard(TinyConfig());
  hard.InitRandom(1);
  try {
    Trainer(&hard, opts).FitToWer(train, dev, 0.0, 1);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kBudgetExhausted);
  }

  Model noDev(TinyConfig());
  noDev.InitRandom(1);
  CHECK_THROWS_AS(Trainer(&noDev, opts).FitToWer(train, {}, 10.0, 1), Error);
}

TEST_CASE("distillation keeps the loss identity at every logged step") {
  Corpus corpus = SynthesizeCorpus(TinySynth());
  auto [train, dev] = SplitTrainDev(corpus, 8, 1);

  Model teacher(TinyConfig());
  teacher.InitRandom(1);
  TrainOptions topts;
  topts.epochs = 12;
  topts.batchSize = 8;
  topts.lr = 1e-2;
  topts.warmupSteps = 10;
  topts.seed = 2;
  Trainer(&teacher, topts).Fit(train, dev);

  Model student = InitStudent(teacher, 1, 1);
  TrainOptions dopts;
  dopts.epochs = 2;
  dopts.batchSize = 8;
  dopts.lr = 3e-3;
  dopts.warmupSteps = 5;
  dopts.seed = 3;
  Trainer trainer(&student, dopts);
  TrainLog log = trainer.Distill(teacher, train, dev);

  CHECK(!log.steps.empty());
  for (const StepLog &s : log.steps) {
    CHECK(s.loss.kl > 0.0);
    double want = 0.8 * s.loss.kl + 1.0 * s.loss.pl;
    CHECK(std::abs(s.loss.total - want) <=
          1e-6 * std::max(1.0, std::abs(s.loss.total)));
  }

  ModelConfig other = TinyConfig();
  other.vocabCodepoints = {0x20, 0x628, 0x62A};
  Model stranger(other);
  stranger.InitRandom(9);
  Trainer bad(&stranger, dopts);
  try {
    bad.Distill(teacher, train, dev);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kIncompatibleConfig);
  }
}

TEST_CASE("pseudo labels cover every utterance in id order with diagnostics") {
  Corpus corpus = SynthesizeCorpus(TinySynth());
  auto [train, dev] = SplitTrainDev(corpus, 8, 1);

  Model teacher(TinyConfig());
  teacher.InitRandom(1);
  TrainOptions opts;
  opts.epochs = 25;
  opts.batchSize = 8;
  opts.lr = 1e-2;
  opts.warmupSteps = 10;
  opts.seed = 2;
  Trainer(&teacher, opts).Fit(train, dev);
  REQUIRE(!teacher.Transcribe(train[0].frames).empty());

  Corpus probe = train;
  {
    Utterance empty = train[0];
    empty.id = "zz-empty-ref";
    empty.reference = "";
    probe.push_back(empty);
    Utterance longer = train[1];
    longer.id = "zz-too-long";
    longer.frames = Eigen::MatrixXf::Zero(41, 4);
    probe.push_back(longer);
  }

  PseudoLabels labels = PseudoLabelCorpus(teacher, probe, 1);
  REQUIRE(labels.size() == probe.size());
  for (size_t i = 1; i < labels.size(); ++i)
    CHECK(labels[i - 1].id < labels[i].id);

  const PseudoLabel &emptyRef = labels[labels.size() - 2];
  CHECK(emptyRef.id == "zz-empty-ref");
  CHECK(emptyRef.decoded);
  CHECK(!emptyRef.text.empty());
  CHECK(!emptyRef.scored);
  CHECK(emptyRef.note == "EmptyReference");

  const PseudoLabel &tooLong = labels.back();
  CHECK(tooLong.id == "zz-too-long");
  CHECK(!tooLong.decoded);
  CHECK(!tooLong.scored);
  CHECK(tooLong.note == "SequenceTooLong");

  int scored = 0;
  for (const PseudoLabel &L : labels) scored += L.scored;
  CHECK(scored == static_cast<int>(train.size()));

  PseudoLabels four = PseudoLabelCorpus(teacher, probe, 4);
  REQUIRE(four.size() == labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    CHECK(four[i].id == labels[i].id);
    CHECK(four[i].text == labels[i].text);
    CHECK(four[i].wer == labels[i].wer);
  }

  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "seqkd_labels.jsonl";
  WritePseudoLabels(path.string(), labels);
  PseudoLabels back = ReadPseudoLabels(path.string());
  REQUIRE(back.size() == labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    CHECK(back[i].id == labels[i].id);
    CHECK(back[i].text == labels[i].text);
    CHECK(back[i].wer == labels[i].wer);
    CHECK(back[i].decoded == labels[i].decoded);
    CHECK(back[i].scored == labels[i].scored);
    CHECK(back[i].note == labels[i].note);
  }

  std::ofstream os(path, std::ios::binary);
  os << R"({"id":"a","text":"x"})" << "\n";
  os.close();
  CHECK_THROWS_WITH_AS(ReadPseudoLabels(path.string()),
                       doctest::Contains(":1"), Error);
}

TEST_CASE("WER filtering keeps the boundary and honors the no-threshold case") {
  Corpus corpus;
  PseudoLabels labels;
  auto add = [&](const std::string &id, double wer, bool decoded, bool scored) {
    Utterance u;
    u.id = id;
    u.reference = "ref " + id;
    u.dataset = "d";
    u.frames = Eigen::MatrixXf::Zero(2, 3);
    corpus.push_back(u);
    PseudoLabel L;
    L.id = id;
    L.text = "hyp " + id;
    L.wer = wer;
    L.decoded = decoded;
    L.scored = scored;
    labels.push_back(L);
  };
  add("a", 0.0, true, true);
  add("b", 40.0, true, true);
  add("c", 40.0001, true, true);
  add("d", 100.0, true, true);
  add("e", 0.0, false, false);  // decode failed
  add("f", 0.0, true, false);   // unscorable but decoded

  FilterOutcome at40 = FilterByWer(corpus, labels, 40.0);
  CHECK(at40.total == 6);
  CHECK(at40.retainedCount == 2);
  CHECK(at40.RetainedFraction() == doctest::Approx(2.0 / 6.0));
  CHECK(at40.retained[0].id == "a");
  CHECK(at40.retained[1].id == "b");
  CHECK(at40.retained[0].reference == "hyp a");

  FilterOutcome none = FilterByWer(corpus, labels, kNoThreshold);
  CHECK(none.retainedCount == 5);  // only the failed decode is out

  FilterOutcome zero = FilterByWer(corpus, labels, 0.0);
  CHECK(zero.retainedCount == 1);

  // Retention never grows when the threshold tightens, and every tighter
  // retained set is contained in the looser one.
  std::vector<double> lambdas = {kNoThreshold, 80.0, 40.0, 20.0, 10.0};
  FilterOutcome prev = FilterByWer(corpus, labels, lambdas[0]);
  for (size_t i = 1; i < lambdas.size(); ++i) {
    FilterOutcome cur = FilterByWer(corpus, labels, lambdas[i]);
    CHECK(cur.retainedCount <= prev.retainedCount);
    for (const Utterance &u : cur.retained) {
      bool found = false;
      for (const Utterance &p : prev.retained) found |= p.id == u.id;
      CHECK(found);
    }
    prev = cur;
  }

  Corpus orphan = corpus;
  orphan.push_back(corpus[0]);
  orphan.back().id = "zz";
  CHECK_THROWS_AS(FilterByWer(orphan, labels, 40.0), Error);
}

TEST_CASE("threshold sweep and data scaling produce one row per setting") {
  SynthConfig sc = TinySynth();
  sc.utterances = 16;
  Corpus corpus = SynthesizeCorpus(sc);
  auto [train, dev] = SplitTrainDev(corpus, 4, 1);
  sc.seed = 9;
  sc.utterances = 6;
  Corpus test = SynthesizeCorpus(sc);

  Model teacher(TinyConfig());
  teacher.InitRandom(1);
  TrainOptions opts;
  opts.epochs = 1;
  opts.batchSize = 6;
  opts.seed = 3;

  PseudoLabels labels = PseudoLabelCorpus(teacher, train, 1);
  std::vector<double> lambdas = {kNoThreshold, 80.0};
  auto sweep =
      ThresholdSweep(teacher, train, labels, dev, test, lambdas, 1, 1, opts);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].lambda == kNoThreshold);
  CHECK(sweep[0].retainedFraction >= sweep[1].retainedFraction);
  for (const SweepPoint &p : sweep)
    CHECK(p.score.perDataset.count("synth") == 1);

  FilterOutcome all = FilterByWer(train, labels, kNoThreshold);
  REQUIRE(all.retainedCount >= 8);
  auto scale = DataScaling(teacher, all.retained, {4, 8}, 7, dev, test, 1, 1,
                           opts);
  REQUIRE(scale.size() == 2);
  CHECK(scale[0].size == 4);
  CHECK(scale[1].size == 8);
  CHECK(scale[0].hoursProxy < scale[1].hoursProxy);
  CHECK(scale[0].hoursProxy > 0.0);
}
