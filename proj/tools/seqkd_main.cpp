// tools/seqkd_main.cpp
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

// Single entry point for the toolkit.  Subcommands cover corpus synthesis,
// normalization, scoring, teacher training, pseudo-labeling, filtering,
// distillation, evaluation, sweeps, scaling curves, error reports and the
// end-to-end pipeline.  Tabular output is TSV with a header row; structured
// output is JSONL.  Every artifact-producing run records a run.meta file
// with the tool version and the fully resolved configuration.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqkd/analysis.hpp"
#include "seqkd/data.hpp"
#include "seqkd/distill.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/metrics.hpp"
#include "seqkd/model.hpp"
#include "seqkd/pipeline.hpp"
#include "seqkd/textnorm.hpp"
#include "seqkd/utf8.hpp"

namespace {

namespace fs = std::filesystem;
using namespace seqkd;

struct GlobalFlags {
  uint64_t seed = 0;
  std::string out;
  int threads = 1;
};

std::string Fmt(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

std::ofstream MustOpen(const std::string &path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  Require(os.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  return os;
}

void EchoFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), ErrorCode::kIoError, "cannot read '" + path + "'");
  std::cout << is.rdbuf();
}

std::string InDir(const std::string &dir, const char *name) {
  return (fs::path(dir) / name).string();
}

std::vector<std::string> SplitCsv(const std::string &csv) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<uint32_t> DecodeAlphabet(const std::string &letters) {
  std::vector<uint32_t> out;
  for (char32_t cp : Utf8Decode(letters))
    if (cp != U' ') out.push_back(static_cast<uint32_t>(cp));
  return out;
}

std::map<uint32_t, uint32_t> DecodeSubstitution(const std::string &spec) {
  std::map<uint32_t, uint32_t> out;
  if (spec.empty()) return out;
  for (const std::string &part : SplitCsv(spec)) {
    size_t eq = part.find('=');
    Require(eq != std::string::npos, ErrorCode::kInvalidArgument,
            "substitution entries look like 'from=to', got '" + part + "'");
    std::vector<char32_t> from = Utf8Decode(part.substr(0, eq));
    std::vector<char32_t> to = Utf8Decode(part.substr(eq + 1));
    Require(from.size() == 1 && to.size() == 1, ErrorCode::kInvalidArgument,
            "substitution sides must be single characters in '" + part + "'");
    out[static_cast<uint32_t>(from[0])] = static_cast<uint32_t>(to[0]);
  }
  return out;
}

double ParseLambda(const std::string &label) {
  if (label == "none") return kNoThreshold;
  try {
    size_t used = 0;
    double v = std::stod(label, &used);
    Require(used == label.size() && v >= 0.0, ErrorCode::kInvalidArgument,
            "threshold must be a non-negative number or 'none', got '" +
                label + "'");
    return v;
  } catch (const Error &) {
    throw;
  } catch (...) {
    Fail(ErrorCode::kInvalidArgument,
         "threshold must be a non-negative number or 'none', got '" + label +
             "'");
  }
}

std::vector<double> ParseLambdaList(const std::string &csv) {
  std::vector<double> out;
  for (const std::string &part : SplitCsv(csv)) out.push_back(ParseLambda(part));
  return out;
}

std::vector<size_t> ParseSizeList(const std::string &csv) {
  std::vector<size_t> out;
  for (const std::string &part : SplitCsv(csv)) {
    try {
      size_t used = 0;
      long long v = std::stoll(part, &used);
      Require(used == part.size() && v > 0, ErrorCode::kInvalidArgument,
              "sizes must be positive integers, got '" + part + "'");
      out.push_back(static_cast<size_t>(v));
    } catch (const Error &) {
      throw;
    } catch (...) {
      Fail(ErrorCode::kInvalidArgument,
           "sizes must be positive integers, got '" + part + "'");
    }
  }
  return out;
}

// Hypotheses as JSONL rows with at least string fields id and text.  The
// pseudo-label files written by this tool read back directly.
std::map<std::string, std::string> ReadHyps(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), ErrorCode::kIoError, "cannot read '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    Require(!j.is_discarded() && j.is_object(), ErrorCode::kSchemaViolation,
            where + ": not a JSON object");
    Require(j.contains("id") && j["id"].is_string() && j.contains("text") &&
                j["text"].is_string(),
            ErrorCode::kSchemaViolation,
            where + ": needs string fields 'id' and 'text'");
    std::string id = j["id"];
    Require(out.find(id) == out.end(), ErrorCode::kDuplicateId,
            where + ": duplicate id '" + id + "'");
    out[id] = j["text"];
  }
  return out;
}

std::vector<UtterancePair> MakePairs(
    const Corpus &corpus, const std::map<std::string, std::string> &hyps) {
  std::vector<UtterancePair> pairs;
  pairs.reserve(corpus.size());
  for (const Utterance &u : corpus) {
    auto it = hyps.find(u.id);
    Require(it != hyps.end(), ErrorCode::kInvalidArgument,
            "no hypothesis for utterance '" + u.id + "'");
    pairs.push_back({u.id, u.dataset, u.reference, it->second});
  }
  return pairs;
}

std::vector<uint32_t> ReferenceCodepoints(const Corpus &corpus) {
  std::set<uint32_t> cps;
  for (const Utterance &u : corpus)
    for (char32_t cp : Utf8Decode(u.reference))
      cps.insert(static_cast<uint32_t>(cp));
  return {cps.begin(), cps.end()};
}

// Reused flag bundles.

struct SynthFlags {
  int utterances = 1000;
  int minWords = 1, maxWords = 2;
  int minWordLen = 2, maxWordLen = 4;
  int framesPerChar = 2;
  int frameDim = 16;
  double noiseStd = 0.3;
  uint64_t embedSeed = 7;
  std::string dataset = "synth";
  std::string dialect = "base";
  std::string idPrefix;
  std::string alphabet = "ابجدهوزحطي";
  std::string substitution;
};

void AddSynthFlags(CLI::App *cmd, SynthFlags *f) {
  cmd->add_option("--utterances", f->utterances, "Utterances to synthesize");
  cmd->add_option("--min-words", f->minWords, "Minimum words per utterance");
  cmd->add_option("--max-words", f->maxWords, "Maximum words per utterance");
  cmd->add_option("--min-word-len", f->minWordLen, "Minimum letters per word");
  cmd->add_option("--max-word-len", f->maxWordLen, "Maximum letters per word");
  cmd->add_option("--frames-per-char", f->framesPerChar,
                  "Frames emitted per character");
  cmd->add_option("--frame-dim", f->frameDim, "Feature dimension per frame");
  cmd->add_option("--noise-std", f->noiseStd,
                  "Gaussian noise added to frame features");
  cmd->add_option("--embed-seed", f->embedSeed,
                  "Seed of the shared character embedding table");
  cmd->add_option("--dataset", f->dataset, "Dataset tag on every utterance");
  cmd->add_option("--dialect", f->dialect, "Dialect tag on every utterance");
  cmd->add_option("--id-prefix", f->idPrefix,
                  "Utterance id prefix; defaults to the dataset tag");
  cmd->add_option("--alphabet", f->alphabet, "Letters words are drawn from");
  cmd->add_option("--substitution", f->substitution,
                  "Character shifts like 'from=to,from=to'");
}

SynthConfig ToSynthConfig(const SynthFlags &f, uint64_t seed) {
  SynthConfig c;
  c.utterances = f.utterances;
  c.minWords = f.minWords;
  c.maxWords = f.maxWords;
  c.minWordLen = f.minWordLen;
  c.maxWordLen = f.maxWordLen;
  c.framesPerChar = f.framesPerChar;
  c.frameDim = f.frameDim;
  c.noiseStd = f.noiseStd;
  c.seed = seed;
  c.embedSeed = f.embedSeed;
  c.dataset = f.dataset;
  c.dialect = f.dialect;
  c.idPrefix = f.idPrefix;
  c.alphabet = DecodeAlphabet(f.alphabet);
  c.substitution = DecodeSubstitution(f.substitution);
  return c;
}

struct ShapeFlags {
  int dModel = 32;
  int heads = 4;
  int encLayers = 4;
  int decLayers = 4;
  int ffn = 64;
  int frameDim = 16;
  int maxSourceLen = 64;
  int maxTargetLen = 16;
};

void AddShapeFlags(CLI::App *cmd, ShapeFlags *f) {
  cmd->add_option("--d-model", f->dModel, "Model width");
  cmd->add_option("--heads", f->heads, "Attention heads");
  cmd->add_option("--enc-layers", f->encLayers, "Encoder layers");
  cmd->add_option("--dec-layers", f->decLayers, "Decoder layers");
  cmd->add_option("--ffn", f->ffn, "Feed-forward width");
  cmd->add_option("--frame-dim", f->frameDim, "Input frame dimension");
  cmd->add_option("--max-source-len", f->maxSourceLen, "Frame count limit");
  cmd->add_option("--max-target-len", f->maxTargetLen,
                  "Token count limit including the end marker");
}

ModelConfig ToModelConfig(const ShapeFlags &f,
                          const std::vector<uint32_t> &vocab) {
  ModelConfig c;
  c.dModel = f.dModel;
  c.nHeads = f.heads;
  c.encoderLayers = f.encLayers;
  c.decoderLayers = f.decLayers;
  c.ffnDim = f.ffn;
  c.frameDim = f.frameDim;
  c.maxSourceLen = f.maxSourceLen;
  c.maxTargetLen = f.maxTargetLen;
  c.vocabCodepoints = vocab;
  return c;
}

struct TrainFlags {
  int epochs = 10;
  int batch = 16;
  double lr = 3e-3;
  int warmup = 50;
  double klWeight = 0.8;
  double plWeight = 1.0;
};

void AddTrainFlags(CLI::App *cmd, TrainFlags *f) {
  cmd->add_option("--epochs", f->epochs, "Training epochs");
  cmd->add_option("--batch", f->batch, "Batch size");
  cmd->add_option("--lr", f->lr, "Base learning rate");
  cmd->add_option("--warmup", f->warmup, "Warmup steps");
}

void AddDistillWeights(CLI::App *cmd, TrainFlags *f) {
  cmd->add_option("--kl-weight", f->klWeight,
                  "Weight on the teacher-matching term");
  cmd->add_option("--pl-weight", f->plWeight,
                  "Weight on the label likelihood term");
}

TrainOptions ToTrainOptions(const TrainFlags &f, const GlobalFlags &g) {
  TrainOptions o;
  o.epochs = f.epochs;
  o.batchSize = f.batch;
  o.lr = f.lr;
  o.warmupSteps = f.warmup;
  o.seed = g.seed;
  o.klWeight = f.klWeight;
  o.plWeight = f.plWeight;
  o.threads = g.threads;
  return o;
}

struct CorpusFlags {
  std::string manifest;
  std::string dev;
  int devCount = 0;
};

void AddCorpusFlags(CLI::App *cmd, CorpusFlags *f) {
  cmd->add_option("--manifest", f->manifest, "Training manifest")->required();
  cmd->add_option("--dev", f->dev, "Dev manifest held out for evaluation");
  cmd->add_option("--dev-count", f->devCount,
                  "Split this many utterances off the manifest as dev");
}

std::pair<Corpus, Corpus> LoadTrainDev(const CorpusFlags &f, uint64_t seed) {
  Corpus all = ReadCorpus(f.manifest);
  if (!f.dev.empty()) {
    Require(f.devCount == 0, ErrorCode::kInvalidArgument,
            "pass either --dev or --dev-count, not both");
    return {std::move(all), ReadCorpus(f.dev)};
  }
  Require(f.devCount > 0, ErrorCode::kInvalidArgument,
          "training needs --dev or --dev-count");
  return SplitTrainDev(all, static_cast<size_t>(f.devCount), seed);
}

const std::string &NeedOut(const GlobalFlags &g) {
  Require(!g.out.empty(), ErrorCode::kInvalidArgument,
          "this command needs --out");
  return g.out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Teacher to student transcription distillation toolkit",
               "seqkd"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Seed for every stochastic choice");
  app.add_option("--out", g.out, "Directory artifacts are written into");
  app.add_option("--threads", g.threads, "Worker threads for batched work")
      ->check(CLI::PositiveNumber);
  app.set_config("--config", "",
                 "Flag file with [subcommand] sections; command-line wins");

  auto cmd = [&](const char *name, const char *desc) {
    CLI::App *c = app.add_subcommand(name, desc);
    c->fallthrough();
    c->configurable();
    return c;
  };
  auto saveMeta = [&](const std::string &outDir, const std::string &name) {
    WriteRunMeta(InDir(outDir, "run.meta"), name,
                 app.config_to_str(true, false));
  };

  // gen-corpus: synthesize a manifest plus frames sidecar.
  CLI::App *genCorpus = cmd("gen-corpus", "Synthesize a labeled corpus");
  auto genSynth = std::make_shared<SynthFlags>();
  auto genManifest = std::make_shared<std::string>();
  auto genInline = std::make_shared<bool>(false);
  AddSynthFlags(genCorpus, genSynth.get());
  genCorpus->add_option("--manifest", *genManifest,
                        "Manifest path; defaults to <out>/corpus.jsonl");
  genCorpus->add_flag("--inline-frames", *genInline,
                      "Embed frames in the manifest instead of a sidecar");
  genCorpus->callback([&, genSynth, genManifest, genInline] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "gen-corpus");
    std::string manifest = genManifest->empty() ? InDir(outDir, "corpus.jsonl")
                                                : *genManifest;
    Corpus corpus = SynthesizeCorpus(ToSynthConfig(*genSynth, g.seed));
    WriteCorpus(manifest, corpus, *genInline);
    WriteStatsTsv(std::cout, ComputeStats(corpus));
  });

  // stats: corpus composition table.
  CLI::App *stats = cmd("stats", "Summarize a manifest");
  auto statsManifest = std::make_shared<std::string>();
  stats->add_option("--manifest", *statsManifest, "Manifest to summarize")
      ->required();
  stats->callback([&, statsManifest] {
    CorpusStats s = ComputeStats(ReadCorpus(*statsManifest));
    WriteStatsTsv(std::cout, s);
    if (!g.out.empty()) {
      saveMeta(g.out, "stats");
      WriteStatsTsv(InDir(g.out, "stats.tsv"), s);
    }
  });

  // normalize: text cleanup, one line out per line in.
  CLI::App *normalize = cmd("normalize", "Normalize text lines");
  auto normMode = std::make_shared<std::string>("normalized_nd");
  auto normTexts = std::make_shared<std::vector<std::string>>();
  auto normIn = std::make_shared<std::string>();
  auto normRules = std::make_shared<std::string>();
  normalize->add_option("--mode", *normMode,
                        "orthographic, normalized or normalized_nd");
  normalize->add_option("--text", *normTexts, "Literal text to normalize");
  normalize->add_option("--in", *normIn, "File of lines; default is stdin");
  normalize->add_option("--dump-rules", *normRules,
                        "Write the rule table to this path and skip stdin");
  normalize->callback([&, normMode, normTexts, normIn, normRules] {
    NormMode mode = ParseNormMode(*normMode);
    if (!normRules->empty()) {
      std::ofstream os = MustOpen(*normRules);
      DumpRules(os);
    }
    if (!normTexts->empty()) {
      for (const std::string &t : *normTexts)
        std::cout << Normalize(t, mode) << "\n";
    } else if (!normIn->empty()) {
      std::ifstream is(*normIn, std::ios::binary);
      Require(is.good(), ErrorCode::kIoError, "cannot read '" + *normIn + "'");
      std::string line;
      while (std::getline(is, line)) std::cout << Normalize(line, mode) << "\n";
    } else if (normRules->empty()) {
      std::string line;
      while (std::getline(std::cin, line))
        std::cout << Normalize(line, mode) << "\n";
    }
  });

  // score: rates for one pair or for a whole manifest.
  CLI::App *score = cmd("score", "Word and character error rates");
  auto scoreMode = std::make_shared<std::string>("normalized_nd");
  auto scoreManifest = std::make_shared<std::string>();
  auto scoreHyps = std::make_shared<std::string>();
  auto scoreRef = std::make_shared<std::string>();
  auto scoreHyp = std::make_shared<std::string>();
  score->add_option("--mode", *scoreMode,
                    "orthographic, normalized or normalized_nd");
  score->add_option("--manifest", *scoreManifest, "Reference manifest");
  score->add_option("--hyps", *scoreHyps,
                    "Hypotheses JSONL with id and text fields");
  score->add_option("--ref", *scoreRef, "Single reference string");
  score->add_option("--hyp", *scoreHyp, "Single hypothesis string");
  score->callback([&, scoreMode, scoreManifest, scoreHyps, scoreRef,
                   scoreHyp] {
    NormMode mode = ParseNormMode(*scoreMode);
    bool pair = score->count("--ref") > 0 || score->count("--hyp") > 0;
    bool corpus = !scoreManifest->empty() || !scoreHyps->empty();
    Require(pair != corpus, ErrorCode::kInvalidArgument,
            "pass --ref/--hyp or --manifest/--hyps");
    if (pair) {
      std::cout << "metric\trate\n";
      std::cout << "wer\t" << Fmt(Wer(*scoreRef, *scoreHyp, mode), 4) << "\n";
      std::cout << "cer\t" << Fmt(Cer(*scoreRef, *scoreHyp, mode), 4) << "\n";
      return;
    }
    Require(!scoreManifest->empty() && !scoreHyps->empty(),
            ErrorCode::kInvalidArgument,
            "corpus scoring needs --manifest and --hyps");
    CorpusScore s = ScoreCorpus(
        MakePairs(ReadCorpus(*scoreManifest), ReadHyps(*scoreHyps)), mode);
    WriteScoresTsv(std::cout, s);
    if (!g.out.empty()) {
      saveMeta(g.out, "score");
      WriteScoresTsv(InDir(g.out, "scores.tsv"), s);
    }
  });

  // train-teacher: supervised training on clean references.
  CLI::App *trainTeacher = cmd("train-teacher", "Train a supervised teacher");
  auto ttCorpus = std::make_shared<CorpusFlags>();
  auto ttShape = std::make_shared<ShapeFlags>();
  auto ttTrain = std::make_shared<TrainFlags>();
  auto ttTargetWer = std::make_shared<double>(10.0);
  auto ttMaxEpochs = std::make_shared<int>(40);
  AddCorpusFlags(trainTeacher, ttCorpus.get());
  AddShapeFlags(trainTeacher, ttShape.get());
  AddTrainFlags(trainTeacher, ttTrain.get());
  CLI::Option *ttTargetOpt = trainTeacher->add_option(
      "--target-wer", *ttTargetWer,
      "Stop at this dev WER; without it --epochs run unconditionally");
  trainTeacher->add_option("--max-epochs", *ttMaxEpochs,
                           "Epoch budget for --target-wer");
  trainTeacher->callback([&, ttCorpus, ttShape, ttTrain, ttTargetWer,
                          ttMaxEpochs, ttTargetOpt] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "train-teacher");
    auto [train, dev] = LoadTrainDev(*ttCorpus, g.seed);
    Model model(ToModelConfig(*ttShape, ReferenceCodepoints(train)));
    model.InitRandom(g.seed);
    Trainer trainer(&model, ToTrainOptions(*ttTrain, g));
    TrainLog log;
    try {
      if (ttTargetOpt->count() > 0)
        log = trainer.FitToWer(train, dev, *ttTargetWer, *ttMaxEpochs);
      else
        log = trainer.Fit(train, dev);
    } catch (const Error &e) {
      // An exhausted budget still leaves the best checkpoint behind.
      if (e.code() == ErrorCode::kBudgetExhausted)
        model.Save(InDir(outDir, "model.ckpt"));
      throw;
    }
    model.Save(InDir(outDir, "model.ckpt"));
    WriteTrainLogs(outDir, log);
    EchoFile(InDir(outDir, "epochs.tsv"));
  });

  // pseudolabel: teacher transcripts plus reference WER per utterance.
  CLI::App *pseudolabel = cmd("pseudolabel", "Label a corpus with a model");
  auto plModel = std::make_shared<std::string>();
  auto plManifest = std::make_shared<std::string>();
  pseudolabel->add_option("--model", *plModel, "Teacher checkpoint")
      ->required();
  pseudolabel->add_option("--manifest", *plManifest, "Corpus to label")
      ->required();
  pseudolabel->callback([&, plModel, plManifest] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "pseudolabel");
    Model teacher = Model::Load(*plModel);
    PseudoLabels labels =
        PseudoLabelCorpus(teacher, ReadCorpus(*plManifest), g.threads);
    WritePseudoLabels(InDir(outDir, "labels.jsonl"), labels);
    int64_t decoded = 0, scored = 0;
    for (const PseudoLabel &l : labels) {
      decoded += l.decoded ? 1 : 0;
      scored += l.scored ? 1 : 0;
    }
    std::cout << "total\tdecoded\tscored\n"
              << labels.size() << "\t" << decoded << "\t" << scored << "\n";
  });

  // filter: keep utterances whose pseudo label meets the WER threshold.
  CLI::App *filter = cmd("filter", "Filter pseudo labels by WER");
  auto fManifest = std::make_shared<std::string>();
  auto fLabels = std::make_shared<std::string>();
  auto fLambda = std::make_shared<std::string>("none");
  filter->add_option("--manifest", *fManifest, "Corpus the labels cover")
      ->required();
  filter->add_option("--labels", *fLabels, "Pseudo-label JSONL")->required();
  filter->add_option("--lambda", *fLambda,
                     "Maximum WER to retain, or 'none' to keep all decoded");
  filter->callback([&, fManifest, fLabels, fLambda] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "filter");
    double lambda = ParseLambda(*fLambda);
    FilterOutcome f = FilterByWer(ReadCorpus(*fManifest),
                                  ReadPseudoLabels(*fLabels), lambda);
    WriteCorpus(InDir(outDir, "retained.jsonl"), f.retained);
    auto summary = [&](std::ostream &os) {
      os << "lambda\ttotal\tretained\tretained_fraction\n";
      os << (lambda < 0.0 ? std::string("none") : Fmt(lambda, 1)) << "\t"
         << f.total << "\t" << f.retainedCount << "\t"
         << Fmt(f.RetainedFraction(), 6) << "\n";
    };
    std::ofstream os = MustOpen(InDir(outDir, "summary.tsv"));
    summary(os);
    summary(std::cout);
  });

  // init-student: shrink a teacher by evenly spaced layer copies.
  CLI::App *initStudent = cmd("init-student", "Initialize a student model");
  auto isTeacher = std::make_shared<std::string>();
  auto isEnc = std::make_shared<int>(2);
  auto isDec = std::make_shared<int>(2);
  initStudent->add_option("--teacher", *isTeacher, "Teacher checkpoint")
      ->required();
  initStudent->add_option("--enc-layers", *isEnc, "Student encoder layers");
  initStudent->add_option("--dec-layers", *isDec, "Student decoder layers");
  initStudent->callback([&, isTeacher, isEnc, isDec] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "init-student");
    Model teacher = Model::Load(*isTeacher);
    Model student = InitStudent(teacher, *isEnc, *isDec);
    student.Save(InDir(outDir, "model.ckpt"));
  });

  // distill: train a student against teacher distributions and labels.
  CLI::App *distill = cmd("distill", "Distill a student from a teacher");
  auto dCorpus = std::make_shared<CorpusFlags>();
  auto dTrain = std::make_shared<TrainFlags>();
  auto dTeacher = std::make_shared<std::string>();
  auto dStudent = std::make_shared<std::string>();
  auto dRandom = std::make_shared<bool>(false);
  auto dEnc = std::make_shared<int>(2);
  auto dDec = std::make_shared<int>(2);
  AddCorpusFlags(distill, dCorpus.get());
  AddTrainFlags(distill, dTrain.get());
  AddDistillWeights(distill, dTrain.get());
  distill->add_option("--teacher", *dTeacher, "Teacher checkpoint")
      ->required();
  distill->add_option("--student", *dStudent,
                      "Student checkpoint; default derives from the teacher");
  distill->add_flag("--random-init", *dRandom,
                    "Start from random weights instead of teacher layers");
  distill->add_option("--enc-layers", *dEnc, "Derived student encoder layers");
  distill->add_option("--dec-layers", *dDec, "Derived student decoder layers");
  distill->callback([&, dCorpus, dTrain, dTeacher, dStudent, dRandom, dEnc,
                     dDec] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "distill");
    auto [train, dev] = LoadTrainDev(*dCorpus, g.seed);
    Model teacher = Model::Load(*dTeacher);
    Model student = [&]() -> Model {
      if (!dStudent->empty()) {
        Require(!*dRandom, ErrorCode::kInvalidArgument,
                "--student and --random-init are mutually exclusive");
        return Model::Load(*dStudent);
      }
      if (*dRandom) {
        ModelConfig sc = teacher.config();
        sc.encoderLayers = *dEnc;
        sc.decoderLayers = *dDec;
        Model s(sc);
        s.InitRandom(g.seed);
        return s;
      }
      return InitStudent(teacher, *dEnc, *dDec);
    }();
    Trainer trainer(&student, ToTrainOptions(*dTrain, g));
    TrainLog log = trainer.Distill(teacher, train, dev);
    student.Save(InDir(outDir, "model.ckpt"));
    WriteTrainLogs(outDir, log);
    EchoFile(InDir(outDir, "epochs.tsv"));
  });

  // evaluate: decode a manifest and score against its references.
  CLI::App *evaluate = cmd("evaluate", "Score a model on a manifest");
  auto evModel = std::make_shared<std::string>();
  auto evManifest = std::make_shared<std::string>();
  auto evMode = std::make_shared<std::string>("normalized_nd");
  evaluate->add_option("--model", *evModel, "Model checkpoint")->required();
  evaluate->add_option("--manifest", *evManifest, "Corpus to score")
      ->required();
  evaluate->add_option("--mode", *evMode,
                       "orthographic, normalized or normalized_nd");
  evaluate->callback([&, evModel, evManifest, evMode] {
    Model model = Model::Load(*evModel);
    CorpusScore s = EvaluateModel(model, ReadCorpus(*evManifest),
                                  ParseNormMode(*evMode), g.threads);
    WriteScoresTsv(std::cout, s);
    if (!g.out.empty()) {
      saveMeta(g.out, "evaluate");
      WriteScoresTsv(InDir(g.out, "scores.tsv"), s);
    }
  });

  // sweep: one distillation per threshold, scored on a held-out set.
  CLI::App *sweep = cmd("sweep", "Sweep the WER retention threshold");
  auto swTrain = std::make_shared<TrainFlags>();
  auto swTeacher = std::make_shared<std::string>();
  auto swManifest = std::make_shared<std::string>();
  auto swLabels = std::make_shared<std::string>();
  auto swDev = std::make_shared<std::string>();
  auto swTest = std::make_shared<std::string>();
  auto swLambdas = std::make_shared<std::string>("none,80,40,20,10");
  auto swEnc = std::make_shared<int>(2);
  auto swDec = std::make_shared<int>(2);
  AddTrainFlags(sweep, swTrain.get());
  AddDistillWeights(sweep, swTrain.get());
  sweep->add_option("--teacher", *swTeacher, "Teacher checkpoint")->required();
  sweep->add_option("--manifest", *swManifest, "Training corpus")->required();
  sweep->add_option("--labels", *swLabels, "Pseudo-label JSONL")->required();
  sweep->add_option("--dev", *swDev, "Dev manifest")->required();
  sweep->add_option("--test", *swTest,
                    "Scoring manifest; defaults to the dev manifest");
  sweep->add_option("--lambdas", *swLambdas, "Thresholds like '80,40,none'");
  sweep->add_option("--enc-layers", *swEnc, "Student encoder layers");
  sweep->add_option("--dec-layers", *swDec, "Student decoder layers");
  sweep->callback([&, swTrain, swTeacher, swManifest, swLabels, swDev, swTest,
                   swLambdas, swEnc, swDec] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "sweep");
    Model teacher = Model::Load(*swTeacher);
    Corpus train = ReadCorpus(*swManifest);
    Corpus dev = ReadCorpus(*swDev);
    Corpus test = swTest->empty() ? dev : ReadCorpus(*swTest);
    std::vector<SweepPoint> points = ThresholdSweep(
        teacher, train, ReadPseudoLabels(*swLabels), dev, test,
        ParseLambdaList(*swLambdas), *swEnc, *swDec,
        ToTrainOptions(*swTrain, g));
    WriteSweepTsv(InDir(outDir, "sweep.tsv"), points);
    WriteSweepTsv(std::cout, points);
  });

  // scale: distillation quality as a function of retained corpus size.
  CLI::App *scale = cmd("scale", "Vary the distillation corpus size");
  auto scTrain = std::make_shared<TrainFlags>();
  auto scTeacher = std::make_shared<std::string>();
  auto scManifest = std::make_shared<std::string>();
  auto scDev = std::make_shared<std::string>();
  auto scTest = std::make_shared<std::string>();
  auto scSizes = std::make_shared<std::string>();
  auto scSampleSeed = std::make_shared<uint64_t>(0);
  auto scEnc = std::make_shared<int>(2);
  auto scDec = std::make_shared<int>(2);
  AddTrainFlags(scale, scTrain.get());
  AddDistillWeights(scale, scTrain.get());
  scale->add_option("--teacher", *scTeacher, "Teacher checkpoint")->required();
  scale->add_option("--manifest", *scManifest, "Distillation corpus")
      ->required();
  scale->add_option("--dev", *scDev, "Dev manifest")->required();
  scale->add_option("--test", *scTest,
                    "Scoring manifest; defaults to the dev manifest");
  scale->add_option("--sizes", *scSizes, "Subset sizes like '250,500,1000'")
      ->required();
  scale->add_option("--sample-seed", *scSampleSeed, "Seed of the nested subsets");
  scale->add_option("--enc-layers", *scEnc, "Student encoder layers");
  scale->add_option("--dec-layers", *scDec, "Student decoder layers");
  scale->callback([&, scTrain, scTeacher, scManifest, scDev, scTest, scSizes,
                   scSampleSeed, scEnc, scDec] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "scale");
    Model teacher = Model::Load(*scTeacher);
    Corpus train = ReadCorpus(*scManifest);
    Corpus dev = ReadCorpus(*scDev);
    Corpus test = scTest->empty() ? dev : ReadCorpus(*scTest);
    std::vector<ScalePoint> points = DataScaling(
        teacher, train, ParseSizeList(*scSizes), *scSampleSeed, dev, test,
        *scEnc, *scDec, ToTrainOptions(*scTrain, g));
    WriteScaleTsv(InDir(outDir, "scale.tsv"), points);
    WriteScaleTsv(std::cout, points);
  });

  // error-report: triage flags per utterance plus per-dialect rollups.
  CLI::App *errorReport = cmd("error-report", "Flag hypothesis failures");
  auto erManifest = std::make_shared<std::string>();
  auto erHyps = std::make_shared<std::string>();
  auto erSample = std::make_shared<int>(20);
  auto erCfg = std::make_shared<FlagConfig>();
  errorReport->add_option("--manifest", *erManifest, "Reference manifest")
      ->required();
  errorReport->add_option("--hyps", *erHyps,
                          "Hypotheses JSONL with id and text fields")
      ->required();
  errorReport->add_option("--sample", *erSample,
                          "Review sample size per dialect");
  errorReport->add_option("--cer-threshold", erCfg->highCerThreshold,
                          "CER above this flags an utterance");
  errorReport->add_option("--max-ngram", erCfg->maxNgram,
                          "Longest token block checked for repetition");
  errorReport->add_option("--min-repeats", erCfg->minRepeats,
                          "Consecutive block count that flags repetition");
  errorReport->add_option("--min-lexicon-rate", erCfg->minLexiconRate,
                          "In-lexicon token rate below this flags gibberish");
  errorReport->add_option("--length-ratio", erCfg->lengthRatio,
                          "Hypothesis to reference token ratio for truncation");
  errorReport->add_option("--prefix-error", erCfg->prefixErrorRate,
                          "Best prefix error rate for truncation");
  errorReport->callback([&, erManifest, erHyps, erSample, erCfg] {
    const std::string &outDir = NeedOut(g);
    saveMeta(outDir, "error-report");
    ErrorReport report =
        BuildErrorReport(ReadCorpus(*erManifest), ReadHyps(*erHyps),
                         static_cast<size_t>(*erSample), g.seed, *erCfg);
    WriteErrorReport(outDir, report);
    EchoFile(InDir(outDir, "report.tsv"));
  });

  // pipeline: the full corpus to evaluation chain with stage reuse.
  CLI::App *pipeline = cmd("pipeline", "Run the end-to-end pipeline");
  auto ppSynth = std::make_shared<SynthFlags>();
  ppSynth->utterances = 5000;
  auto ppDevCount = std::make_shared<int>(500);
  auto ppDModel = std::make_shared<int>(32);
  auto ppHeads = std::make_shared<int>(4);
  auto ppFfn = std::make_shared<int>(64);
  auto ppMaxSrc = std::make_shared<int>(64);
  auto ppMaxTgt = std::make_shared<int>(16);
  auto ppTeacherEnc = std::make_shared<int>(4);
  auto ppTeacherDec = std::make_shared<int>(4);
  auto ppTargetWer = std::make_shared<double>(10.0);
  auto ppTeacherMaxEpochs = std::make_shared<int>(40);
  auto ppTeacherLr = std::make_shared<double>(8e-3);
  auto ppTeacherBatch = std::make_shared<int>(16);
  auto ppTeacherWarmup = std::make_shared<int>(30);
  auto ppStudent = std::make_shared<TrainFlags>();
  ppStudent->lr = 5e-3;
  ppStudent->warmup = 30;
  auto ppEnc = std::make_shared<int>(2);
  auto ppDec = std::make_shared<int>(2);
  auto ppLambda = std::make_shared<std::string>("80");
  AddSynthFlags(pipeline, ppSynth.get());
  pipeline->add_option("--dev-count", *ppDevCount, "Dev utterances to hold out");
  pipeline->add_option("--d-model", *ppDModel, "Model width");
  pipeline->add_option("--heads", *ppHeads, "Attention heads");
  pipeline->add_option("--ffn", *ppFfn, "Feed-forward width");
  pipeline->add_option("--max-source-len", *ppMaxSrc, "Frame count limit");
  pipeline->add_option("--max-target-len", *ppMaxTgt,
                       "Token count limit including the end marker");
  pipeline->add_option("--teacher-enc-layers", *ppTeacherEnc,
                       "Teacher encoder layers");
  pipeline->add_option("--teacher-dec-layers", *ppTeacherDec,
                       "Teacher decoder layers");
  pipeline->add_option("--target-wer", *ppTargetWer, "Teacher dev WER target");
  pipeline->add_option("--teacher-max-epochs", *ppTeacherMaxEpochs,
                       "Teacher epoch budget");
  pipeline->add_option("--teacher-lr", *ppTeacherLr, "Teacher learning rate");
  pipeline->add_option("--teacher-batch", *ppTeacherBatch, "Teacher batch size");
  pipeline->add_option("--teacher-warmup", *ppTeacherWarmup,
                       "Teacher warmup steps");
  AddTrainFlags(pipeline, ppStudent.get());
  AddDistillWeights(pipeline, ppStudent.get());
  pipeline->add_option("--enc-layers", *ppEnc, "Student encoder layers");
  pipeline->add_option("--dec-layers", *ppDec, "Student decoder layers");
  pipeline->add_option("--lambda", *ppLambda,
                       "Retention threshold, or 'none' to keep all decoded");
  pipeline->callback([&, ppSynth, ppDevCount, ppDModel, ppHeads, ppFfn,
                      ppMaxSrc, ppMaxTgt, ppTeacherEnc, ppTeacherDec,
                      ppTargetWer, ppTeacherMaxEpochs, ppTeacherLr,
                      ppTeacherBatch, ppTeacherWarmup, ppStudent, ppEnc, ppDec,
                      ppLambda] {
    PipelineConfig pc;
    pc.outDir = NeedOut(g);
    pc.seed = g.seed;
    pc.threads = g.threads;
    pc.synth = ToSynthConfig(*ppSynth, g.seed);
    pc.devCount = *ppDevCount;
    ShapeFlags teacherShape;
    teacherShape.dModel = *ppDModel;
    teacherShape.heads = *ppHeads;
    teacherShape.encLayers = *ppTeacherEnc;
    teacherShape.decLayers = *ppTeacherDec;
    teacherShape.ffn = *ppFfn;
    teacherShape.frameDim = ppSynth->frameDim;
    teacherShape.maxSourceLen = *ppMaxSrc;
    teacherShape.maxTargetLen = *ppMaxTgt;
    pc.teacher = ToModelConfig(teacherShape, {});
    TrainFlags teacherTrain;
    teacherTrain.lr = *ppTeacherLr;
    teacherTrain.batch = *ppTeacherBatch;
    teacherTrain.warmup = *ppTeacherWarmup;
    pc.teacherTrain = ToTrainOptions(teacherTrain, g);
    pc.teacherTargetWer = *ppTargetWer;
    pc.teacherMaxEpochs = *ppTeacherMaxEpochs;
    pc.studentEncoderLayers = *ppEnc;
    pc.studentDecoderLayers = *ppDec;
    pc.studentTrain = ToTrainOptions(*ppStudent, g);
    pc.lambda = ParseLambda(*ppLambda);
    PipelineResult result = RunPipeline(pc);
    std::cout << "stage\tdirectory\tstatus\n";
    for (const StageResult &s : result.stages)
      std::cout << s.name << "\t" << s.dir << "\t"
                << (s.skipped ? "skipped" : "built") << "\n";
    std::cout << "teacher_dev_wer\t" << Fmt(result.teacherDevWer, 4) << "\n";
    std::cout << "retained_fraction\t" << Fmt(result.retainedFraction, 6)
              << "\n";
    std::cout << "student_dev_wer\t" << Fmt(result.studentDev.wer, 4) << "\n";
    std::cout << "student_dev_cer\t" << Fmt(result.studentDev.cer, 4) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
