// src/pipeline.cpp
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

#include "seqkd/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "json.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/rng.hpp"
#include "seqkd/utf8.hpp"

namespace seqkd {
namespace {

namespace fs = std::filesystem;

std::string Fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

std::ofstream OpenOut(const std::string &path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  Require(os.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  return os;
}

std::string LambdaLabel(double lambda) {
  return lambda < 0.0 ? "none" : Fixed(lambda, 1);
}

}  // namespace

void WriteTrainLogs(const std::string &dir, const TrainLog &log) {
  {
    std::ofstream os = OpenOut((fs::path(dir) / "steps.tsv").string());
    os << "step\tlr\tkl\tpl\ttotal\n";
    for (const StepLog &s : log.steps)
      os << s.step << "\t" << Fixed(s.lr, 8) << "\t" << Fixed(s.loss.kl, 6)
         << "\t" << Fixed(s.loss.pl, 6) << "\t" << Fixed(s.loss.total, 6)
         << "\n";
  }
  std::ofstream os = OpenOut((fs::path(dir) / "epochs.tsv").string());
  os << "epoch\ttrain_loss\tdev_wer\tdev_cer\n";
  for (const EpochLog &e : log.epochs)
    os << e.epoch << "\t" << Fixed(e.trainLoss, 6) << "\t"
       << Fixed(e.devWer, 4) << "\t" << Fixed(e.devCer, 4) << "\n";
}

void WriteScoresTsv(std::ostream &os, const CorpusScore &score) {
  os << "dataset\tutterances\texcluded\twer\tcer\n";
  for (const auto &[name, ds] : score.perDataset) {
    ScorePair p = score.Pair(name);
    os << name << "\t" << ds.utterances << "\t" << ds.excluded << "\t"
       << Fixed(p.wer, 4) << "\t" << Fixed(p.cer, 4) << "\n";
  }
  int64_t utts = 0, excluded = 0;
  for (const auto &[name, ds] : score.perDataset) {
    utts += ds.utterances;
    excluded += ds.excluded;
  }
  ScorePair overall = score.Overall();
  os << "OVERALL\t" << utts << "\t" << excluded << "\t"
     << Fixed(overall.wer, 4) << "\t" << Fixed(overall.cer, 4) << "\n";
}

void WriteScoresTsv(const std::string &path, const CorpusScore &score) {
  std::ofstream os = OpenOut(path);
  WriteScoresTsv(os, score);
}

void WriteStatsTsv(std::ostream &os, const CorpusStats &stats) {
  os << "dataset\tutterances\twords\twords_per_utterance\tframes\thours_"
        "proxy\n";
  auto row = [&](const std::string &name, const DatasetStats &d) {
    os << name << "\t" << d.utterances << "\t" << d.words << "\t"
       << Fixed(d.WordsPerUtterance(), 2) << "\t" << d.frames << "\t"
       << Fixed(d.HoursProxy(), 6) << "\n";
  };
  for (const auto &[name, d] : stats.perDataset) row(name, d);
  row("TOTAL", stats.total);
}

void WriteStatsTsv(const std::string &path, const CorpusStats &stats) {
  std::ofstream os = OpenOut(path);
  WriteStatsTsv(os, stats);
}

void WriteSweepTsv(std::ostream &os, const std::vector<SweepPoint> &points) {
  os << "lambda\tretained_fraction\tdataset\twer\tcer\n";
  for (const SweepPoint &p : points) {
    for (const auto &[name, ds] : p.score.perDataset) {
      ScorePair pair = p.score.Pair(name);
      os << LambdaLabel(p.lambda) << "\t" << Fixed(p.retainedFraction, 6)
         << "\t" << name << "\t" << Fixed(pair.wer, 4) << "\t"
         << Fixed(pair.cer, 4) << "\n";
    }
    ScorePair overall = p.score.Overall();
    os << LambdaLabel(p.lambda) << "\t" << Fixed(p.retainedFraction, 6)
       << "\tOVERALL\t" << Fixed(overall.wer, 4) << "\t"
       << Fixed(overall.cer, 4) << "\n";
  }
}

void WriteSweepTsv(const std::string &path,
                   const std::vector<SweepPoint> &points) {
  std::ofstream os = OpenOut(path);
  WriteSweepTsv(os, points);
}

void WriteScaleTsv(std::ostream &os, const std::vector<ScalePoint> &points) {
  os << "size\thours_proxy\tdataset\twer\tcer\n";
  for (const ScalePoint &p : points) {
    for (const auto &[name, ds] : p.score.perDataset) {
      ScorePair pair = p.score.Pair(name);
      os << p.size << "\t" << Fixed(p.hoursProxy, 6) << "\t" << name << "\t"
         << Fixed(pair.wer, 4) << "\t" << Fixed(pair.cer, 4) << "\n";
    }
    ScorePair overall = p.score.Overall();
    os << p.size << "\t" << Fixed(p.hoursProxy, 6) << "\tOVERALL\t"
       << Fixed(overall.wer, 4) << "\t" << Fixed(overall.cer, 4) << "\n";
  }
}

void WriteScaleTsv(const std::string &path,
                   const std::vector<ScalePoint> &points) {
  std::ofstream os = OpenOut(path);
  WriteScaleTsv(os, points);
}

void WriteErrorReport(const std::string &dir, const ErrorReport &report) {
  {
    std::ofstream os = OpenOut((fs::path(dir) / "report.tsv").string());
    os << "dialect\tutterances";
    for (int i = 0; i < kFlagCount; ++i) {
      const char *name = FlagName(static_cast<Flag>(i));
      os << "\t" << name << "\t" << name << "_pct";
    }
    os << "\n";
    for (const auto &[dialect, row] : report.perDialect) {
      os << dialect << "\t" << row.utterances;
      for (int i = 0; i < kFlagCount; ++i)
        os << "\t" << row.counts[i] << "\t"
           << Fixed(row.Percent(static_cast<Flag>(i)), 2);
      os << "\n";
    }
  }
  {
    std::ofstream os = OpenOut((fs::path(dir) / "flags.jsonl").string());
    for (const FlaggedUtterance &fu : report.perUtterance) {
      nlohmann::ordered_json j;
      j["id"] = fu.id;
      j["dialect"] = fu.dialect;
      nlohmann::ordered_json flags = nlohmann::ordered_json::array();
      for (const ErrorFlag &f : fu.flags) {
        nlohmann::ordered_json e;
        e["category"] = FlagName(f.category);
        e["evidence"] = f.evidence;
        flags.push_back(e);
      }
      j["flags"] = flags;
      os << j.dump() << "\n";
    }
  }
  {
    std::ofstream os = OpenOut((fs::path(dir) / "review.jsonl").string());
    for (const auto &[dialect, ids] : report.reviewSamples)
      for (const std::string &id : ids) {
        nlohmann::ordered_json j;
        j["dialect"] = dialect;
        j["id"] = id;
        os << j.dump() << "\n";
      }
  }
  if (!report.excludedIds.empty()) {
    std::ofstream os = OpenOut((fs::path(dir) / "excluded.txt").string());
    for (const std::string &id : report.excludedIds) os << id << "\n";
  }
}

void WriteRunMeta(const std::string &path, const std::string &command,
                  const std::string &resolvedConfig) {
  nlohmann::ordered_json j;
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = resolvedConfig;
  std::ofstream os = OpenOut(path);
  os << j.dump(2) << "\n";
}

namespace {

nlohmann::json SynthJson(const SynthConfig &c) {
  nlohmann::json j;
  j["utterances"] = c.utterances;
  j["min_words"] = c.minWords;
  j["max_words"] = c.maxWords;
  j["min_word_len"] = c.minWordLen;
  j["max_word_len"] = c.maxWordLen;
  j["frames_per_char"] = c.framesPerChar;
  j["frame_dim"] = c.frameDim;
  j["noise_std"] = c.noiseStd;
  j["seed"] = c.seed;
  j["embed_seed"] = c.embedSeed;
  j["dataset"] = c.dataset;
  j["dialect"] = c.dialect;
  j["id_prefix"] = c.idPrefix;
  j["alphabet"] = c.alphabet;
  nlohmann::json subs = nlohmann::json::array();
  for (const auto &[from, to] : c.substitution)
    subs.push_back({{"from", from}, {"to", to}});
  j["substitution"] = subs;
  return j;
}

nlohmann::json TrainJson(const TrainOptions &o) {
  nlohmann::json j;
  j["epochs"] = o.epochs;
  j["batch_size"] = o.batchSize;
  j["lr"] = o.lr;
  j["warmup_steps"] = o.warmupSteps;
  j["seed"] = o.seed;
  j["kl_weight"] = o.klWeight;
  j["pl_weight"] = o.plWeight;
  return j;
}

std::string Hash16(const nlohmann::json &j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(HashString(j.dump())));
  return buf;
}

}  // namespace

std::string PipelineConfig::ToJson() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["dev_count"] = devCount;
  j["synth"] = SynthJson(synth);
  j["teacher"] = nlohmann::json::parse(teacher.ToJson());
  j["teacher_train"] = TrainJson(teacherTrain);
  j["teacher_target_wer"] = teacherTargetWer;
  j["teacher_max_epochs"] = teacherMaxEpochs;
  j["student_encoder_layers"] = studentEncoderLayers;
  j["student_decoder_layers"] = studentDecoderLayers;
  j["student_train"] = TrainJson(studentTrain);
  j["lambda"] = lambda;
  return j.dump();
}

PipelineResult RunPipeline(const PipelineConfig &cfg) {
  Require(!cfg.outDir.empty(), ErrorCode::kInvalidConfig,
          "the pipeline needs an output directory");
  fs::create_directories(cfg.outDir);
  PipelineResult result;

  auto stage = [&](const std::string &name, const nlohmann::json &identity,
                   const std::vector<std::string> &artifacts,
                   const std::function<void(const fs::path &)> &build)
      -> fs::path {
    fs::path dir = fs::path(cfg.outDir) / (name + "-" + Hash16(identity));
    bool done = true;
    for (const std::string &a : artifacts) done &= fs::exists(dir / a);
    if (!done) {
      try {
        fs::create_directories(dir);
        build(dir);
      } catch (const Error &e) {
        Fail(ErrorCode::kStageFailed,
             "stage '" + name + "': " + e.what());
      }
    }
    result.stages.push_back({name, dir.string(), done});
    return dir;
  };

  // Corpus: one synthetic pool split into train and dev.
  nlohmann::json corpusId;
  corpusId["synth"] = SynthJson(cfg.synth);
  corpusId["dev_count"] = cfg.devCount;
  corpusId["seed"] = cfg.seed;
  fs::path corpusDir = stage(
      "corpus", corpusId, {"train.jsonl", "train.frames", "dev.jsonl", "dev.frames"},
      [&](const fs::path &dir) {
        Corpus pool = SynthesizeCorpus(cfg.synth);
        auto [train, dev] =
            SplitTrainDev(pool, static_cast<size_t>(cfg.devCount), cfg.seed);
        WriteCorpus((dir / "train.jsonl").string(), train);
        WriteCorpus((dir / "dev.jsonl").string(), dev);
      });

  // Teacher: supervised training to the WER target.
  nlohmann::json teacherId;
  teacherId["corpus"] = Hash16(corpusId);
  teacherId["model"] = nlohmann::json::parse(cfg.teacher.ToJson());
  teacherId["train"] = TrainJson(cfg.teacherTrain);
  teacherId["target_wer"] = cfg.teacherTargetWer;
  teacherId["max_epochs"] = cfg.teacherMaxEpochs;
  fs::path teacherDir = stage(
      "teacher", teacherId, {"model.ckpt", "epochs.tsv"},
      [&](const fs::path &dir) {
        Corpus train = ReadCorpus((corpusDir / "train.jsonl").string());
        Corpus dev = ReadCorpus((corpusDir / "dev.jsonl").string());
        ModelConfig mc = cfg.teacher;
        std::set<uint32_t> cps;
        for (const Utterance &u : train)
          for (char32_t cp : Utf8Decode(u.reference))
            cps.insert(static_cast<uint32_t>(cp));
        mc.vocabCodepoints.assign(cps.begin(), cps.end());
        Model teacher(mc);
        teacher.InitRandom(cfg.seed);
        TrainOptions opts = cfg.teacherTrain;
        opts.threads = cfg.threads;
        Trainer trainer(&teacher, opts);
        TrainLog log;
        try {
          log = trainer.FitToWer(train, dev, cfg.teacherTargetWer,
                                 cfg.teacherMaxEpochs);
        } catch (const Error &) {
          // Keep the best checkpoint even when the target is unmet.
          teacher.Save((dir / "model.ckpt").string());
          throw;
        }
        teacher.Save((dir / "model.ckpt").string());
        WriteTrainLogs(dir.string(), log);
      });

  // Pseudo labels from the teacher over the training pool.
  nlohmann::json labelsId;
  labelsId["teacher"] = Hash16(teacherId);
  fs::path labelsDir = stage(
      "labels", labelsId, {"labels.jsonl"}, [&](const fs::path &dir) {
        Model teacher = Model::Load((teacherDir / "model.ckpt").string());
        Corpus train = ReadCorpus((corpusDir / "train.jsonl").string());
        PseudoLabels labels = PseudoLabelCorpus(teacher, train, cfg.threads);
        WritePseudoLabels((dir / "labels.jsonl").string(), labels);
      });

  // Filtering swaps references for retained pseudo labels.
  nlohmann::json filterId;
  filterId["labels"] = Hash16(labelsId);
  filterId["lambda"] = cfg.lambda;
  fs::path filterDir = stage(
      "filter", filterId, {"retained.jsonl", "retained.frames", "summary.tsv"},
      [&](const fs::path &dir) {
        Corpus train = ReadCorpus((corpusDir / "train.jsonl").string());
        PseudoLabels labels =
            ReadPseudoLabels((labelsDir / "labels.jsonl").string());
        FilterOutcome f = FilterByWer(train, labels, cfg.lambda);
        WriteCorpus((dir / "retained.jsonl").string(), f.retained);
        std::ofstream os = OpenOut((dir / "summary.tsv").string());
        os << "lambda\ttotal\tretained\tretained_fraction\n";
        os << LambdaLabel(cfg.lambda) << "\t" << f.total << "\t"
           << f.retainedCount << "\t" << Fixed(f.RetainedFraction(), 6)
           << "\n";
      });

  // Student initialized from evenly spaced teacher blocks.
  nlohmann::json initId;
  initId["teacher"] = Hash16(teacherId);
  initId["encoder_layers"] = cfg.studentEncoderLayers;
  initId["decoder_layers"] = cfg.studentDecoderLayers;
  fs::path initDir = stage(
      "student-init", initId, {"model.ckpt"}, [&](const fs::path &dir) {
        Model teacher = Model::Load((teacherDir / "model.ckpt").string());
        Model student = InitStudent(teacher, cfg.studentEncoderLayers,
                                    cfg.studentDecoderLayers);
        student.Save((dir / "model.ckpt").string());
      });

  // Distillation of the student on the filtered pseudo labels.
  nlohmann::json distillId;
  distillId["init"] = Hash16(initId);
  distillId["filter"] = Hash16(filterId);
  distillId["train"] = TrainJson(cfg.studentTrain);
  fs::path distillDir = stage(
      "student", distillId, {"model.ckpt", "epochs.tsv"},
      [&](const fs::path &dir) {
        Model teacher = Model::Load((teacherDir / "model.ckpt").string());
        Model student = Model::Load((initDir / "model.ckpt").string());
        Corpus train = ReadCorpus((filterDir / "retained.jsonl").string());
        Corpus dev = ReadCorpus((corpusDir / "dev.jsonl").string());
        TrainOptions opts = cfg.studentTrain;
        opts.threads = cfg.threads;
        Trainer trainer(&student, opts);
        TrainLog log = trainer.Distill(teacher, train, dev);
        student.Save((dir / "model.ckpt").string());
        WriteTrainLogs(dir.string(), log);
      });

  // Final scores for the distilled student on the dev split.
  nlohmann::json evalId;
  evalId["student"] = Hash16(distillId);
  fs::path evalDir = stage(
      "eval", evalId, {"scores.tsv"}, [&](const fs::path &dir) {
        Model student = Model::Load((distillDir / "model.ckpt").string());
        Corpus dev = ReadCorpus((corpusDir / "dev.jsonl").string());
        CorpusScore score = EvaluateModel(
            student, dev, NormMode::kNormalizedNoDiacritics, cfg.threads);
        WriteScoresTsv((dir / "scores.tsv").string(), score);
      });

  // Summary numbers for the caller, loaded back from the artifacts so a
  // fully skipped rerun reports the same values.
  try {
    {
      std::ifstream is((teacherDir / "epochs.tsv").string());
      Require(is.good(), ErrorCode::kIoError, "teacher log unreadable");
      std::string line, last;
      std::getline(is, line);  // header
      while (std::getline(is, line))
        if (!line.empty()) last = line;
      size_t tab = last.rfind('\t');
      size_t prev = last.rfind('\t', tab - 1);
      result.teacherDevWer = std::stod(last.substr(prev + 1, tab - prev - 1));
    }
    {
      std::ifstream is((filterDir / "summary.tsv").string());
      Require(is.good(), ErrorCode::kIoError, "filter summary unreadable");
      std::string line;
      std::getline(is, line);
      std::getline(is, line);
      result.retainedFraction = std::stod(line.substr(line.rfind('\t') + 1));
    }
    {
      std::ifstream is((evalDir / "scores.tsv").string());
      Require(is.good(), ErrorCode::kIoError, "scores unreadable");
      std::string line;
      bool found = false;
      while (std::getline(is, line)) {
        if (line.rfind("OVERALL\t", 0) != 0) continue;
        size_t tab = line.rfind('\t');
        size_t prev = line.rfind('\t', tab - 1);
        result.studentDev.cer = std::stod(line.substr(tab + 1));
        result.studentDev.wer = std::stod(line.substr(prev + 1, tab - prev - 1));
        found = true;
      }
      Require(found, ErrorCode::kSchemaViolation, "no OVERALL score row");
    }
  } catch (const Error &e) {
    Fail(ErrorCode::kStageFailed, std::string("stage 'summary': ") + e.what());
  }

  WriteRunMeta((fs::path(cfg.outDir) / "run.meta").string(), "pipeline",
               cfg.ToJson());
  return result;
}

}  // namespace seqkd
