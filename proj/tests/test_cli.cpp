// tests/test_cli.cpp
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

// End-to-end checks of the command-line binary.  Every case shells out to
// the real executable and inspects exit codes, stdout, stderr and the
// artifacts left on disk.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "seqkd/data.hpp"
#include "seqkd/model.hpp"

namespace {

namespace fs = std::filesystem;
using namespace seqkd;

const fs::path kRoot = fs::temp_directory_path() / "seqkd_cli_tests";

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

CmdResult Run(const std::string &args) {
  static int counter = 0;
  fs::create_directories(kRoot);
  fs::path out = kRoot / ("cmd-" + std::to_string(counter) + ".out");
  fs::path err = kRoot / ("cmd-" + std::to_string(counter) + ".err");
  ++counter;
  std::string cmd = std::string(SEQKD_CLI_PATH) + " " + args + " > " +
                    out.string() + " 2> " + err.string();
  int rc = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

fs::path Fresh(const std::string &name) {
  fs::path dir = kRoot / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool Contains(const std::string &hay, const std::string &needle) {
  return hay.find(needle) != std::string::npos;
}

std::string GenArgs(const fs::path &dir, int utterances, int seed) {
  return "gen-corpus --out " + dir.string() + " --manifest " +
         (dir / "c.jsonl").string() + " --utterances " +
         std::to_string(utterances) +
         " --min-words 1 --max-words 1 --min-word-len 2 --max-word-len 3"
         " --frame-dim 6 --noise-std 0.05 --alphabet 'سلما' --seed " +
         std::to_string(seed);
}

const char kTinyShape[] =
    " --d-model 8 --heads 2 --enc-layers 2 --dec-layers 2 --ffn 16"
    " --frame-dim 6 --max-source-len 40 --max-target-len 8";

}  // namespace

TEST_CASE("cli help lists every subcommand and rejects junk") {
  CmdResult help = Run("--help");
  CHECK(help.code == 0);
  for (const char *name :
       {"gen-corpus", "stats", "normalize", "score", "train-teacher",
        "pseudolabel", "filter", "init-student", "distill", "evaluate",
        "sweep", "scale", "error-report", "pipeline"})
    CHECK_MESSAGE(Contains(help.out, name), name);
  CHECK(Run("gen-corpus --help").code == 0);
  CHECK(Run("bogus").code != 0);
  CHECK(Run("").code != 0);
}

TEST_CASE("gen-corpus writes deterministic artifacts and run metadata") {
  fs::path a = Fresh("gen-a");
  fs::path b = Fresh("gen-b");
  CmdResult ra = Run(GenArgs(a, 12, 5));
  CmdResult rb = Run(GenArgs(b, 12, 5));
  CHECK(ra.code == 0);
  CHECK(rb.code == 0);
  CHECK(Slurp(a / "c.jsonl") == Slurp(b / "c.jsonl"));
  CHECK(Slurp(a / "c.frames") == Slurp(b / "c.frames"));
  CHECK(ReadCorpus((a / "c.jsonl").string()).size() == 12);

  std::string meta = Slurp(a / "run.meta");
  CHECK(Contains(meta, "seqkd 1.0.0"));
  CHECK(Contains(meta, "gen-corpus"));
  CHECK(Contains(meta, "utterances=12"));

  CmdResult st = Run("stats --manifest " + (a / "c.jsonl").string());
  CHECK(st.code == 0);
  CHECK(st.out == ra.out);
  CHECK(Contains(st.out, "TOTAL\t12\t"));
}

TEST_CASE("normalize covers flags files stdin modes and rule dumps") {
  CmdResult nd = Run("normalize --text 'مَدْرَسَة'");
  CHECK(nd.code == 0);
  CHECK(nd.out == "مدرسة\n");
  CmdResult ortho = Run("normalize --mode orthographic --text 'مَدْرَسَة'");
  CHECK(ortho.out == "مَدْرَسَة\n");

  fs::path dir = Fresh("norm");
  {
    std::ofstream os(dir / "lines.txt", std::ios::binary);
    os << "مَدْرَسَة\n" << "١٢٣\n";
  }
  CmdResult file = Run("normalize --in " + (dir / "lines.txt").string());
  CHECK(file.out == "مدرسة\n123\n");

  CmdResult rules =
      Run("normalize --dump-rules " + (dir / "rules.tsv").string());
  CHECK(rules.code == 0);
  CHECK(Contains(Slurp(dir / "rules.tsv"), "rule\tfirst\tlast\taction"));

  CmdResult bad = Run("normalize --mode shouty --text 'x'");
  CHECK(bad.code == 1);
  CHECK(Contains(bad.err, "error:"));
}

TEST_CASE("score handles single pairs and whole manifests") {
  CmdResult pair = Run("score --ref 'سلم على الدار' --hyp 'سلم في الدار'");
  CHECK(pair.code == 0);
  CHECK(Contains(pair.out, "wer\t33.3333"));

  fs::path dir = Fresh("score");
  REQUIRE(Run(GenArgs(dir, 5, 7)).code == 0);
  Corpus corpus = ReadCorpus((dir / "c.jsonl").string());
  {
    std::ofstream os(dir / "hyps.jsonl", std::ios::binary);
    for (size_t i = 0; i < corpus.size(); ++i) {
      nlohmann::ordered_json j;
      j["id"] = corpus[i].id;
      j["text"] = i == 0 ? corpus[i].reference + " خطا" : corpus[i].reference;
      os << j.dump() << "\n";
    }
  }
  fs::path outDir = dir / "scored";
  CmdResult sc = Run("score --manifest " + (dir / "c.jsonl").string() +
                     " --hyps " + (dir / "hyps.jsonl").string() + " --out " +
                     outDir.string());
  CHECK(sc.code == 0);
  // One inserted word across five single-word references.
  CHECK(Contains(sc.out, "OVERALL\t5\t0\t20.0000"));
  CHECK(Slurp(outDir / "scores.tsv") == sc.out);
  CHECK(fs::exists(outDir / "run.meta"));

  CmdResult mixed = Run("score --ref 'a' --manifest x.jsonl");
  CHECK(mixed.code == 1);
  CHECK(Contains(mixed.err, "error:"));
}

TEST_CASE("train-teacher honors both budget paths") {
  fs::path dir = Fresh("teacher");
  REQUIRE(Run(GenArgs(dir, 30, 4)).code == 0);
  std::string data = " --manifest " + (dir / "c.jsonl").string() +
                     " --dev-count 6 --seed 2" + kTinyShape;

  // A zero-epoch budget cannot reach the target but still saves the
  // initial checkpoint.
  fs::path zero = dir / "zero";
  CmdResult rz = Run("train-teacher --out " + zero.string() + data +
                     " --target-wer 1 --max-epochs 0");
  CHECK(rz.code == 1);
  CHECK(Contains(rz.err, "BudgetExhausted"));
  Model initial = Model::Load((zero / "model.ckpt").string());
  CHECK(initial.config().encoderLayers == 2);
  CHECK(fs::exists(zero / "run.meta"));

  fs::path fixed = dir / "fixed";
  CmdResult rf = Run("train-teacher --out " + fixed.string() + data +
                     " --epochs 4 --batch 8 --lr 1e-2 --warmup 10");
  CHECK(rf.code == 0);
  std::string epochs = Slurp(fixed / "epochs.tsv");
  CHECK(Contains(epochs, "epoch\ttrain_loss\tdev_wer\tdev_cer"));
  CHECK(Contains(epochs, "\n4\t"));
  CHECK(Contains(rf.out, "\n4\t"));
  CHECK(fs::exists(fixed / "steps.tsv"));
  Model trained = Model::Load((fixed / "model.ckpt").string());
  CHECK(trained.config().frameDim == 6);
}

TEST_CASE("the pseudolabel filter distill evaluate chain runs end to end") {
  fs::path dir = Fresh("chain");
  REQUIRE(Run(GenArgs(dir, 40, 4)).code == 0);
  fs::path teacher = dir / "teacher";
  REQUIRE(Run("train-teacher --out " + teacher.string() + " --manifest " +
              (dir / "c.jsonl").string() + " --dev-count 8 --seed 2" +
              kTinyShape +
              " --epochs 20 --batch 8 --lr 1e-2 --warmup 10")
              .code == 0);

  fs::path labels = dir / "labels";
  CmdResult pl = Run("pseudolabel --out " + labels.string() + " --model " +
                     (teacher / "model.ckpt").string() + " --manifest " +
                     (dir / "c.jsonl").string());
  CHECK(pl.code == 0);
  CHECK(Contains(pl.out, "total\tdecoded\tscored\n40\t"));

  fs::path filt = dir / "filt";
  CmdResult fl = Run("filter --out " + filt.string() + " --manifest " +
                     (dir / "c.jsonl").string() + " --labels " +
                     (labels / "labels.jsonl").string() + " --lambda none");
  CHECK(fl.code == 0);
  CHECK(Contains(fl.out, "lambda\ttotal\tretained\tretained_fraction\nnone\t40\t"));
  CHECK(Slurp(filt / "summary.tsv") == fl.out);

  fs::path sinit = dir / "sinit";
  CHECK(Run("init-student --out " + sinit.string() + " --teacher " +
            (teacher / "model.ckpt").string() +
            " --enc-layers 1 --dec-layers 1")
            .code == 0);
  Model student = Model::Load((sinit / "model.ckpt").string());
  CHECK(student.config().encoderLayers == 1);

  fs::path distilled = dir / "student";
  CmdResult ds = Run("distill --out " + distilled.string() + " --teacher " +
                     (teacher / "model.ckpt").string() + " --student " +
                     (sinit / "model.ckpt").string() + " --manifest " +
                     (filt / "retained.jsonl").string() +
                     " --dev-count 8 --seed 2 --epochs 2 --batch 8" +
                     " --lr 5e-3 --warmup 5");
  CHECK(ds.code == 0);
  CHECK(fs::exists(distilled / "model.ckpt"));

  CmdResult ev = Run("evaluate --model " +
                     (distilled / "model.ckpt").string() + " --manifest " +
                     (dir / "c.jsonl").string());
  CHECK(ev.code == 0);
  CHECK(Contains(ev.out, "OVERALL\t40\t"));

  fs::path er = dir / "er";
  CmdResult rep = Run("error-report --out " + er.string() + " --manifest " +
                      (dir / "c.jsonl").string() + " --hyps " +
                      (labels / "labels.jsonl").string() + " --sample 3");
  CHECK(rep.code == 0);
  CHECK(Contains(rep.out, "dialect\tutterances\tempty"));
  CHECK(Contains(Slurp(er / "report.tsv"), "base\t40\t"));
  CHECK(fs::exists(er / "flags.jsonl"));
  CHECK(fs::exists(er / "review.jsonl"));
}

TEST_CASE("pipeline reruns skip stages and corrupt stages are named") {
  fs::path dir = Fresh("pipe");
  std::string args =
      "pipeline --out " + dir.string() +
      " --seed 6 --utterances 80 --dev-count 16 --min-words 1 --max-words 1"
      " --min-word-len 2 --max-word-len 3 --frame-dim 6 --noise-std 0.05"
      " --alphabet 'سلما' --d-model 8 --heads 2 --ffn 16 --max-source-len 40"
      " --max-target-len 8 --teacher-enc-layers 2 --teacher-dec-layers 2"
      " --target-wer 45 --teacher-max-epochs 30 --teacher-lr 1e-2"
      " --teacher-warmup 10 --enc-layers 1 --dec-layers 1 --epochs 3"
      " --lambda 80";
  CmdResult first = Run(args);
  CHECK(first.code == 0);
  CHECK(Contains(first.out, "teacher_dev_wer"));
  CHECK(!Contains(first.out, "skipped"));
  CHECK(fs::exists(dir / "run.meta"));

  CmdResult again = Run(args);
  CHECK(again.code == 0);
  CHECK(!Contains(again.out, "built"));
  CHECK(again.out.substr(again.out.find("teacher_dev_wer")) ==
        first.out.substr(first.out.find("teacher_dev_wer")));

  // Breaking an upstream artifact surfaces as the rebuilding stage's error.
  fs::path corpusDir, teacherDir;
  for (const auto &entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("corpus-", 0) == 0) corpusDir = entry.path();
    if (name.rfind("teacher-", 0) == 0) teacherDir = entry.path();
  }
  REQUIRE(!corpusDir.empty());
  REQUIRE(!teacherDir.empty());
  fs::remove(teacherDir / "model.ckpt");
  {
    std::ofstream os(corpusDir / "train.jsonl", std::ios::binary);
    os << "not json\n";
  }
  CmdResult broken = Run(args);
  CHECK(broken.code == 1);
  CHECK(Contains(broken.err, "stage 'teacher'"));
}

TEST_CASE("config files fill flags the command line does not set") {
  fs::path dir = Fresh("cfg");
  {
    std::ofstream os(dir / "cfg.ini", std::ios::binary);
    os << "seed=5\n[gen-corpus]\nutterances=20\nnoise-std=0.05\n"
       << "min-words=1\nmax-words=1\nalphabet=\"سلما\"\nframe-dim=6\n";
  }
  std::string base = "gen-corpus --config " + (dir / "cfg.ini").string();

  CmdResult fromFile = Run(base + " --out " + (dir / "a").string());
  CHECK(fromFile.code == 0);
  CHECK(ReadCorpus((dir / "a" / "corpus.jsonl").string()).size() == 20);

  CmdResult overridden =
      Run(base + " --out " + (dir / "b").string() + " --utterances 10");
  CHECK(overridden.code == 0);
  CHECK(ReadCorpus((dir / "b" / "corpus.jsonl").string()).size() == 10);
}
