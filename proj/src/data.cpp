// src/data.cpp
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

#include "seqkd/data.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/rng.hpp"
#include "seqkd/tensorio.hpp"
#include "seqkd/textnorm.hpp"
#include "seqkd/utf8.hpp"

namespace seqkd {
namespace {

namespace fs = std::filesystem;

std::string SidecarName(const std::string &manifestPath) {
  fs::path p(manifestPath);
  p.replace_extension(".frames");
  return p.filename().string();
}

nlohmann::json FramesToJson(const Eigen::MatrixXf &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXf FramesFromJson(const nlohmann::json &rows) {
  Require(rows.is_array() && !rows.empty(), ErrorCode::kSchemaViolation,
          "inline frames must be a non-empty array of rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXf m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto &row = rows.at(static_cast<size_t>(i));
    Require(row.is_array() && static_cast<Eigen::Index>(row.size()) == c,
            ErrorCode::kSchemaViolation, "ragged inline frames");
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = row.at(static_cast<size_t>(j)).get<float>();
  }
  return m;
}

}  // namespace

void WriteCorpus(const std::string &manifestPath, const Corpus &corpus,
                 bool inlineFrames) {
  std::ofstream os(manifestPath, std::ios::binary);
  Require(os.good(), ErrorCode::kIoError, "cannot open '" + manifestPath + "'");
  std::string sidecar = SidecarName(manifestPath);
  for (const Utterance &u : corpus) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["reference"] = u.reference;
    j["dialect"] = u.dialect;
    j["dataset"] = u.dataset;
    if (inlineFrames)
      j["frames"] = FramesToJson(u.frames);
    else
      j["frames_path"] = sidecar;
    os << j.dump() << "\n";
  }
  Require(os.good(), ErrorCode::kIoError, "write failed to '" + manifestPath + "'");
  if (!inlineFrames) {
    std::vector<std::pair<std::string, Eigen::MatrixXf>> recs;
    recs.reserve(corpus.size());
    for (const Utterance &u : corpus) recs.push_back({u.id, u.frames});
    WriteFramesFile((fs::path(manifestPath).parent_path() / sidecar).string(),
                    recs);
  }
}

Corpus ReadCorpus(const std::string &manifestPath) {
  std::ifstream is(manifestPath, std::ios::binary);
  Require(is.good(), ErrorCode::kIoError, "cannot open '" + manifestPath + "'");
  fs::path dir = fs::path(manifestPath).parent_path();
  Corpus corpus;
  std::set<std::string> ids;
  std::map<std::string, std::map<std::string, Eigen::MatrixXf>> sidecars;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = manifestPath + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      Fail(ErrorCode::kSchemaViolation, where + ": " + e.what());
    }
    Utterance u;
    try {
      u.id = j.at("id").get<std::string>();
      u.reference = j.at("reference").get<std::string>();
      u.dialect = j.at("dialect").get<std::string>();
      u.dataset = j.at("dataset").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
      Fail(ErrorCode::kSchemaViolation, where + ": " + e.what());
    }
    Require(ids.insert(u.id).second, ErrorCode::kDuplicateId,
            where + ": duplicate utterance id '" + u.id + "'");
    if (j.contains("frames")) {
      u.frames = FramesFromJson(j["frames"]);
    } else if (j.contains("frames_path")) {
      std::string rel = j["frames_path"].get<std::string>();
      std::string full = (dir / rel).string();
      auto it = sidecars.find(full);
      if (it == sidecars.end())
        it = sidecars.emplace(full, ReadFramesFile(full)).first;
      auto rec = it->second.find(u.id);
      Require(rec != it->second.end(), ErrorCode::kSchemaViolation,
              where + ": no frames for '" + u.id + "' in " + rel);
      u.frames = rec->second;
    } else {
      Fail(ErrorCode::kSchemaViolation,
           where + ": needs either frames or frames_path");
    }
    corpus.push_back(std::move(u));
  }
  return corpus;
}

std::vector<uint32_t> SynthVocab(const SynthConfig &cfg) {
  std::set<uint32_t> cps = {0x20};
  for (uint32_t a : cfg.alphabet) {
    auto it = cfg.substitution.find(a);
    cps.insert(it == cfg.substitution.end() ? a : it->second);
  }
  return {cps.begin(), cps.end()};
}

Corpus SynthesizeCorpus(const SynthConfig &cfg) {
  Require(!cfg.alphabet.empty(), ErrorCode::kInvalidConfig,
          "synthesis needs an alphabet");
  Require(cfg.utterances >= 1 && cfg.minWords >= 1 &&
              cfg.maxWords >= cfg.minWords && cfg.minWordLen >= 1 &&
              cfg.maxWordLen >= cfg.minWordLen && cfg.framesPerChar >= 1 &&
              cfg.frameDim >= 1 && cfg.noiseStd >= 0.0,
          ErrorCode::kInvalidConfig, "bad synthesis settings");

  // Per-character base embeddings keyed by codepoint so every corpus that
  // shares embedSeed maps a character to the same point.
  auto charEmbedding = [&](uint32_t cp) {
    char tag[32];
    std::snprintf(tag, sizeof(tag), "char-embed-%X", cp);
    Rng r = Rng::Stream(cfg.embedSeed, tag);
    Eigen::VectorXf e(cfg.frameDim);
    for (int i = 0; i < cfg.frameDim; ++i)
      e(i) = static_cast<float>(r.Normal(0.0, 1.0));
    return e;
  };
  std::map<uint32_t, Eigen::VectorXf> embeds;
  embeds[0x20] = charEmbedding(0x20);
  for (uint32_t a : cfg.alphabet) {
    auto it = cfg.substitution.find(a);
    uint32_t cp = it == cfg.substitution.end() ? a : it->second;
    if (!embeds.count(cp)) embeds[cp] = charEmbedding(cp);
  }

  Rng text = Rng::Stream(cfg.seed, "synth-text");
  Rng noise = Rng::Stream(cfg.seed, "synth-noise");
  std::string prefix = cfg.idPrefix.empty() ? cfg.dataset : cfg.idPrefix;

  Corpus corpus;
  corpus.reserve(static_cast<size_t>(cfg.utterances));
  for (int n = 0; n < cfg.utterances; ++n) {
    std::vector<char32_t> cps;
    int words = static_cast<int>(text.Between(cfg.minWords, cfg.maxWords));
    for (int w = 0; w < words; ++w) {
      if (w) cps.push_back(U' ');
      int len = static_cast<int>(text.Between(cfg.minWordLen, cfg.maxWordLen));
      for (int k = 0; k < len; ++k) {
        uint32_t cp = cfg.alphabet[text.Below(cfg.alphabet.size())];
        auto it = cfg.substitution.find(cp);
        cps.push_back(it == cfg.substitution.end() ? cp : it->second);
      }
    }
    Utterance u;
    char idbuf[64];
    std::snprintf(idbuf, sizeof(idbuf), "%s-%06d", prefix.c_str(), n);
    u.id = idbuf;
    u.reference = Utf8Encode(cps);
    u.dialect = cfg.dialect;
    u.dataset = cfg.dataset;
    u.frames.resize(static_cast<Eigen::Index>(cps.size()) * cfg.framesPerChar,
                    cfg.frameDim);
    Eigen::Index row = 0;
    for (char32_t cp : cps) {
      const Eigen::VectorXf &e = embeds.at(static_cast<uint32_t>(cp));
      for (int k = 0; k < cfg.framesPerChar; ++k, ++row)
        for (int d = 0; d < cfg.frameDim; ++d)
          u.frames(row, d) =
              e(d) + static_cast<float>(noise.Normal(0.0, cfg.noiseStd));
    }
    corpus.push_back(std::move(u));
  }
  return corpus;
}

CorpusStats ComputeStats(const Corpus &corpus) {
  CorpusStats stats;
  for (const Utterance &u : corpus) {
    int64_t words = static_cast<int64_t>(
        Tokenize(Normalize(u.reference, NormMode::kOrthographic)).size());
    for (DatasetStats *d : {&stats.perDataset[u.dataset], &stats.total}) {
      d->utterances += 1;
      d->words += words;
      d->frames += u.frames.rows();
    }
  }
  return stats;
}

Corpus SampleNested(const Corpus &corpus, size_t size, uint64_t seed) {
  Require(size <= corpus.size(), ErrorCode::kSizeExceedsCorpus,
          "sample of " + std::to_string(size) + " from " +
              std::to_string(corpus.size()) + " utterances");
  std::vector<size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::Stream(seed, "sample");
  rng.Shuffle(&idx);
  idx.resize(size);
  Corpus out;
  out.reserve(size);
  for (size_t i : idx) out.push_back(corpus[i]);
  return out;
}

std::pair<Corpus, Corpus> SplitTrainDev(const Corpus &corpus, size_t devCount,
                                        uint64_t seed) {
  Require(devCount <= corpus.size(), ErrorCode::kSizeExceedsCorpus,
          "dev split larger than the corpus");
  std::vector<size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::Stream(seed, "split");
  rng.Shuffle(&idx);
  std::vector<size_t> dev(idx.begin(), idx.begin() + devCount);
  std::vector<size_t> train(idx.begin() + devCount, idx.end());
  std::sort(dev.begin(), dev.end());
  std::sort(train.begin(), train.end());
  std::pair<Corpus, Corpus> out;
  for (size_t i : train) out.first.push_back(corpus[i]);
  for (size_t i : dev) out.second.push_back(corpus[i]);
  return out;
}

}  // namespace seqkd
