// src/model.cpp
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

#include "seqkd/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/rng.hpp"
#include "seqkd/tensorio.hpp"
#include "seqkd/utf8.hpp"

namespace seqkd {
namespace {

constexpr char kMagic[4] = {'D', 'F', 'K', 'D'};
constexpr uint32_t kVersion = 1;

std::string LayerPrefix(const char *side, int layer) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s.%02d.", side, layer);
  return buf;
}

void WriteU32(std::ostream &os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char *>(b), 4);
}

uint32_t ReadU32(std::istream &is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char *>(b), 4);
  Require(is.gcount() == 4, ErrorCode::kCorruptCheckpoint, "truncated header");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

void WriteU64(std::ostream &os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char *>(b), 8);
}

uint64_t ReadU64(std::istream &is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char *>(b), 8);
  Require(is.gcount() == 8, ErrorCode::kCorruptCheckpoint, "truncated header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

Mat SinusoidalPositions(int maxLen, int d) {
  Mat pe(maxLen, d);
  for (int p = 0; p < maxLen; ++p) {
    for (int i = 0; i < d; i += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(i) / d);
      pe(p, i) = std::sin(p * freq);
      if (i + 1 < d) pe(p, i + 1) = std::cos(p * freq);
    }
  }
  return pe;
}

}  // namespace

void ModelConfig::Validate() const {
  Require(dModel >= 2 && nHeads >= 1 && dModel % nHeads == 0,
          ErrorCode::kInvalidConfig, "model width must divide into heads");
  Require(encoderLayers >= 1 && encoderLayers <= 99 && decoderLayers >= 1 &&
              decoderLayers <= 99,
          ErrorCode::kInvalidConfig, "layer counts must be in [1, 99]");
  Require(ffnDim >= 1 && frameDim >= 1, ErrorCode::kInvalidConfig,
          "ffn and frame widths must be positive");
  Require(maxSourceLen >= 1 && maxTargetLen >= 2, ErrorCode::kInvalidConfig,
          "sequence length limits too small");
  Require(!vocabCodepoints.empty(), ErrorCode::kInvalidConfig,
          "empty vocabulary");
}

std::string ModelConfig::ToJson() const {
  nlohmann::json j;
  j["d_model"] = dModel;
  j["n_heads"] = nHeads;
  j["encoder_layers"] = encoderLayers;
  j["decoder_layers"] = decoderLayers;
  j["ffn_dim"] = ffnDim;
  j["frame_dim"] = frameDim;
  j["max_source_len"] = maxSourceLen;
  j["max_target_len"] = maxTargetLen;
  j["vocab"] = vocabCodepoints;
  return j.dump();
}

ModelConfig ModelConfig::FromJson(const std::string &json) {
  ModelConfig c;
  try {
    nlohmann::json j = nlohmann::json::parse(json);
    c.dModel = j.at("d_model").get<int>();
    c.nHeads = j.at("n_heads").get<int>();
    c.encoderLayers = j.at("encoder_layers").get<int>();
    c.decoderLayers = j.at("decoder_layers").get<int>();
    c.ffnDim = j.at("ffn_dim").get<int>();
    c.frameDim = j.at("frame_dim").get<int>();
    c.maxSourceLen = j.at("max_source_len").get<int>();
    c.maxTargetLen = j.at("max_target_len").get<int>();
    c.vocabCodepoints = j.at("vocab").get<std::vector<uint32_t>>();
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorCode::kSchemaViolation,
         std::string("bad model config: ") + e.what());
  }
  c.Validate();
  return c;
}

bool ModelConfig::SameShape(const ModelConfig &o) const {
  return dModel == o.dModel && nHeads == o.nHeads &&
         encoderLayers == o.encoderLayers && decoderLayers == o.decoderLayers &&
         ffnDim == o.ffnDim && frameDim == o.frameDim &&
         maxSourceLen == o.maxSourceLen && maxTargetLen == o.maxTargetLen &&
         vocabCodepoints == o.vocabCodepoints;
}

Vocab::Vocab(const std::vector<uint32_t> &codepoints)
    : codepoints_(codepoints) {
  for (size_t i = 0; i < codepoints_.size(); ++i) {
    Require(!ids_.count(codepoints_[i]), ErrorCode::kInvalidConfig,
            "duplicate codepoint in vocabulary");
    ids_[codepoints_[i]] = static_cast<int>(i) + 3;
  }
}

std::vector<int> Vocab::Encode(const std::string &text) const {
  std::vector<int> out;
  for (char32_t cp : Utf8Decode(text)) {
    auto it = ids_.find(static_cast<uint32_t>(cp));
    out.push_back(it == ids_.end() ? kUnk : it->second);
  }
  return out;
}

std::string Vocab::Decode(const std::vector<int> &tokens) const {
  std::string out;
  for (int t : tokens) {
    Require(t >= 0 && t < size(), ErrorCode::kTokenOutOfRange,
            "token id outside vocabulary");
    if (t == kBos || t == kEos) continue;
    if (t == kUnk) {
      Utf8Append(&out, 0xFFFD);
      continue;
    }
    Utf8Append(&out, codepoints_[static_cast<size_t>(t) - 3]);
  }
  return out;
}

int ParamStore::Add(const std::string &name, int rows, int cols) {
  Require(!index_.count(name), ErrorCode::kInvalidConfig,
          "duplicate parameter '" + name + "'");
  int id = Count();
  names_.push_back(name);
  master_.push_back(Eigen::MatrixXf::Zero(rows, cols));
  dense_.push_back(Mat::Zero(rows, cols));
  index_[name] = id;
  return id;
}

int ParamStore::Find(const std::string &name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Model::Model(ModelConfig cfg)
    : cfg_(std::move(cfg)), vocab_(cfg_.vocabCodepoints) {
  cfg_.Validate();
  const int d = cfg_.dModel, ffn = cfg_.ffnDim, v = vocab_.size();
  params_.Add("src_proj.w", cfg_.frameDim, d);
  params_.Add("src_proj.b", 1, d);
  params_.Add("tok_embed.w", v, d);
  // No key bias: softmax scores are invariant to a constant shift per
  // query row, so it would be a dead parameter.
  auto addAttn = [&](const std::string &p) {
    for (const char *m : {"q", "k", "v", "o"}) {
      params_.Add(p + ".w" + m, d, d);
      if (*m != 'k') params_.Add(p + ".b" + m, 1, d);
    }
  };
  auto addLn = [&](const std::string &p) {
    params_.Add(p + ".g", 1, d);
    params_.Add(p + ".b", 1, d);
  };
  auto addFfn = [&](const std::string &p) {
    params_.Add(p + ".w1", d, ffn);
    params_.Add(p + ".b1", 1, ffn);
    params_.Add(p + ".w2", ffn, d);
    params_.Add(p + ".b2", 1, d);
  };
  for (int i = 0; i < cfg_.encoderLayers; ++i) {
    std::string p = LayerPrefix("enc", i);
    addLn(p + "ln1");
    addAttn(p + "attn");
    addLn(p + "ln2");
    addFfn(p + "ffn");
  }
  addLn("enc_final");
  for (int i = 0; i < cfg_.decoderLayers; ++i) {
    std::string p = LayerPrefix("dec", i);
    addLn(p + "ln1");
    addAttn(p + "self");
    addLn(p + "ln2");
    addAttn(p + "cross");
    addLn(p + "ln3");
    addFfn(p + "ffn");
  }
  addLn("dec_final");
  params_.Add("out_proj.w", d, v);
  params_.Add("out_proj.b", 1, v);
  posenc_ = SinusoidalPositions(
      std::max(cfg_.maxSourceLen, cfg_.maxTargetLen) + 1, d);
}

void Model::InitRandom(uint64_t seed) {
  Rng rng = Rng::Stream(seed, "model-init");
  for (int id = 0; id < params_.Count(); ++id) {
    const std::string &name = params_.Name(id);
    Eigen::MatrixXf &m = params_.Master(id);
    if (name.ends_with(".g")) {
      m.setOnes();
      continue;
    }
    size_t dot = name.rfind('.');
    if (name[dot + 1] == 'b') {
      m.setZero();
      continue;
    }
    double stddev = name == "tok_embed.w"
                        ? 0.5
                        : 1.0 / std::sqrt(static_cast<double>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = static_cast<float>(rng.Normal(0.0, stddev));
  }
  params_.SyncAll();
}

void Model::CheckFrames(const Eigen::MatrixXf &frames) const {
  Require(frames.rows() >= 1, ErrorCode::kEmptyInput, "no input frames");
  Require(frames.cols() == cfg_.frameDim, ErrorCode::kIncompatibleConfig,
          "frame width does not match the model");
  Require(frames.rows() <= cfg_.maxSourceLen, ErrorCode::kSequenceTooLong,
          "more input frames than maxSourceLen");
}

void Model::CheckTargets(const std::vector<int> &targets) const {
  Require(static_cast<int>(targets.size()) + 1 <= cfg_.maxTargetLen,
          ErrorCode::kSequenceTooLong, "target exceeds maxTargetLen");
  for (int t : targets)
    Require(t >= 0 && t < vocab_.size(), ErrorCode::kTokenOutOfRange,
            "target token outside vocabulary");
}

int Model::BuildEncoder(Graph *g, const Eigen::MatrixXf &frames) const {
  CheckFrames(frames);
  const auto T = frames.rows();
  auto P = [&](const std::string &n) { return g->Param(params_.Find(n)); };
  int x = g->AddRow(g->MatMul(g->Input(frames.cast<double>()), P("src_proj.w")),
                    P("src_proj.b"));
  x = g->AddConst(x, posenc_.topRows(T));
  for (int i = 0; i < cfg_.encoderLayers; ++i) {
    std::string p = LayerPrefix("enc", i);
    int h = g->LayerNorm(x, P(p + "ln1.g"), P(p + "ln1.b"));
    int q = g->AddRow(g->MatMul(h, P(p + "attn.wq")), P(p + "attn.bq"));
    int k = g->MatMul(h, P(p + "attn.wk"));
    int v = g->AddRow(g->MatMul(h, P(p + "attn.wv")), P(p + "attn.bv"));
    int a = g->Attention(q, k, v, cfg_.nHeads, false);
    x = g->Add(x, g->AddRow(g->MatMul(a, P(p + "attn.wo")), P(p + "attn.bo")));
    int h2 = g->LayerNorm(x, P(p + "ln2.g"), P(p + "ln2.b"));
    int f = g->AddRow(g->MatMul(h2, P(p + "ffn.w1")), P(p + "ffn.b1"));
    f = g->AddRow(g->MatMul(g->Gelu(f), P(p + "ffn.w2")), P(p + "ffn.b2"));
    x = g->Add(x, f);
  }
  return g->LayerNorm(x, P("enc_final.g"), P("enc_final.b"));
}

int Model::BuildDecoder(Graph *g, int encOut,
                        const std::vector<int> &targets) const {
  CheckTargets(targets);
  auto P = [&](const std::string &n) { return g->Param(params_.Find(n)); };
  std::vector<int> ids;
  ids.reserve(targets.size() + 1);
  ids.push_back(Vocab::kBos);
  ids.insert(ids.end(), targets.begin(), targets.end());
  int x = g->EmbedRows(P("tok_embed.w"), ids);
  x = g->AddConst(x, posenc_.topRows(static_cast<Eigen::Index>(ids.size())));
  for (int i = 0; i < cfg_.decoderLayers; ++i) {
    std::string p = LayerPrefix("dec", i);
    int h = g->LayerNorm(x, P(p + "ln1.g"), P(p + "ln1.b"));
    int q = g->AddRow(g->MatMul(h, P(p + "self.wq")), P(p + "self.bq"));
    int k = g->MatMul(h, P(p + "self.wk"));
    int v = g->AddRow(g->MatMul(h, P(p + "self.wv")), P(p + "self.bv"));
    int a = g->Attention(q, k, v, cfg_.nHeads, true);
    x = g->Add(x, g->AddRow(g->MatMul(a, P(p + "self.wo")), P(p + "self.bo")));
    int h2 = g->LayerNorm(x, P(p + "ln2.g"), P(p + "ln2.b"));
    int q2 = g->AddRow(g->MatMul(h2, P(p + "cross.wq")), P(p + "cross.bq"));
    int k2 = g->MatMul(encOut, P(p + "cross.wk"));
    int v2 = g->AddRow(g->MatMul(encOut, P(p + "cross.wv")), P(p + "cross.bv"));
    int a2 = g->Attention(q2, k2, v2, cfg_.nHeads, false);
    x = g->Add(x,
               g->AddRow(g->MatMul(a2, P(p + "cross.wo")), P(p + "cross.bo")));
    int h3 = g->LayerNorm(x, P(p + "ln3.g"), P(p + "ln3.b"));
    int f = g->AddRow(g->MatMul(h3, P(p + "ffn.w1")), P(p + "ffn.b1"));
    f = g->AddRow(g->MatMul(g->Gelu(f), P(p + "ffn.w2")), P(p + "ffn.b2"));
    x = g->Add(x, f);
  }
  x = g->LayerNorm(x, P("dec_final.g"), P("dec_final.b"));
  return g->AddRow(g->MatMul(x, P("out_proj.w")), P("out_proj.b"));
}

int Model::BuildLogits(Graph *g, const Eigen::MatrixXf &frames,
                       const std::vector<int> &targets) const {
  return BuildDecoder(g, BuildEncoder(g, frames), targets);
}

Mat Model::EncoderOut(const Eigen::MatrixXf &frames) const {
  Graph g(&params_.Dense());
  return g.Value(BuildEncoder(&g, frames));
}

Mat Model::PredictProbs(const Eigen::MatrixXf &frames,
                        const std::vector<int> &targets) const {
  Graph g(&params_.Dense());
  return Graph::Softmax(g.Value(BuildLogits(&g, frames, targets)));
}

std::vector<int> Model::GreedyDecode(const Eigen::MatrixXf &frames) const {
  Mat enc = EncoderOut(frames);
  std::vector<int> toks;
  while (static_cast<int>(toks.size()) < cfg_.maxTargetLen - 1) {
    Graph g(&params_.Dense());
    int logits = BuildDecoder(&g, g.Input(enc), toks);
    const Mat &z = g.Value(logits);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < z.cols(); ++j)
      if (z(z.rows() - 1, j) > z(z.rows() - 1, best)) best = j;
    if (best == Vocab::kEos) break;
    toks.push_back(static_cast<int>(best));
  }
  return toks;
}

std::string Model::Transcribe(const Eigen::MatrixXf &frames) const {
  return vocab_.Decode(GreedyDecode(frames));
}

void Model::Save(const std::string &path) const {
  std::ofstream os(path, std::ios::binary);
  Require(os.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  os.write(kMagic, 4);
  WriteU32(os, kVersion);
  std::string json = cfg_.ToJson();
  WriteU64(os, json.size());
  os.write(json.data(), static_cast<std::streamsize>(json.size()));
  std::vector<std::string> names;
  for (int i = 0; i < params_.Count(); ++i) names.push_back(params_.Name(i));
  std::sort(names.begin(), names.end());
  for (const std::string &n : names)
    WriteRecord(os, MatrixRecord(n, params_.Master(params_.Find(n))));
  Require(os.good(), ErrorCode::kIoError, "write failed for '" + path + "'");
}

Model Model::Load(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  Require(is.gcount() == 4 && std::equal(magic, magic + 4, kMagic),
          ErrorCode::kCorruptCheckpoint, "bad magic in '" + path + "'");
  uint32_t version = ReadU32(is);
  Require(version == kVersion, ErrorCode::kVersionMismatch,
          "checkpoint version " + std::to_string(version) + " unsupported");
  uint64_t len = ReadU64(is);
  Require(len <= (1u << 20), ErrorCode::kCorruptCheckpoint,
          "implausible config length");
  std::string json(len, '\0');
  is.read(json.data(), static_cast<std::streamsize>(len));
  Require(static_cast<uint64_t>(is.gcount()) == len,
          ErrorCode::kCorruptCheckpoint, "truncated config");
  Model m(ModelConfig::FromJson(json));
  std::vector<std::string> names;
  for (int i = 0; i < m.params_.Count(); ++i)
    names.push_back(m.params_.Name(i));
  std::sort(names.begin(), names.end());
  for (const std::string &n : names) {
    TensorRecord rec = ReadRecord(is);
    Require(rec.name == n, ErrorCode::kCorruptCheckpoint,
            "unexpected tensor '" + rec.name + "', wanted '" + n + "'");
    Eigen::MatrixXf got = RecordMatrix(rec);
    Eigen::MatrixXf &dst = m.params_.Master(m.params_.Find(n));
    Require(got.rows() == dst.rows() && got.cols() == dst.cols(),
            ErrorCode::kCorruptCheckpoint, "shape mismatch for '" + n + "'");
    dst = got;
  }
  Require(is.peek() == std::istream::traits_type::eof(),
          ErrorCode::kCorruptCheckpoint, "trailing bytes in '" + path + "'");
  m.params_.SyncAll();
  return m;
}

std::vector<int> SelectLayers(int teacherLayers, int studentLayers) {
  Require(teacherLayers >= 1 && studentLayers >= 1, ErrorCode::kInvalidConfig,
          "layer counts must be positive");
  Require(studentLayers <= teacherLayers,
          ErrorCode::kStudentLargerThanTeacher,
          "student cannot keep more layers than the teacher has");
  std::vector<int> out;
  if (studentLayers == 1) return {0};
  for (int k = 0; k < studentLayers; ++k) {
    double x = static_cast<double>(k) * (teacherLayers - 1) /
               (studentLayers - 1);
    out.push_back(static_cast<int>(std::floor(x + 0.5)));
  }
  return out;
}

Model InitStudent(const Model &teacher, int encoderLayers, int decoderLayers) {
  std::vector<int> encSel =
      SelectLayers(teacher.config().encoderLayers, encoderLayers);
  std::vector<int> decSel =
      SelectLayers(teacher.config().decoderLayers, decoderLayers);
  ModelConfig cfg = teacher.config();
  cfg.encoderLayers = encoderLayers;
  cfg.decoderLayers = decoderLayers;
  Model student(cfg);
  ParamStore &sp = student.params();
  const ParamStore &tp = teacher.params();
  for (int id = 0; id < sp.Count(); ++id) {
    std::string name = sp.Name(id);
    if (name.rfind("enc.", 0) == 0 || name.rfind("dec.", 0) == 0) {
      bool enc = name[0] == 'e';
      int layer = std::stoi(name.substr(4, 2));
      int src = enc ? encSel[layer] : decSel[layer];
      name = name.substr(0, 4) + LayerPrefix(enc ? "enc" : "dec", src).substr(4) +
             name.substr(7);
    }
    int tid = tp.Find(name);
    Require(tid >= 0, ErrorCode::kIncompatibleConfig,
            "teacher is missing tensor '" + name + "'");
    sp.Master(id) = tp.Master(tid);
  }
  sp.SyncAll();
  return student;
}

Adam::Adam(ParamStore *params, double beta1, double beta2, double eps)
    : params_(params), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.resize(params_->Count());
  v_.resize(params_->Count());
  for (int i = 0; i < params_->Count(); ++i) {
    const Eigen::MatrixXf &p = params_->Master(i);
    m_[i] = Mat::Zero(p.rows(), p.cols());
    v_[i] = Mat::Zero(p.rows(), p.cols());
  }
}

void Adam::Step(const GradBuffer &grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (int i = 0; i < params_->Count(); ++i) {
    const Mat &g = grads.g[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat update =
        (lr * (m_[i] / bc1).array() / ((v_[i] / bc2).array().sqrt() + eps_))
            .matrix();
    params_->Master(i) =
        (params_->Master(i).cast<double>() - update).cast<float>();
    params_->Sync(i);
  }
}

double WarmupConstantLr(double base, int64_t step, int64_t warmupSteps) {
  if (warmupSteps <= 0 || step >= warmupSteps) return base;
  return base * static_cast<double>(step) / static_cast<double>(warmupSteps);
}

}  // namespace seqkd
