// include/seqkd/model.hpp
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

#ifndef SEQKD_MODEL_HPP_
#define SEQKD_MODEL_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqkd/autodiff.hpp"

namespace seqkd {

struct ModelConfig {
  int dModel = 64;
  int nHeads = 4;
  int encoderLayers = 2;
  int decoderLayers = 2;
  int ffnDim = 128;
  int frameDim = 16;
  int maxSourceLen = 512;
  int maxTargetLen = 64;
  std::vector<uint32_t> vocabCodepoints;

  void Validate() const;
  std::string ToJson() const;  // canonical: sorted keys, no whitespace
  static ModelConfig FromJson(const std::string &json);
  bool SameShape(const ModelConfig &o) const;
};

// Character inventory plus the control tokens.
class Vocab {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;

  explicit Vocab(const std::vector<uint32_t> &codepoints);

  int size() const { return static_cast<int>(codepoints_.size()) + 3; }
  std::vector<int> Encode(const std::string &text) const;
  std::string Decode(const std::vector<int> &tokens) const;

 private:
  std::vector<uint32_t> codepoints_;
  std::map<uint32_t, int> ids_;
};

// Parameters are stored float32 and mirrored as double for compute.
class ParamStore {
 public:
  int Add(const std::string &name, int rows, int cols);
  int Count() const { return static_cast<int>(names_.size()); }
  const std::string &Name(int id) const { return names_[id]; }
  int Find(const std::string &name) const;

  Eigen::MatrixXf &Master(int id) { return master_[id]; }
  const Eigen::MatrixXf &Master(int id) const { return master_[id]; }
  const std::vector<Mat> &Dense() const { return dense_; }

  void Sync(int id) { dense_[id] = master_[id].cast<double>(); }
  void SyncAll() {
    for (int i = 0; i < Count(); ++i) Sync(i);
  }

 private:
  std::vector<std::string> names_;
  std::vector<Eigen::MatrixXf> master_;
  std::vector<Mat> dense_;
  std::map<std::string, int> index_;
};

// Encoder-decoder transformer over continuous input frames: pre-norm
// blocks, sinusoidal positions, erf GELU, untied embeddings.  The decoder
// is driven with teacher forcing for training and greedily for inference.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig &config() const { return cfg_; }
  const Vocab &vocab() const { return vocab_; }
  ParamStore &params() { return params_; }
  const ParamStore &params() const { return params_; }

  void InitRandom(uint64_t seed);

  // Graph builders.  BuildDecoder returns logits with targets.size() + 1
  // rows: the distribution after consuming the start token and after each
  // target token, so the last row scores the end token.
  int BuildEncoder(Graph *g, const Eigen::MatrixXf &frames) const;
  int BuildDecoder(Graph *g, int encOut, const std::vector<int> &targets) const;
  int BuildLogits(Graph *g, const Eigen::MatrixXf &frames,
                  const std::vector<int> &targets) const;

  Mat EncoderOut(const Eigen::MatrixXf &frames) const;
  // Row-softmaxed next-token distributions under teacher forcing.
  Mat PredictProbs(const Eigen::MatrixXf &frames,
                   const std::vector<int> &targets) const;

  // Greedy decoding: ties resolve to the lowest token id, generation stops
  // at the end token or after maxTargetLen - 1 output tokens.
  std::vector<int> GreedyDecode(const Eigen::MatrixXf &frames) const;
  std::string Transcribe(const Eigen::MatrixXf &frames) const;

  void Save(const std::string &path) const;
  static Model Load(const std::string &path);

 private:
  void CheckFrames(const Eigen::MatrixXf &frames) const;
  void CheckTargets(const std::vector<int> &targets) const;

  ModelConfig cfg_;
  Vocab vocab_;
  ParamStore params_;
  Mat posenc_;
};

// Teacher layers carried over when a student keeps `studentLayers` of
// `teacherLayers`: evenly spaced indices over [0, T-1], rounded half up,
// both endpoints always included.
std::vector<int> SelectLayers(int teacherLayers, int studentLayers);

// Builds a student with the teacher's widths and vocabulary but fewer
// blocks; selected blocks and all shared tensors are copied bit for bit.
Model InitStudent(const Model &teacher, int encoderLayers, int decoderLayers);

class Adam {
 public:
  explicit Adam(ParamStore *params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  // Applies one update from the accumulated gradients at the given
  // learning rate; moments and bias correction run in double, the masters
  // absorb the step in float32.
  void Step(const GradBuffer &grads, double lr);

  int64_t t() const { return t_; }

 private:
  ParamStore *params_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Mat> m_, v_;
};

// Linear warmup to a constant rate.
double WarmupConstantLr(double base, int64_t step, int64_t warmupSteps);

}  // namespace seqkd

#endif  // SEQKD_MODEL_HPP_
