// include/seqkd/autodiff.hpp
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

#ifndef SEQKD_AUTODIFF_HPP_
#define SEQKD_AUTODIFF_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace seqkd {

using Mat = Eigen::MatrixXd;

// Per-parameter gradient accumulator, indexed like the parameter store.
struct GradBuffer {
  std::vector<Mat> g;

  void Resize(const std::vector<Mat> &like) {
    g.resize(like.size());
    for (size_t i = 0; i < like.size(); ++i)
      g[i] = Mat::Zero(like[i].rows(), like[i].cols());
  }
  void Zero() {
    for (Mat &m : g) m.setZero();
  }
  void Add(const GradBuffer &o) {
    for (size_t i = 0; i < g.size(); ++i) g[i] += o.g[i];
  }
};

// Reverse-mode tape over double matrices.  One graph per example: forward
// values are computed eagerly as nodes are appended, Backward replays the
// tape in reverse.  Parameter values are aliased from the caller's dense
// copies so building a graph never copies weights; their gradients flow
// into a GradBuffer.
class Graph {
 public:
  explicit Graph(const std::vector<Mat> *params) : params_(params) {
    nodes_.reserve(256);
  }

  int Param(int paramId);
  int Input(Mat value);
  int MatMul(int a, int b);
  int Add(int a, int b);
  int AddRow(int a, int rowParam);     // broadcast a 1 x D row onto each row
  int AddConst(int a, Mat constant);   // e.g. positional encodings
  int Scale(int a, double s);
  int LayerNorm(int x, int gamma, int beta);  // row-wise, eps 1e-5
  int Gelu(int a);                            // exact erf form
  // Multi-head attention over already-projected q (Tq x d), k, v (Tk x d).
  int Attention(int q, int k, int v, int heads, bool causal);
  int EmbedRows(int table, const std::vector<int> &rows);
  // Sum over rows of -log softmax(logits)[row, label].  Scalar node.
  int SoftmaxCrossEntropy(int logits, const std::vector<int> &labels);
  // Sum over rows of KL(target || softmax(logits)), natural log.  Scalar.
  int KlToTarget(int logits, Mat targetProbs);
  int WeightedSum(int a, double wa, int b, double wb);  // of scalar nodes

  const Mat &Value(int id) const { return ValueOf(id); }
  double Scalar(int id) const { return ValueOf(id)(0, 0); }

  // Seeds d(root) = seed and accumulates parameter gradients into out.
  void Backward(int root, double seed, GradBuffer *out);

  // Row-stable softmax of a node's value; not part of the tape.
  static Mat Softmax(const Mat &logits);

 private:
  struct Node {
    uint8_t op;
    int a = -1, b = -1, c = -1;
    int paramId = -1;
    int heads = 0;
    bool causal = false;
    double scale = 1.0;
    Mat value;
    Mat grad;
    Mat aux1, aux2;          // op-specific caches
    std::vector<int> rows;   // EmbedRows gather / CE labels
  };

  const Mat &ValueOf(int id) const {
    const Node &n = nodes_[id];
    return n.paramId >= 0 ? (*params_)[n.paramId] : n.value;
  }
  void AddGrad(int id, const Mat &g) {
    Mat &dst = nodes_[id].grad;
    if (dst.size() == 0)
      dst = g;
    else
      dst += g;
  }
  int Push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const std::vector<Mat> *params_;
  std::vector<Node> nodes_;
};

}  // namespace seqkd

#endif  // SEQKD_AUTODIFF_HPP_
