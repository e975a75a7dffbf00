// src/autodiff.cpp
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

#include "seqkd/autodiff.hpp"

#include <cmath>

#include "seqkd/errors.hpp"

namespace seqkd {
namespace {

enum OpCode : uint8_t {
  kParam,
  kInput,
  kMatMul,
  kAdd,
  kAddRow,
  kAddConst,
  kScale,
  kLayerNorm,
  kGelu,
  kAttention,
  kEmbedRows,
  kSoftmaxCE,
  kKl,
  kWeightedSum,
};

constexpr double kLnEps = 1e-5;        // layer norm variance floor
constexpr double kMaskValue = -1e30;   // pre-softmax causal mask

double GeluScalar(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double GeluGradScalar(double x) {
  const double kInvSqrt2Pi = 0.3989422804014326779399461;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

}  // namespace

Mat Graph::Softmax(const Mat &logits) {
  Mat p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
    p.row(i) = (e / e.sum()).matrix();
  }
  return p;
}

int Graph::Param(int paramId) {
  Node n;
  n.op = kParam;
  n.paramId = paramId;
  return Push(std::move(n));
}

int Graph::Input(Mat value) {
  Node n;
  n.op = kInput;
  n.value = std::move(value);
  return Push(std::move(n));
}

int Graph::MatMul(int a, int b) {
  Node n;
  n.op = kMatMul;
  n.a = a;
  n.b = b;
  n.value = ValueOf(a) * ValueOf(b);
  return Push(std::move(n));
}

int Graph::Add(int a, int b) {
  Node n;
  n.op = kAdd;
  n.a = a;
  n.b = b;
  n.value = ValueOf(a) + ValueOf(b);
  return Push(std::move(n));
}

int Graph::AddRow(int a, int rowParam) {
  Node n;
  n.op = kAddRow;
  n.a = a;
  n.b = rowParam;
  n.value = ValueOf(a).rowwise() + ValueOf(rowParam).row(0);
  return Push(std::move(n));
}

int Graph::AddConst(int a, Mat constant) {
  Node n;
  n.op = kAddConst;
  n.a = a;
  n.value = ValueOf(a) + constant;
  return Push(std::move(n));
}

int Graph::Scale(int a, double s) {
  Node n;
  n.op = kScale;
  n.a = a;
  n.scale = s;
  n.value = s * ValueOf(a);
  return Push(std::move(n));
}

int Graph::LayerNorm(int x, int gamma, int beta) {
  const Mat &in = ValueOf(x);
  const Eigen::Index rows = in.rows(), cols = in.cols();
  Node n;
  n.op = kLayerNorm;
  n.a = x;
  n.b = gamma;
  n.c = beta;
  n.aux1.resize(rows, cols);  // normalized input
  n.aux2.resize(rows, 1);     // 1 / stddev
  for (Eigen::Index i = 0; i < rows; ++i) {
    double mu = in.row(i).mean();
    double var = (in.row(i).array() - mu).square().mean();
    double invstd = 1.0 / std::sqrt(var + kLnEps);
    n.aux1.row(i) = ((in.row(i).array() - mu) * invstd).matrix();
    n.aux2(i, 0) = invstd;
  }
  n.value = (n.aux1.array().rowwise() * ValueOf(gamma).row(0).array())
                .rowwise() +
            ValueOf(beta).row(0).array();
  return Push(std::move(n));
}

int Graph::Gelu(int a) {
  Node n;
  n.op = kGelu;
  n.a = a;
  n.value = ValueOf(a).unaryExpr([](double x) { return GeluScalar(x); });
  return Push(std::move(n));
}

int Graph::Attention(int q, int k, int v, int heads, bool causal) {
  const Mat &Q = ValueOf(q);
  const Mat &K = ValueOf(k);
  const Mat &V = ValueOf(v);
  const Eigen::Index d = Q.cols();
  Require(d % heads == 0, ErrorCode::kInvalidConfig,
          "model width not divisible by head count");
  const Eigen::Index dh = d / heads;
  const Eigen::Index tq = Q.rows(), tk = K.rows();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Node n;
  n.op = kAttention;
  n.a = q;
  n.b = k;
  n.c = v;
  n.heads = heads;
  n.causal = causal;
  n.value.resize(tq, d);
  n.aux1.resize(heads * tq, tk);  // per-head attention weights, stacked
  for (int h = 0; h < heads; ++h) {
    Mat scores = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose();
    scores *= inv_sqrt;
    if (causal)
      for (Eigen::Index i = 0; i < tq; ++i)
        for (Eigen::Index j = i + 1; j < tk; ++j) scores(i, j) = kMaskValue;
    Mat a = Softmax(scores);
    n.aux1.middleRows(h * tq, tq) = a;
    n.value.middleCols(h * dh, dh) = a * V.middleCols(h * dh, dh);
  }
  return Push(std::move(n));
}

int Graph::EmbedRows(int table, const std::vector<int> &rows) {
  const Mat &t = ValueOf(table);
  Node n;
  n.op = kEmbedRows;
  n.a = table;
  n.rows = rows;
  n.value.resize(static_cast<Eigen::Index>(rows.size()), t.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    Require(rows[i] >= 0 && rows[i] < t.rows(), ErrorCode::kTokenOutOfRange,
            "embedding row out of range");
    n.value.row(static_cast<Eigen::Index>(i)) = t.row(rows[i]);
  }
  return Push(std::move(n));
}

int Graph::SoftmaxCrossEntropy(int logits, const std::vector<int> &labels) {
  const Mat &z = ValueOf(logits);
  Require(static_cast<Eigen::Index>(labels.size()) == z.rows(),
          ErrorCode::kLengthMismatch, "one label per logit row required");
  Node n;
  n.op = kSoftmaxCE;
  n.a = logits;
  n.rows = labels;
  n.aux1 = Softmax(z);
  double loss = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    Require(labels[i] >= 0 && labels[i] < z.cols(),
            ErrorCode::kTokenOutOfRange, "label out of vocabulary");
    loss -= std::log(n.aux1(static_cast<Eigen::Index>(i), labels[i]));
  }
  n.value = Mat::Constant(1, 1, loss);
  return Push(std::move(n));
}

int Graph::KlToTarget(int logits, Mat targetProbs) {
  const Mat &z = ValueOf(logits);
  Require(targetProbs.rows() == z.rows() && targetProbs.cols() == z.cols(),
          ErrorCode::kLengthMismatch, "target distribution shape mismatch");
  Node n;
  n.op = kKl;
  n.a = logits;
  n.aux1 = Softmax(z);
  n.aux2 = std::move(targetProbs);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      double q = n.aux2(i, j);
      if (q > 0.0) kl += q * (std::log(q) - std::log(n.aux1(i, j)));
    }
  }
  n.value = Mat::Constant(1, 1, kl);
  return Push(std::move(n));
}

int Graph::WeightedSum(int a, double wa, int b, double wb) {
  Node n;
  n.op = kWeightedSum;
  n.a = a;
  n.b = b;
  n.aux1 = Mat(1, 2);
  n.aux1 << wa, wb;
  n.value = wa * ValueOf(a) + wb * ValueOf(b);
  return Push(std::move(n));
}

void Graph::Backward(int root, double seed, GradBuffer *out) {
  nodes_[root].grad = Mat::Constant(1, 1, seed);
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node &n = nodes_[id];
    if (n.grad.size() == 0) continue;
    const Mat &g = n.grad;
    switch (n.op) {
      case kParam:
        out->g[n.paramId] += g;
        break;
      case kInput:
      case kAddConst:
        if (n.op == kAddConst) AddGrad(n.a, g);
        break;
      case kMatMul:
        AddGrad(n.a, g * ValueOf(n.b).transpose());
        AddGrad(n.b, ValueOf(n.a).transpose() * g);
        break;
      case kAdd:
        AddGrad(n.a, g);
        AddGrad(n.b, g);
        break;
      case kAddRow:
        AddGrad(n.a, g);
        AddGrad(n.b, g.colwise().sum());
        break;
      case kScale:
        AddGrad(n.a, n.scale * g);
        break;
      case kLayerNorm: {
        const Mat &gamma = ValueOf(n.b);
        Mat dxhat = g.array().rowwise() * gamma.row(0).array();
        const Eigen::Index cols = dxhat.cols();
        Eigen::ArrayXd s1 = dxhat.rowwise().sum().array() / cols;
        Eigen::ArrayXd s2 =
            (dxhat.array() * n.aux1.array()).rowwise().sum() / cols;
        Mat dx = ((dxhat.array().colwise() - s1) -
                  (n.aux1.array().colwise() * s2))
                     .colwise() *
                 n.aux2.col(0).array();
        AddGrad(n.a, dx);
        AddGrad(n.b, (g.array() * n.aux1.array()).colwise().sum().matrix());
        AddGrad(n.c, g.colwise().sum());
        break;
      }
      case kGelu: {
        const Mat &x = ValueOf(n.a);
        AddGrad(n.a, g.cwiseProduct(x.unaryExpr(
                         [](double v) { return GeluGradScalar(v); })));
        break;
      }
      case kAttention: {
        const Mat &Q = ValueOf(n.a);
        const Mat &K = ValueOf(n.b);
        const Mat &V = ValueOf(n.c);
        const Eigen::Index d = Q.cols();
        const Eigen::Index dh = d / n.heads;
        const Eigen::Index tq = Q.rows();
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
        Mat dQ = Mat::Zero(Q.rows(), Q.cols());
        Mat dK = Mat::Zero(K.rows(), K.cols());
        Mat dV = Mat::Zero(V.rows(), V.cols());
        for (int h = 0; h < n.heads; ++h) {
          auto A = n.aux1.middleRows(h * tq, tq);
          auto dO = g.middleCols(h * dh, dh);
          auto Vh = V.middleCols(h * dh, dh);
          Mat dA = dO * Vh.transpose();
          dV.middleCols(h * dh, dh) = A.transpose() * dO;
          Eigen::ArrayXd rowdot = (dA.array() * A.array()).rowwise().sum();
          Mat dS = (A.array() * (dA.array().colwise() - rowdot)).matrix();
          dQ.middleCols(h * dh, dh) =
              inv_sqrt * dS * K.middleCols(h * dh, dh);
          dK.middleCols(h * dh, dh) =
              inv_sqrt * dS.transpose() * Q.middleCols(h * dh, dh);
        }
        AddGrad(n.a, dQ);
        AddGrad(n.b, dK);
        AddGrad(n.c, dV);
        break;
      }
      case kEmbedRows: {
        const Mat &t = ValueOf(n.a);
        Mat dt = Mat::Zero(t.rows(), t.cols());
        for (size_t i = 0; i < n.rows.size(); ++i)
          dt.row(n.rows[i]) += g.row(static_cast<Eigen::Index>(i));
        AddGrad(n.a, dt);
        break;
      }
      case kSoftmaxCE: {
        Mat dz = n.aux1;
        for (size_t i = 0; i < n.rows.size(); ++i)
          dz(static_cast<Eigen::Index>(i), n.rows[i]) -= 1.0;
        AddGrad(n.a, g(0, 0) * dz);
        break;
      }
      case kKl:
        AddGrad(n.a, g(0, 0) * (n.aux1 - n.aux2));
        break;
      case kWeightedSum:
        AddGrad(n.a, n.aux1(0, 0) * g);
        AddGrad(n.b, n.aux1(0, 1) * g);
        break;
      default:
        Fail(ErrorCode::kInvalidArgument, "unknown op in backward pass");
    }
  }
}

}  // namespace seqkd
