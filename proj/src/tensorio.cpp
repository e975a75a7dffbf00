// src/tensorio.cpp
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

#include "seqkd/tensorio.hpp"

#include <fstream>

#include "seqkd/errors.hpp"

namespace seqkd {
namespace {

constexpr uint64_t kMaxNameLen = 1 << 16;
constexpr uint64_t kMaxRank = 8;
constexpr uint64_t kMaxElems = 1ULL << 32;

void WriteU64(std::ostream &os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char *>(b), 8);
}

uint64_t ReadU64(std::istream &is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char *>(b), 8);
  Require(is.gcount() == 8, ErrorCode::kCorruptCheckpoint,
          "truncated record header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void WriteRecord(std::ostream &os, const TensorRecord &rec) {
  WriteU64(os, rec.name.size());
  os.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
  WriteU64(os, rec.dims.size());
  uint64_t elems = 1;
  for (uint64_t d : rec.dims) {
    WriteU64(os, d);
    elems *= d;
  }
  Require(elems == rec.data.size(), ErrorCode::kInvalidArgument,
          "record '" + rec.name + "' payload does not match its dims");
  os.write(reinterpret_cast<const char *>(rec.data.data()),
           static_cast<std::streamsize>(rec.data.size() * sizeof(float)));
  Require(os.good(), ErrorCode::kIoError, "write failed for '" + rec.name + "'");
}

TensorRecord ReadRecord(std::istream &is) {
  TensorRecord rec;
  uint64_t name_len = ReadU64(is);
  Require(name_len <= kMaxNameLen, ErrorCode::kCorruptCheckpoint,
          "implausible name length");
  rec.name.resize(name_len);
  is.read(rec.name.data(), static_cast<std::streamsize>(name_len));
  Require(static_cast<uint64_t>(is.gcount()) == name_len,
          ErrorCode::kCorruptCheckpoint, "truncated record name");
  uint64_t rank = ReadU64(is);
  Require(rank <= kMaxRank, ErrorCode::kCorruptCheckpoint, "implausible rank");
  uint64_t elems = 1;
  for (uint64_t i = 0; i < rank; ++i) {
    uint64_t d = ReadU64(is);
    Require(d <= kMaxElems && elems * std::max<uint64_t>(d, 1) <= kMaxElems,
            ErrorCode::kCorruptCheckpoint, "implausible dims");
    rec.dims.push_back(d);
    elems *= d;
  }
  rec.data.resize(elems);
  is.read(reinterpret_cast<char *>(rec.data.data()),
          static_cast<std::streamsize>(elems * sizeof(float)));
  Require(static_cast<uint64_t>(is.gcount()) == elems * sizeof(float),
          ErrorCode::kCorruptCheckpoint,
          "truncated payload in '" + rec.name + "'");
  return rec;
}

bool TryReadRecord(std::istream &is, TensorRecord *rec) {
  if (is.peek() == std::istream::traits_type::eof()) return false;
  *rec = ReadRecord(is);
  return true;
}

TensorRecord MatrixRecord(const std::string &name, const Eigen::MatrixXf &m) {
  TensorRecord rec;
  rec.name = name;
  rec.dims = {static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols())};
  rec.data.resize(static_cast<size_t>(m.size()));
  using RowMajor =
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMajor>(rec.data.data(), m.rows(), m.cols()) = m;
  return rec;
}

Eigen::MatrixXf RecordMatrix(const TensorRecord &rec) {
  Require(rec.dims.size() == 2, ErrorCode::kCorruptCheckpoint,
          "record '" + rec.name + "' is not a matrix");
  auto rows = static_cast<Eigen::Index>(rec.dims[0]);
  auto cols = static_cast<Eigen::Index>(rec.dims[1]);
  using RowMajor =
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(rec.data.data(), rows, cols);
}

void WriteFramesFile(
    const std::string &path,
    const std::vector<std::pair<std::string, Eigen::MatrixXf>> &frames) {
  std::ofstream os(path, std::ios::binary);
  Require(os.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  for (const auto &[id, m] : frames) WriteRecord(os, MatrixRecord(id, m));
}

std::map<std::string, Eigen::MatrixXf> ReadFramesFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  std::map<std::string, Eigen::MatrixXf> out;
  TensorRecord rec;
  while (TryReadRecord(is, &rec)) {
    Require(!out.count(rec.name), ErrorCode::kDuplicateId,
            "duplicate frames for '" + rec.name + "'");
    out[rec.name] = RecordMatrix(rec);
  }
  return out;
}

}  // namespace seqkd
