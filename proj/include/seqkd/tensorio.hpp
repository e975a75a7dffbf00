// include/seqkd/tensorio.hpp
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

#ifndef SEQKD_TENSORIO_HPP_
#define SEQKD_TENSORIO_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace seqkd {

// One named float32 tensor.  On disk (little endian): u64 name length,
// name bytes, u64 rank, u64 dims[rank], then the payload row-major.
struct TensorRecord {
  std::string name;
  std::vector<uint64_t> dims;
  std::vector<float> data;
};

void WriteRecord(std::ostream &os, const TensorRecord &rec);

// Reads one record; raises CorruptCheckpoint on a truncated or oversized
// record.  TryReadRecord returns false on clean end-of-stream instead.
TensorRecord ReadRecord(std::istream &is);
bool TryReadRecord(std::istream &is, TensorRecord *rec);

TensorRecord MatrixRecord(const std::string &name, const Eigen::MatrixXf &m);
Eigen::MatrixXf RecordMatrix(const TensorRecord &rec);

// Frame files are plain sequences of records keyed by utterance id.
void WriteFramesFile(const std::string &path,
                     const std::vector<std::pair<std::string, Eigen::MatrixXf>> &frames);
std::map<std::string, Eigen::MatrixXf> ReadFramesFile(const std::string &path);

}  // namespace seqkd

#endif  // SEQKD_TENSORIO_HPP_
