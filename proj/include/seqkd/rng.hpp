// include/seqkd/rng.hpp
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

#ifndef SEQKD_RNG_HPP_
#define SEQKD_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace seqkd {

// FNV-1a over bytes.  Used for seed stream derivation and artifact names.
uint64_t Fnv1a64(const void *data, size_t n, uint64_t h = 0xcbf29ce484222325ULL);
uint64_t HashString(const std::string &s);

// Deterministic RNG.  mt19937_64 supplies the raw 64-bit stream; every
// distribution on top of it is written out by hand because the std
// distribution objects are implementation-defined and would break
// cross-toolchain reproducibility of seeds, corpora and training runs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Independent stream for a named purpose under one user-visible seed.
  static Rng Stream(uint64_t seed, const std::string &tag) {
    uint64_t h = HashString(tag);
    h ^= seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return Rng(h);
  }

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform01() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Uniform integer in [0, n).  Multiply-shift map of the full 64-bit word;
  // the bias is far below anything observable at our scales.
  uint64_t Below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<__uint128_t>(Next()) * n) >> 64);
  }

  int64_t Between(int64_t lo, int64_t hi) {  // inclusive bounds
    return lo + static_cast<int64_t>(Below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Box-Muller with a cached spare.
  double Normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = Uniform01();
    double u2 = Uniform01();
    while (u1 <= 0.0) u1 = Uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mean + stddev * r * std::cos(a);
  }

  // Fisher-Yates.
  template <typename T>
  void Shuffle(std::vector<T> *v) {
    for (size_t i = v->size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap((*v)[i - 1], (*v)[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace seqkd

#endif  // SEQKD_RNG_HPP_
