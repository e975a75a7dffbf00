// include/seqkd/utf8.hpp
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

#ifndef SEQKD_UTF8_HPP_
#define SEQKD_UTF8_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace seqkd {

// Decodes UTF-8 into codepoints.  Malformed sequences decode to U+FFFD,
// one replacement per rejected byte, so round-trips are stable.
std::vector<char32_t> Utf8Decode(const std::string &text);

std::string Utf8Encode(const std::vector<char32_t> &codepoints);
void Utf8Append(std::string *out, char32_t cp);

}  // namespace seqkd

#endif  // SEQKD_UTF8_HPP_
