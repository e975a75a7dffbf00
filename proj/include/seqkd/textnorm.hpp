// include/seqkd/textnorm.hpp
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

#ifndef SEQKD_TEXTNORM_HPP_
#define SEQKD_TEXTNORM_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace seqkd {

// Text normalization for Arabic transcripts.
//
// Orthographic keeps the text as written and only tidies whitespace.
// Normalized additionally removes Latin letters, transliterates Arabic-Indic
// digits to ASCII, folds alef variants to bare alef and strips punctuation,
// symbols and the tatweel.  NormalizedNoDiacritics further removes the
// Arabic diacritic marks.  All modes collapse whitespace runs to a single
// ASCII space and trim the ends.
enum class NormMode {
  kOrthographic,
  kNormalized,
  kNormalizedNoDiacritics,
};

const char *NormModeName(NormMode mode);
NormMode ParseNormMode(const std::string &name);  // InvalidArgument on junk
std::vector<NormMode> AllNormModes();

std::string Normalize(const std::string &text, NormMode mode);

// Whitespace-delimited tokens of an already-normalized (or any) string.
std::vector<std::string> Tokenize(const std::string &text);

// Codepoints of a string; the unit for character error rates.
std::vector<char32_t> Codepoints(const std::string &text);

// Rule-set membership, exposed for tests and the rule dump.
bool IsDiacritic(char32_t cp);
bool IsAlefVariant(char32_t cp);      // folds to U+0627
bool IsTransliteratedDigit(char32_t cp);
bool IsLatinLetter(char32_t cp);
bool IsSpecialChar(char32_t cp);      // punctuation, symbols, tatweel
bool IsWhitespaceChar(char32_t cp);

char32_t FoldAlef(char32_t cp);       // identity outside the alef set
char32_t TransliterateDigit(char32_t cp);

// Writes the complete rule tables as TSV: rule, first, last, action,
// replacement.  Codepoints are hex without the U+ prefix.
void DumpRules(std::ostream &os);

}  // namespace seqkd

#endif  // SEQKD_TEXTNORM_HPP_
