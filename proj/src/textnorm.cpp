// src/textnorm.cpp
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

#include "seqkd/textnorm.hpp"

#include <algorithm>
#include <array>

#include "seqkd/errors.hpp"
#include "seqkd/utf8.hpp"

namespace seqkd {
namespace {

struct Range {
  char32_t lo, hi;
};

// Punctuation and symbol general categories over all of Unicode.
const Range kPunctSym[] = {
#include "ucd_punct_sym.inc"
};

constexpr char32_t kTatweel = 0x0640;
constexpr char32_t kBareAlef = 0x0627;

// Unicode White_Space property members.
const Range kWhitespace[] = {
    {0x0009, 0x000D}, {0x0020, 0x0020}, {0x0085, 0x0085}, {0x00A0, 0x00A0},
    {0x1680, 0x1680}, {0x2000, 0x200A}, {0x2028, 0x2029}, {0x202F, 0x202F},
    {0x205F, 0x205F}, {0x3000, 0x3000},
};

// Letter ranges of the Latin script.  A handful of codepoints inside these
// blocks are modifier symbols; membership subtracts the punct/symbol table
// so the rule sets stay disjoint.
const Range kLatinRaw[] = {
    {0x0041, 0x005A}, {0x0061, 0x007A}, {0x00AA, 0x00AA}, {0x00BA, 0x00BA},
    {0x00C0, 0x00D6}, {0x00D8, 0x00F6}, {0x00F8, 0x024F}, {0x1E00, 0x1EFF},
    {0x2C60, 0x2C7F}, {0xA720, 0xA7FF}, {0xAB30, 0xAB6F}, {0xFB00, 0xFB06},
    {0xFF21, 0xFF3A}, {0xFF41, 0xFF5A},
};

bool InRanges(const Range *ranges, size_t n, char32_t cp) {
  size_t lo = 0, hi = n;
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (cp < ranges[mid].lo) {
      hi = mid;
    } else if (cp > ranges[mid].hi) {
      lo = mid + 1;
    } else {
      return true;
    }
  }
  return false;
}

bool InPunctSym(char32_t cp) {
  return InRanges(kPunctSym, std::size(kPunctSym), cp);
}

void AppendCollapsed(std::vector<char32_t> *out, const std::vector<char32_t> &in) {
  bool pending_space = false;
  for (char32_t cp : in) {
    if (IsWhitespaceChar(cp)) {
      pending_space = !out->empty();
      continue;
    }
    if (pending_space) {
      out->push_back(U' ');
      pending_space = false;
    }
    out->push_back(cp);
  }
}

}  // namespace

bool IsDiacritic(char32_t cp) {
  return (cp >= 0x064B && cp <= 0x065F) || cp == 0x0670;
}

bool IsAlefVariant(char32_t cp) {
  return cp == 0x0622 || cp == 0x0623 || cp == 0x0625 || cp == 0x0671;
}

char32_t FoldAlef(char32_t cp) { return IsAlefVariant(cp) ? kBareAlef : cp; }

bool IsTransliteratedDigit(char32_t cp) {
  return (cp >= 0x0660 && cp <= 0x0669) || (cp >= 0x06F0 && cp <= 0x06F9);
}

char32_t TransliterateDigit(char32_t cp) {
  if (cp >= 0x0660 && cp <= 0x0669) return U'0' + (cp - 0x0660);
  if (cp >= 0x06F0 && cp <= 0x06F9) return U'0' + (cp - 0x06F0);
  return cp;
}

bool IsLatinLetter(char32_t cp) {
  return InRanges(kLatinRaw, std::size(kLatinRaw), cp) && !InPunctSym(cp);
}

bool IsSpecialChar(char32_t cp) { return cp == kTatweel || InPunctSym(cp); }

bool IsWhitespaceChar(char32_t cp) {
  return InRanges(kWhitespace, std::size(kWhitespace), cp);
}

const char *NormModeName(NormMode mode) {
  switch (mode) {
    case NormMode::kOrthographic: return "orthographic";
    case NormMode::kNormalized: return "normalized";
    case NormMode::kNormalizedNoDiacritics: return "normalized_nd";
  }
  return "?";
}

NormMode ParseNormMode(const std::string &name) {
  for (NormMode m : AllNormModes())
    if (name == NormModeName(m)) return m;
  Fail(ErrorCode::kInvalidArgument, "unknown normalization mode '" + name + "'");
}

std::vector<NormMode> AllNormModes() {
  return {NormMode::kOrthographic, NormMode::kNormalized,
          NormMode::kNormalizedNoDiacritics};
}

std::string Normalize(const std::string &text, NormMode mode) {
  std::vector<char32_t> cps = Utf8Decode(text);
  std::vector<char32_t> kept;
  kept.reserve(cps.size());
  if (mode == NormMode::kOrthographic) {
    kept = std::move(cps);
  } else {
    bool strip_diacritics = mode == NormMode::kNormalizedNoDiacritics;
    for (char32_t cp : cps) {
      if (IsDiacritic(cp)) {
        if (!strip_diacritics) kept.push_back(cp);
      } else if (IsAlefVariant(cp)) {
        kept.push_back(kBareAlef);
      } else if (IsTransliteratedDigit(cp)) {
        kept.push_back(TransliterateDigit(cp));
      } else if (IsLatinLetter(cp) || IsSpecialChar(cp)) {
        // dropped
      } else {
        kept.push_back(cp);
      }
    }
  }
  std::vector<char32_t> out;
  out.reserve(kept.size());
  AppendCollapsed(&out, kept);
  while (!out.empty() && out.back() == U' ') out.pop_back();
  return Utf8Encode(out);
}

std::vector<std::string> Tokenize(const std::string &text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char32_t cp : Utf8Decode(text)) {
    if (IsWhitespaceChar(cp)) {
      if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      Utf8Append(&cur, cp);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<char32_t> Codepoints(const std::string &text) {
  return Utf8Decode(text);
}

void DumpRules(std::ostream &os) {
  auto hex = [](char32_t cp) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04X", static_cast<unsigned>(cp));
    return std::string(buf);
  };
  auto row = [&](const char *rule, char32_t lo, char32_t hi, const char *action,
                 const std::string &repl) {
    os << rule << '\t' << hex(lo) << '\t' << hex(hi) << '\t' << action << '\t'
       << repl << '\n';
  };
  os << "rule\tfirst\tlast\taction\treplacement\n";
  row("diacritic", 0x064B, 0x065F, "strip_if_nd", "-");
  row("diacritic", 0x0670, 0x0670, "strip_if_nd", "-");
  for (char32_t cp : {0x0622, 0x0623, 0x0625, 0x0671})
    row("alef_variant", cp, cp, "map", hex(kBareAlef));
  row("digit", 0x0660, 0x0669, "map", "0030-0039");
  row("digit", 0x06F0, 0x06F9, "map", "0030-0039");
  // Latin ranges are emitted with the punct/symbol holes cut out so every
  // listed codepoint really belongs to exactly one rule.
  for (const Range &r : kLatinRaw) {
    char32_t lo = r.lo;
    for (char32_t cp = r.lo; cp <= r.hi + 1u; ++cp) {
      bool inside = cp <= r.hi && !InPunctSym(cp);
      if (!inside) {
        if (lo < cp) row("latin", lo, cp - 1, "strip", "-");
        lo = cp + 1;
      }
    }
  }
  row("special", kTatweel, kTatweel, "strip", "-");
  for (const Range &r : kPunctSym) row("special", r.lo, r.hi, "strip", "-");
  for (const Range &r : kWhitespace)
    row("whitespace", r.lo, r.hi, "collapse", "0020");
}

}  // namespace seqkd
