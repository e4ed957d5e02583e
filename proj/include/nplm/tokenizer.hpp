// Copyright 2026 The nplm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Whitespace/punctuation tokenizer.
//
// Rules:
//   * whitespace (ASCII space/tab/newline/CR/VT/FF, U+00A0, U+1680,
//     U+2000..U+200B, U+2028, U+2029, U+202F, U+205F, U+3000) separates tokens;
//   * every punctuation code point becomes its own token. Punctuation is any
//     ASCII character that is neither alphanumeric nor whitespace, plus the
//     non-ASCII ranges U+00A1..U+00BF, U+00D7, U+00F7, U+2010..U+205E
//     (general punctuation), U+3001..U+303F and U+FF01..U+FF0F;
//   * everything else is a word character; maximal runs form word tokens;
//   * ASCII letters are lowercased, other code points are kept verbatim.
// Offsets are in code points, half-open.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nplm {

struct TokenSpan {
  std::string text;
  std::size_t begin = 0;  // code point offset
  std::size_t end = 0;
};

namespace detail {

enum class CharClass { kSpace, kPunct, kWord };

inline CharClass classify_code_point(std::uint32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return CharClass::kSpace;
    if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return CharClass::kWord;
    if (c < 0x20 || c == 0x7F) return CharClass::kSpace;  // control characters
    return CharClass::kPunct;
  }
  if (cp == 0x00A0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x2028 || cp == 0x2029 ||
      cp == 0x202F || cp == 0x205F || cp == 0x3000)
    return CharClass::kSpace;
  if ((cp >= 0x00A1 && cp <= 0x00BF) || cp == 0x00D7 || cp == 0x00F7 || (cp >= 0x2010 && cp <= 0x205E) ||
      (cp >= 0x3001 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF0F))
    return CharClass::kPunct;
  return CharClass::kWord;
}

// Decodes one UTF-8 sequence starting at `pos`; invalid bytes decode as a
// single-byte code point so tokenization is total.
inline std::uint32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) {
    return pos + i < s.size() && (static_cast<unsigned char>(s[pos + i]) & 0xC0) == 0x80;
  };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    len = 2;
    return ((b0 & 0x1Fu) << 6) | (static_cast<unsigned char>(s[pos + 1]) & 0x3Fu);
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    len = 3;
    return ((b0 & 0x0Fu) << 12) | ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 6) |
           (static_cast<unsigned char>(s[pos + 2]) & 0x3Fu);
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    len = 4;
    return ((b0 & 0x07u) << 18) | ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 12) |
           ((static_cast<unsigned char>(s[pos + 2]) & 0x3Fu) << 6) |
           (static_cast<unsigned char>(s[pos + 3]) & 0x3Fu);
  }
  len = 1;
  return 0xFFFD;
}

}  // namespace detail

inline std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
  std::vector<TokenSpan> out;
  TokenSpan word;
  bool in_word = false;
  std::size_t cp_index = 0;
  auto flush = [&] {
    if (in_word) {
      word.end = cp_index;
      out.push_back(std::move(word));
      word = {};
      in_word = false;
    }
  };
  for (std::size_t pos = 0; pos < text.size(); ++cp_index) {
    std::size_t len = 1;
    const auto cp = detail::decode_utf8(text, pos, len);
    const auto bytes = text.substr(pos, len);
    switch (detail::classify_code_point(cp)) {
      case detail::CharClass::kSpace:
        flush();
        break;
      case detail::CharClass::kPunct:
        flush();
        out.push_back({std::string(bytes), cp_index, cp_index + 1});
        break;
      case detail::CharClass::kWord:
        if (!in_word) {
          in_word = true;
          word.begin = cp_index;
        }
        if (len == 1 && cp >= 'A' && cp <= 'Z') {
          word.text.push_back(static_cast<char>(cp - 'A' + 'a'));
        } else {
          word.text.append(bytes);
        }
        break;
    }
    pos += len;
  }
  flush();
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& span : tokenize_with_offsets(text)) out.push_back(std::move(span.text));
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace nplm
