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

// English stopword list used by the n-gram overlap analyzer (lowercase,
// matched against tokenizer output).

#include <algorithm>
#include <iterator>
#include <string_view>

namespace nplm {

inline constexpr std::string_view kEnglishStopwords[] = {
    "a",       "about",   "above",  "after",   "again",   "against", "all",    "am",     "an",      "and",
    "any",     "are",     "as",     "at",      "be",      "because", "been",   "before", "being",   "below",
    "between", "both",    "but",    "by",      "can",     "d",       "did",    "do",     "does",    "doing",
    "don",     "down",    "during", "each",    "few",     "for",     "from",   "further", "had",    "has",
    "have",    "having",  "he",     "her",     "here",    "hers",    "herself", "him",   "himself", "his",
    "how",     "i",       "if",     "in",      "into",    "is",      "it",     "its",    "itself",  "just",
    "ll",      "m",       "me",     "more",    "most",    "my",      "myself", "no",     "nor",     "not",
    "now",     "o",       "of",     "off",     "on",      "once",    "only",   "or",     "other",   "our",
    "ours",    "ourselves", "out",  "over",    "own",     "re",      "s",      "same",   "she",     "should",
    "so",      "some",    "such",   "t",       "than",    "that",    "the",    "their",  "theirs",  "them",
    "themselves", "then", "there",  "these",   "they",    "this",    "those",  "through", "to",     "too",
    "under",   "until",   "up",     "ve",      "very",    "was",     "we",     "were",   "what",    "when",
    "where",   "which",   "while",  "who",     "whom",    "why",     "will",   "with",   "you",     "your",
    "yours",   "yourself", "yourselves"};

inline bool is_stopword(std::string_view token) {
  return std::find(std::begin(kEnglishStopwords), std::end(kEnglishStopwords), token) != std::end(kEnglishStopwords);
}

}  // namespace nplm
