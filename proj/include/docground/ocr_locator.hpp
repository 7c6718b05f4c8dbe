// Copyright 2026 The docground Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docground/dataset.hpp"
#include "docground/geometry.hpp"
#include "docground/text_metrics.hpp"

namespace docground {

enum class MatchMode { none, full, first_word };

inline const char* to_string(MatchMode m) {
  switch (m) {
    case MatchMode::full:
      return "full";
    case MatchMode::first_word:
      return "first_word";
    case MatchMode::none:
      break;
  }
  return "none";
}

struct MatchResult {
  NormBox box;
  int page = 0;
  std::size_t span_start = 0;  // index into the reading-ordered tokens
  std::size_t span_length = 0;
  MatchMode mode = MatchMode::none;

  bool found() const noexcept { return mode != MatchMode::none; }
};

// Permutation of token indices in reading order: by page, then by row,
// then left to right. Rows are built greedily over tokens sorted by
// vertical centre; a token joins the current row when its centre is less
// than half the smaller height away from the row's first token.
inline std::vector<std::size_t> reading_order_indices(
    std::span<const OcrToken> tokens) {
  std::vector<std::size_t> idx(tokens.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto center = [&](std::size_t i) {
    return 0.5 * (tokens[i].box.y1 + tokens[i].box.y2);
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (tokens[a].page != tokens[b].page) return tokens[a].page < tokens[b].page;
    return center(a) < center(b);
  });

  std::vector<std::size_t> row(tokens.size(), 0);
  std::size_t current_row = 0;
  std::size_t anchor = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    if (k == 0) {
      anchor = i;
    } else {
      const double dy = std::abs(center(i) - center(anchor));
      const double tol =
          0.5 * std::min(tokens[i].box.height(), tokens[anchor].box.height());
      const bool same_row =
          tokens[i].page == tokens[anchor].page && (dy < tol || dy == 0.0);
      if (!same_row) {
        ++current_row;
        anchor = i;
      }
    }
    row[i] = current_row;
  }

  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] < row[b];
    if (tokens[a].box.x1 != tokens[b].box.x1)
      return tokens[a].box.x1 < tokens[b].box.x1;
    return a < b;
  });
  return idx;
}

inline std::vector<OcrToken> reading_order(std::span<const OcrToken> tokens) {
  std::vector<OcrToken> out;
  out.reserve(tokens.size());
  for (std::size_t i : reading_order_indices(tokens)) out.push_back(tokens[i]);
  return out;
}

namespace detail {

inline std::vector<std::string> split_words(std::string_view normalized) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && normalized[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < normalized.size() && normalized[i] != ' ') ++i;
    if (i > start) words.emplace_back(normalized.substr(start, i - start));
  }
  return words;
}

}  // namespace detail

// Exact search of the answer over tokens already in reading order. The
// first contiguous run matching every answer word wins; failing that, the
// first token matching the answer's first word. Runs never cross pages.
inline MatchResult locate_in_order(std::string_view answer,
                                   std::span<const OcrToken> ordered,
                                   const NormalizationPolicy& policy = {}) {
  NormalizationPolicy word_policy = policy;
  word_policy.collapse_whitespace = true;
  word_policy.trim = true;
  const std::vector<std::string> words =
      detail::split_words(normalize_text(answer, word_policy));
  MatchResult result;
  if (words.empty() || ordered.empty()) return result;

  std::vector<std::string> norm;
  norm.reserve(ordered.size());
  for (const OcrToken& t : ordered) norm.push_back(normalize_text(t.text, policy));

  auto run_matches = [&](std::size_t start, std::size_t len) {
    if (start + len > ordered.size()) return false;
    for (std::size_t k = 0; k < len; ++k) {
      if (norm[start + k] != words[k]) return false;
      if (ordered[start + k].page != ordered[start].page) return false;
    }
    return true;
  };
  auto make = [&](std::size_t start, std::size_t len, MatchMode mode) {
    std::vector<NormBox> boxes;
    boxes.reserve(len);
    for (std::size_t k = 0; k < len; ++k) boxes.push_back(ordered[start + k].box);
    return MatchResult{union_box(boxes), ordered[start].page, start, len, mode};
  };

  for (std::size_t s = 0; s + words.size() <= ordered.size(); ++s)
    if (run_matches(s, words.size())) return make(s, words.size(), MatchMode::full);
  for (std::size_t s = 0; s < ordered.size(); ++s)
    if (norm[s] == words.front()) return make(s, 1, MatchMode::first_word);
  return result;
}

inline MatchResult locate(std::string_view answer,
                          std::span<const OcrToken> tokens,
                          const NormalizationPolicy& policy = {}) {
  const std::vector<OcrToken> ordered = reading_order(tokens);
  return locate_in_order(answer, ordered, policy);
}

}  // namespace docground
