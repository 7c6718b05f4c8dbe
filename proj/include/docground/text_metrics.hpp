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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "docground/errors.hpp"
#include "docground/utf8.hpp"

namespace docground {

// Canonicalization applied to both sides before any text comparison.
struct NormalizationPolicy {
  bool trim = true;
  bool collapse_whitespace = true;
  bool case_fold = true;
};

struct AnlsConfig {
  double threshold = 0.5;
  NormalizationPolicy normalization{};

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0))
      throw ConfigError("ANLS threshold must be in [0, 1]");
  }
};

inline std::u32string normalize_scalars(std::u32string s,
                                        const NormalizationPolicy& policy) {
  if (policy.trim) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && utf8::is_space(s[b])) ++b;
    while (e > b && utf8::is_space(s[e - 1])) --e;
    s = s.substr(b, e - b);
  }
  if (policy.collapse_whitespace) {
    std::u32string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char32_t c : s) {
      if (utf8::is_space(c)) {
        if (!in_space) out.push_back(U' ');
        in_space = true;
      } else {
        out.push_back(c);
        in_space = false;
      }
    }
    s = std::move(out);
  }
  if (policy.case_fold) {
    for (char32_t& c : s) c = utf8::fold_case(c);
  }
  return s;
}

// Trim, then collapse whitespace runs to one space, then fold case; each
// step is gated by the policy. Idempotent.
inline std::string normalize_text(std::string_view s,
                                  const NormalizationPolicy& policy = {}) {
  return utf8::encode(normalize_scalars(utf8::decode(s), policy));
}

// Edit distance over Unicode scalar values using two rolling rows after
// stripping the common prefix and suffix.
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  while (!a.empty() && !b.empty() && a.front() == b.front()) {
    a.remove_prefix(1);
    b.remove_prefix(1);
  }
  while (!a.empty() && !b.empty() && a.back() == b.back()) {
    a.remove_suffix(1);
    b.remove_suffix(1);
  }
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();

  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(std::u32string_view(utf8::decode(a)),
                     std::u32string_view(utf8::decode(b)));
}

// Normalized Levenshtein similarity, zeroed below the threshold.
inline double anls_single(std::string_view pred, std::string_view gt,
                          const AnlsConfig& cfg = {}) {
  const std::u32string p =
      normalize_scalars(utf8::decode(pred), cfg.normalization);
  const std::u32string g =
      normalize_scalars(utf8::decode(gt), cfg.normalization);
  const std::size_t longest = std::max(p.size(), g.size());
  if (longest == 0) return 1.0;
  const double nls = 1.0 - static_cast<double>(levenshtein(p, g)) /
                               static_cast<double>(longest);
  return nls >= cfg.threshold ? nls : 0.0;
}

// Prediction (absent when the model produced nothing usable) and ground
// truth answer.
using AnswerPair = std::pair<std::optional<std::string>, std::string>;

inline double anls_corpus(std::span<const AnswerPair> pairs,
                          const AnlsConfig& cfg = {}) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [pred, gt] : pairs) {
    if (pred) sum += anls_single(*pred, gt, cfg);
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace docground
