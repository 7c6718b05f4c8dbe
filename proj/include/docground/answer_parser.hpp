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
#include <array>
#include <cctype>
#include <cstdlib>
#include <initializer_list>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docground/geometry.hpp"
#include "docground/text_metrics.hpp"
#include "docground/json_util.hpp"
#include "json.hpp"

namespace docground {

enum class ParseStatus { clean, recovered, text_only, failed };

inline const char* to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::clean:
      return "clean";
    case ParseStatus::recovered:
      return "recovered";
    case ParseStatus::text_only:
      return "text_only";
    case ParseStatus::failed:
      break;
  }
  return "failed";
}

inline std::optional<ParseStatus> parse_status_from_string(std::string_view s) {
  if (s == "clean") return ParseStatus::clean;
  if (s == "recovered") return ParseStatus::recovered;
  if (s == "text_only") return ParseStatus::text_only;
  if (s == "failed") return ParseStatus::failed;
  return std::nullopt;
}

// What a model said, as far as it could be understood.
struct Prediction {
  std::string content;
  std::optional<NormBox> box;
  ParseStatus status = ParseStatus::failed;
  std::string raw;

  bool usable() const noexcept {
    return status == ParseStatus::clean || status == ParseStatus::recovered;
  }
};

namespace parser_detail {

using nlohmann::json;

inline std::string strip_fences(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw.compare(i, 3, "```") == 0) {
      i += 3;
      while (i < raw.size() &&
             (std::isalnum(static_cast<unsigned char>(raw[i])) || raw[i] == '_'))
        ++i;
      continue;
    }
    out.push_back(raw[i++]);
  }
  return out;
}

// End (exclusive) of the balanced {...} starting at `start`, honoring
// double-quoted strings and their escapes.
inline std::optional<std::size_t> balanced_end(std::string_view s,
                                               std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

inline std::optional<json> parse_object(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Lenient rewrite of almost-JSON: single-quoted strings, bare keys,
// Python literals, trailing commas, typographic quotes and a truncated
// tail (unterminated string, missing closers).
inline std::string repair(std::string_view region) {
  std::string s;
  s.reserve(region.size());
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region.compare(i, 3, "\xE2\x80\x9C") == 0 ||
        region.compare(i, 3, "\xE2\x80\x9D") == 0) {
      s.push_back('"');
      i += 2;
    } else {
      s.push_back(region[i]);
    }
  }

  std::string out;
  out.reserve(s.size() + 8);
  std::vector<char> closers;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\' && i + 1 < s.size()) {
        if (quote == '\'' && s[i + 1] == '\'') {
          out.push_back('\'');
        } else {
          out.push_back(c);
          out.push_back(s[i + 1]);
        }
        ++i;
      } else if (c == quote) {
        out.push_back('"');
        quote = 0;
      } else if (c == '"') {
        out += "\\\"";
      } else if (c == '\n') {
        out += "\\n";
      } else {
        out.push_back(c);
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      out.push_back('"');
    } else if (c == '{' || c == '[') {
      closers.push_back(c == '{' ? '}' : ']');
      out.push_back(c);
    } else if (c == '}' || c == ']') {
      if (!closers.empty()) closers.pop_back();
      while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())))
        out.pop_back();
      if (!out.empty() && out.back() == ',') out.pop_back();
      out.push_back(c);
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      std::string word(s.substr(i, j - i));
      std::size_t k = j;
      while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
      if (k < s.size() && s[k] == ':') {
        out += "\"" + word + "\"";
      } else if (word == "True") {
        out += "true";
      } else if (word == "False") {
        out += "false";
      } else if (word == "None") {
        out += "null";
      } else {
        out += word;
      }
      i = j - 1;
    } else {
      out.push_back(c);
    }
  }
  if (quote) out.push_back('"');
  while (!closers.empty()) {
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())))
      out.pop_back();
    if (!out.empty() && (out.back() == ',' || out.back() == ':')) {
      if (out.back() == ':') out += "null";
      else out.pop_back();
    }
    out.push_back(closers.back());
    closers.pop_back();
  }
  return out;
}

// Like balanced_end but treats both quote styles as strings; returns the
// end of input when the object never closes.
inline std::size_t lenient_end(std::string_view s, std::size_t start) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return s.size();
}

inline std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Looks up the first of `preferred` exactly, then any of `aliases`
// case-insensitively. Sets `inexact` when only an alias matched.
inline const json* find_key(const json& obj,
                            std::initializer_list<const char*> preferred,
                            std::initializer_list<const char*> aliases,
                            bool& inexact) {
  for (const char* k : preferred) {
    if (auto it = obj.find(k); it != obj.end() && !it->is_null()) return &*it;
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (it->is_null()) continue;
    const std::string key = lower_ascii(it.key());
    for (const char* a : aliases) {
      if (key == a) {
        inexact = true;
        return &*it;
      }
    }
  }
  return nullptr;
}

inline std::optional<double> number_of(const json& v, bool& coerced) {
  if (v.is_number()) {
    const double d = v.get<double>();
    if (std::isfinite(d)) return d;
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end != s.c_str() && *end == '\0' && std::isfinite(d)) {
      coerced = true;
      return d;
    }
  }
  return std::nullopt;
}

// Position values as [x, y, w, h]; also accepts {"x","y","w","h"} objects
// and a singly nested array, flagging those as inexact.
inline std::optional<std::array<double, 4>> position_of(const json& v,
                                                        bool& inexact) {
  std::array<double, 4> out{};
  if (v.is_object()) {
    static constexpr const char* keys[4][2] = {
        {"x", "left"}, {"y", "top"}, {"w", "width"}, {"h", "height"}};
    for (int i = 0; i < 4; ++i) {
      const json* f = nullptr;
      for (const char* k : keys[i]) {
        if (auto it = v.find(k); it != v.end()) {
          f = &*it;
          break;
        }
      }
      if (!f) return std::nullopt;
      auto d = number_of(*f, inexact);
      if (!d) return std::nullopt;
      out[i] = *d;
    }
    inexact = true;
    return out;
  }
  if (!v.is_array()) return std::nullopt;
  if (v.size() == 1 && v[0].is_array()) {
    inexact = true;
    return position_of(v[0], inexact);
  }
  if (v.size() != 4) return std::nullopt;
  for (int i = 0; i < 4; ++i) {
    auto d = number_of(v[i], inexact);
    if (!d) return std::nullopt;
    out[i] = *d;
  }
  return out;
}

inline Prediction interpret(const json& obj, std::string_view raw,
                            bool repaired) {
  Prediction p;
  p.raw = std::string(raw);
  bool inexact = repaired;

  if (const json* c = find_key(obj, {"content", "value"},
                               {"content", "value", "answer", "text"},
                               inexact)) {
    if (c->is_string()) {
      p.content = c->get<std::string>();
    } else if (c->is_number() || c->is_boolean()) {
      p.content = c->dump();
      inexact = true;
    }
  }
  const bool has_content =
      !normalize_text(p.content, {.trim = true,
                                  .collapse_whitespace = false,
                                  .case_fold = false})
           .empty();
  if (!has_content) {
    p.content.clear();
    p.status = ParseStatus::failed;
    return p;
  }

  bool pos_inexact = false;
  const json* pos = find_key(obj, {"position"},
                             {"position", "bbox", "box", "bounding_box",
                              "coordinates", "location"},
                             pos_inexact);
  std::optional<std::array<double, 4>> values;
  if (pos) values = position_of(*pos, pos_inexact);
  if (!values) {
    p.status = ParseStatus::text_only;
    return p;
  }
  PromptBox pb{};
  bool out_of_range = false;
  int* dst[4] = {&pb.x, &pb.y, &pb.w, &pb.h};
  for (int i = 0; i < 4; ++i) {
    const double r = std::floor((*values)[i] + 0.5);
    const double clamped = std::clamp(r, -1.0, 1001.0);
    out_of_range |= r != clamped;
    *dst[i] = static_cast<int>(clamped);
  }
  const ConvertedBox cb = from_prompt_box(pb);
  p.box = cb.box;
  p.status = (inexact || pos_inexact || cb.clamped || out_of_range)
                 ? ParseStatus::recovered
                 : ParseStatus::clean;
  return p;
}

}  // namespace parser_detail

// First balanced {...} region that parses as a JSON object, after markdown
// code fences are removed. Braces inside strings do not count.
inline std::optional<std::string> extract_json_object(std::string_view raw) {
  const std::string text = parser_detail::strip_fences(raw);
  for (std::size_t i = text.find('{'); i != std::string::npos;
       i = text.find('{', i + 1)) {
    auto end = parser_detail::balanced_end(text, i);
    if (!end) continue;
    std::string candidate = text.substr(i, *end - i);
    if (parser_detail::parse_object(candidate)) return candidate;
  }
  return std::nullopt;
}

// Total: never throws, and every outcome is reported through the status.
// Recovery ladder: strict JSON object, then repaired almost-JSON, then the
// whole response as prose.
inline Prediction parse_prediction(std::string_view raw) noexcept {
  using namespace parser_detail;
  try {
    if (auto candidate = extract_json_object(raw)) {
      if (auto obj = parse_object(*candidate)) {
        Prediction p = interpret(*obj, raw, false);
        if (p.status != ParseStatus::failed) return p;
      }
    }
    const std::string text = strip_fences(raw);
    for (std::size_t i = text.find('{'); i != std::string::npos;
         i = text.find('{', i + 1)) {
      const std::size_t end = lenient_end(text, i);
      if (auto obj = parse_object(repair(std::string_view(text).substr(i, end - i)))) {
        Prediction p = interpret(*obj, raw, true);
        if (p.status != ParseStatus::failed) return p;
      }
    }

    Prediction p;
    p.raw = std::string(raw);
    const bool looks_structured = text.find('{') != std::string::npos;
    std::string prose = normalize_text(
        text, {.trim = true, .collapse_whitespace = false, .case_fold = false});
    if (!prose.empty() && !looks_structured) {
      p.content = std::move(prose);
      p.status = ParseStatus::text_only;
    }
    return p;
  } catch (...) {
    Prediction p;
    try {
      p.raw = std::string(raw);
    } catch (...) {
    }
    return p;
  }
}

inline nlohmann::json to_json(const Prediction& p) {
  nlohmann::json j;
  j["content"] = p.content;
  if (p.box) {
    j["box"] = {p.box->x1, p.box->y1, p.box->x2, p.box->y2};
  } else {
    j["box"] = nullptr;
  }
  j["status"] = to_string(p.status);
  return j;
}

}  // namespace docground
