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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docground/dataset.hpp"
#include "docground/errors.hpp"
#include "docground/geometry.hpp"
#include "docground/ocr_locator.hpp"
#include "json.hpp"

namespace docground {

enum class PromptStrategy { zero_shot, cot, anchors };
enum class QuestionField { question, rephrased_question };

struct Exemplar {
  std::string question;
  std::string answer_value;
  PromptBox box;
};

struct PromptSpec {
  PromptStrategy strategy = PromptStrategy::zero_shot;
  std::vector<Exemplar> exemplars;
  std::size_t anchor_budget = 100;
  QuestionField question_field = QuestionField::question;

  void validate() const {
    if (strategy == PromptStrategy::cot && exemplars.empty())
      throw ConfigError("CoT prompting requires at least one exemplar");
    if (strategy == PromptStrategy::anchors && anchor_budget < 1)
      throw ConfigError("anchor prompting requires anchor_budget >= 1");
  }
};

inline const char* to_string(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::cot:
      return "cot";
    case PromptStrategy::anchors:
      return "anchors";
    case PromptStrategy::zero_shot:
      break;
  }
  return "zero_shot";
}

// Label used in report tables.
inline const char* display_name(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::cot:
      return "CoT";
    case PromptStrategy::anchors:
      return "Anchors";
    case PromptStrategy::zero_shot:
      break;
  }
  return "Zero-shot";
}

inline PromptStrategy parse_strategy(std::string_view s) {
  if (s == "zero_shot" || s == "zero-shot") return PromptStrategy::zero_shot;
  if (s == "cot") return PromptStrategy::cot;
  if (s == "anchors") return PromptStrategy::anchors;
  throw ConfigError("unknown prompt strategy '" + std::string(s) + "'");
}

inline QuestionField parse_question_field(std::string_view s) {
  if (s == "question") return QuestionField::question;
  if (s == "rephrased_question") return QuestionField::rephrased_question;
  throw ConfigError("unknown question field '" + std::string(s) + "'");
}

inline std::string format_position(const PromptBox& b) {
  return "[" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " +
         std::to_string(b.w) + ", " + std::to_string(b.h) + "]";
}

inline std::string build_zero_shot(std::string_view question) {
  if (question.empty()) throw ConfigError("question must not be empty");
  std::string p;
  p.reserve(question.size() + 256);
  p += "Based only on the document image, answer the following question:\n";
  p += "Question: ";
  p += question;
  p += "\n";
  p += "Provide ONLY a JSON response in the following format:\n";
  p += "{\n";
  p += "  \"content\": \"answer\",\n";
  p += "  \"position\": [x, y, w, h]\n";
  p += "}\n";
  p += "Each position value MUST be in the range [0, 1000].\n";
  return p;
}

// One line per exemplar, e.g.
//   Q: "What is the invoice date?" A: {"value":"2025-08-19", "position": [100, 50, 200, 30]}
inline std::string format_exemplar(const Exemplar& e) {
  return "Q: \"" + e.question + "\" A: {\"value\":" +
         nlohmann::json(e.answer_value)
             .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) +
         ", \"position\": " + format_position(e.box) + "}";
}

inline std::string build_cot(std::string_view question,
                             std::span<const Exemplar> exemplars) {
  if (exemplars.empty())
    throw ConfigError("CoT prompting requires at least one exemplar");
  std::string p;
  for (const Exemplar& e : exemplars) {
    p += format_exemplar(e);
    p += '\n';
  }
  p += '\n';
  p += build_zero_shot(question);
  return p;
}

inline std::string format_anchor(const OcrToken& t) {
  return "The word \"" + t.text + "\" is at " +
         format_position(to_prompt_box(t.box));
}

// Up to `budget` anchor lines in reading order, then the zero-shot body.
// With no tokens the result equals build_zero_shot.
inline std::string build_anchors(std::string_view question,
                                 std::span<const OcrToken> tokens,
                                 std::size_t budget) {
  if (budget < 1) throw ConfigError("anchor_budget must be >= 1");
  const std::vector<std::size_t> order = reading_order_indices(tokens);
  const std::size_t n = std::min(budget, order.size());
  std::string p;
  for (std::size_t k = 0; k < n; ++k) {
    p += format_anchor(tokens[order[k]]);
    p += '\n';
  }
  if (n > 0) p += '\n';
  p += build_zero_shot(question);
  return p;
}

inline std::string build_prompt(const PromptSpec& spec,
                                std::string_view question,
                                std::span<const OcrToken> page_tokens) {
  spec.validate();
  switch (spec.strategy) {
    case PromptStrategy::cot:
      return build_cot(question, spec.exemplars);
    case PromptStrategy::anchors:
      return build_anchors(question, page_tokens, spec.anchor_budget);
    case PromptStrategy::zero_shot:
      break;
  }
  return build_zero_shot(question);
}

inline const std::string& select_question(const QaRecord& qa,
                                          QuestionField field) {
  return field == QuestionField::rephrased_question && !qa.rephrased_question.empty()
             ? qa.rephrased_question
             : qa.question;
}

}  // namespace docground
