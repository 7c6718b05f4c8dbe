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
#include <cmath>
#include <optional>
#include <span>
#include <utility>

#include "docground/errors.hpp"

namespace docground {

// Corner-form box in page-relative fractions, 0 <= x1 <= x2 <= 1 and
// likewise for y. This is the representation every score is computed on.
struct NormBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }

  bool valid() const noexcept {
    return 0.0 <= x1 && x1 <= x2 && x2 <= 1.0 && 0.0 <= y1 && y1 <= y2 &&
           y2 <= 1.0;
  }

  bool contains(const NormBox& other) const noexcept {
    return x1 <= other.x1 && y1 <= other.y1 && other.x2 <= x2 &&
           other.y2 <= y2;
  }

  friend bool operator==(const NormBox&, const NormBox&) = default;
};

// Top-left plus extent in thousandths of the page, as used in prompts and
// in the corpus interchange format.
struct PromptBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const PromptBox&, const PromptBox&) = default;
};

struct ConvertedBox {
  NormBox box;
  bool clamped = false;
};

inline constexpr int kPromptScale = 1000;

namespace detail {

inline int clamp_prompt_value(int v, bool& clamped) {
  if (v < 0) {
    clamped = true;
    return 0;
  }
  if (v > kPromptScale) {
    clamped = true;
    return kPromptScale;
  }
  return v;
}

}  // namespace detail

// Never fails: out-of-range components are clamped onto the page and the
// clamp is reported through ConvertedBox::clamped.
inline ConvertedBox from_prompt_box(const PromptBox& pb) {
  bool clamped = false;
  const int x = detail::clamp_prompt_value(pb.x, clamped);
  const int y = detail::clamp_prompt_value(pb.y, clamped);
  const int w = detail::clamp_prompt_value(pb.w, clamped);
  const int h = detail::clamp_prompt_value(pb.h, clamped);
  const int right = detail::clamp_prompt_value(x + w, clamped);
  const int bottom = detail::clamp_prompt_value(y + h, clamped);
  constexpr double scale = kPromptScale;
  return {NormBox{x / scale, y / scale, right / scale, bottom / scale},
          clamped};
}

// Round half up, so 0.5 thousandths always goes to 1.
inline int round_half_up(double v) {
  return static_cast<int>(std::floor(v + 0.5));
}

inline PromptBox to_prompt_box(const NormBox& nb) {
  constexpr double scale = kPromptScale;
  return PromptBox{round_half_up(scale * nb.x1), round_half_up(scale * nb.y1),
                   round_half_up(scale * (nb.x2 - nb.x1)),
                   round_half_up(scale * (nb.y2 - nb.y1))};
}

// Intersection over union. A zero-area union scores 0 rather than 0/0 so
// that two degenerate boxes never count as a match.
inline double iou(const NormBox& a, const NormBox& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Smallest box enclosing every input.
inline NormBox union_box(std::span<const NormBox> boxes) {
  if (boxes.empty()) throw ConfigError("union_box: empty box list");
  NormBox out = boxes.front();
  for (const NormBox& b : boxes.subspan(1)) {
    out.x1 = std::min(out.x1, b.x1);
    out.y1 = std::min(out.y1, b.y1);
    out.x2 = std::max(out.x2, b.x2);
    out.y2 = std::max(out.y2, b.y2);
  }
  return out;
}

// A predicted box paired with its ground truth. An absent prediction
// scores 0.
using BoxPair = std::pair<std::optional<NormBox>, NormBox>;

inline double pair_iou(const BoxPair& p) noexcept {
  return p.first ? iou(*p.first, p.second) : 0.0;
}

// Mean IoU over all pairs, summed in the given order. Empty input gives 0.
inline double mean_iou(std::span<const BoxPair> pairs) noexcept {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const BoxPair& p : pairs) sum += pair_iou(p);
  return sum / static_cast<double>(pairs.size());
}

}  // namespace docground
