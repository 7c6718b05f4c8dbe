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

#include "docground/geometry.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "docground/errors.hpp"
#include "docground/rng.hpp"
#include "support/synthetic.hpp"

namespace docground {
namespace {

TEST(FromPromptBoxTest, ConvertsCornerForm) {
  const ConvertedBox c = from_prompt_box({100, 200, 300, 400});
  EXPECT_FALSE(c.clamped);
  EXPECT_DOUBLE_EQ(c.box.x1, 0.1);
  EXPECT_DOUBLE_EQ(c.box.y1, 0.2);
  EXPECT_DOUBLE_EQ(c.box.x2, 0.4);
  EXPECT_DOUBLE_EQ(c.box.y2, 0.6);
}

TEST(FromPromptBoxTest, ClampsOutOfRangeValues) {
  const ConvertedBox c = from_prompt_box({-20, 900, 50, 300});
  EXPECT_TRUE(c.clamped);
  EXPECT_DOUBLE_EQ(c.box.x1, 0.0);
  EXPECT_DOUBLE_EQ(c.box.x2, 0.05);
  EXPECT_DOUBLE_EQ(c.box.y1, 0.9);
  EXPECT_DOUBLE_EQ(c.box.y2, 1.0);
  EXPECT_TRUE(c.box.valid());
}

TEST(FromPromptBoxTest, ZeroSizeIsDegenerateButValid) {
  const ConvertedBox c = from_prompt_box({500, 500, 0, 0});
  EXPECT_FALSE(c.clamped);
  EXPECT_TRUE(c.box.valid());
  EXPECT_DOUBLE_EQ(c.box.area(), 0.0);
}

TEST(ToPromptBoxTest, RoundsHalfUp) {
  EXPECT_EQ(round_half_up(0.5), 1);
  EXPECT_EQ(round_half_up(1.5), 2);
  EXPECT_EQ(round_half_up(2.4999), 2);
  const PromptBox p = to_prompt_box({0.1235, 0.0, 0.5, 1.0});
  EXPECT_EQ(p.x, 124);
  EXPECT_EQ(p.y, 0);
  EXPECT_EQ(p.w, 377);
  EXPECT_EQ(p.h, 1000);
}

TEST(RoundTripTest, PromptBoxSurvivesConversion) {
  for (int x = 0; x <= 1000; x += 37)
    for (int w = 0; x + w <= 1000; w += 41) {
      const PromptBox p{x, 1000 - w, w, w};
      EXPECT_EQ(to_prompt_box(from_prompt_box(p).box), p);
    }
}

TEST(IouTest, HandDerivedOneThird) {
  // Equal boxes overlapping by half their width: 0.02 / 0.06.
  const NormBox a{0.0, 0.0, 0.2, 0.2};
  const NormBox b{0.1, 0.0, 0.3, 0.2};
  EXPECT_NEAR(iou(a, b), 1.0 / 3.0, 1e-12);
}

TEST(IouTest, IdentityDisjointAndDegenerate) {
  const NormBox a{0.1, 0.1, 0.4, 0.5};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, {0.5, 0.5, 0.9, 0.9}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, {0.4, 0.1, 0.6, 0.5}), 0.0);  // shared edge
  const NormBox point{0.3, 0.3, 0.3, 0.3};
  EXPECT_DOUBLE_EQ(iou(point, point), 0.0);
}

TEST(IouTest, RandomPairProperties) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const NormBox a = synthetic::random_box(rng);
    const NormBox b = synthetic::random_box(rng);
    const double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    if (a.contains(b) && a.area() > 0) EXPECT_NEAR(ab, b.area() / a.area(), 1e-12);
  }
}

TEST(UnionBoxTest, CoversAllInputs) {
  const std::vector<NormBox> boxes = {{0.1, 0.2, 0.3, 0.25}, {0.35, 0.18, 0.5, 0.26}};
  const NormBox u = union_box(boxes);
  EXPECT_EQ(u, (NormBox{0.1, 0.18, 0.5, 0.26}));
  for (const NormBox& b : boxes) EXPECT_TRUE(u.contains(b));
}

TEST(UnionBoxTest, EmptyInputIsAnError) {
  EXPECT_THROW(union_box({}), ConfigError);
}

TEST(MeanIouTest, AbsentPredictionCountsAsZero) {
  const NormBox g{0.0, 0.0, 0.5, 0.5};
  const std::vector<BoxPair> pairs = {{g, g}, {std::nullopt, g}};
  EXPECT_DOUBLE_EQ(mean_iou(pairs), 0.5);
}

TEST(MeanIouTest, EmptyListIsZero) {
  EXPECT_DOUBLE_EQ(mean_iou({}), 0.0);
}

}  // namespace
}  // namespace docground
