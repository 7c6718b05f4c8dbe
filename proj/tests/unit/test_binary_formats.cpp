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

#include <bit>
#include <cstring>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "docground/checkpoint.hpp"
#include "docground/embeddings.hpp"
#include "docground/errors.hpp"
#include "json.hpp"
#include "support/synthetic.hpp"

namespace docground {
namespace {

// Byte builders written independently of the library's encoder.
void u32le(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void f32le(std::string& s, float f) { u32le(s, std::bit_cast<std::uint32_t>(f)); }

std::string one_record_file() {
  std::string s = "EMB1";
  s.push_back(1);
  u32le(s, 2);
  u32le(s, 1);
  u32le(s, 1);
  s.push_back(3);
  s.push_back(0);
  s += "q01";
  f32le(s, 0.5f);
  f32le(s, -1.25f);
  f32le(s, 2.0f);
  s.push_back(1);
  for (float v : {0.25f, 0.5f, 0.75f, 1.0f}) f32le(s, v);
  return s;
}

TEST(EmbeddingFileTest, ReadsHandBuiltBytes) {
  std::istringstream in(one_record_file());
  const EmbeddingSet set = read_embeddings(in);
  EXPECT_EQ(set.visual_dim, 2u);
  EXPECT_EQ(set.text_dim, 1u);
  ASSERT_EQ(set.records.size(), 1u);
  const EmbeddingRecord& r = set.records[0];
  EXPECT_EQ(r.qa_id, "q01");
  EXPECT_EQ(r.visual, (std::vector<float>{0.5f, -1.25f}));
  EXPECT_EQ(r.text, (std::vector<float>{2.0f}));
  EXPECT_EQ(*r.target, (NormBox{0.25, 0.5, 0.75, 1.0}));
}

TEST(EmbeddingFileTest, WritesTheSameBytes) {
  std::istringstream in(one_record_file());
  std::ostringstream out;
  write_embeddings(out, read_embeddings(in));
  EXPECT_EQ(out.str(), one_record_file());
}

TEST(EmbeddingFileTest, RoundTripsSyntheticSets) {
  synthetic::AffineBoxTask task(5, 3, 1);
  EmbeddingSet set{5, 3, task.sample(20, 0.01)};
  set.records[4].target.reset();
  std::ostringstream out;
  write_embeddings(out, set);
  std::istringstream in(out.str());
  const EmbeddingSet back = read_embeddings(in);
  ASSERT_EQ(back.records.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(back.records[i].qa_id, set.records[i].qa_id);
    EXPECT_EQ(back.records[i].visual, set.records[i].visual);
    EXPECT_EQ(back.records[i].target.has_value(), set.records[i].target.has_value());
  }
  EXPECT_NE(back.find("syn7"), nullptr);
  EXPECT_EQ(back.find("nope"), nullptr);
}

TEST(EmbeddingFileTest, RejectsCorruption) {
  auto rejects = [](std::string bytes) {
    std::istringstream in(bytes);
    EXPECT_THROW(read_embeddings(in), DataError);
  };
  std::string s = one_record_file();
  rejects(s.substr(0, s.size() - 2));     // truncated
  rejects(s + "x");                       // trailing bytes
  rejects("EMB2" + s.substr(4));          // magic
  std::string bad_version = s;
  bad_version[4] = 2;
  rejects(bad_version);
  std::string nan = s.substr(0, 22);
  f32le(nan, std::numeric_limits<float>::quiet_NaN());
  nan += s.substr(26);
  rejects(nan);
  std::string bad_flag = s;
  bad_flag[s.size() - 17] = 2;
  rejects(bad_flag);
  std::string inverted = s.substr(0, s.size() - 16);
  for (float v : {0.75f, 0.5f, 0.25f, 1.0f}) f32le(inverted, v);
  rejects(inverted);
}

TEST(EmbeddingFileTest, DuplicateIdsAreRejected) {
  synthetic::AffineBoxTask task(2, 2, 1);
  EmbeddingSet set{2, 2, task.sample(2, 0.0)};
  set.records[1].qa_id = set.records[0].qa_id;
  std::ostringstream out;
  write_embeddings(out, set);
  std::istringstream in(out.str());
  EXPECT_THROW(read_embeddings(in), ValidationError);
}

Checkpoint<float> small_checkpoint() {
  TrainConfig cfg;
  cfg.latent_dim = 3;
  cfg.hidden_dim = 2;
  cfg.seed = 5;
  return Checkpoint<float>{init_params<float>(4, 2, cfg), cfg, 7, 0.625, 0.01};
}

TEST(CheckpointFileTest, LayoutIsHeaderThenFloats) {
  const Checkpoint<float> ck = small_checkpoint();
  std::ostringstream out;
  write_checkpoint(out, ck);
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.substr(0, 4), "DXV0");
  EXPECT_EQ(bytes[4], 1);
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[5 + i])) << (8 * i);
  const auto header = nlohmann::json::parse(bytes.substr(9, len));
  EXPECT_EQ(header.at("epoch"), 7);
  EXPECT_EQ(header.at("tensors").at(0).at("name"), "w_visual");
  EXPECT_EQ(header.at("tensors").at(0).at("shape"), nlohmann::json::array({4, 3}));
  EXPECT_EQ(bytes.size(), 9 + len + 4 * ck.params.parameter_count());
  float first = 0;
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[9 + len + i])) << (8 * i);
  std::memcpy(&first, &bits, 4);
  EXPECT_EQ(first, ck.params[kWVisual].values[0]);
}

TEST(CheckpointFileTest, RoundTrips) {
  const Checkpoint<float> ck = small_checkpoint();
  std::ostringstream out;
  write_checkpoint(out, ck);
  std::istringstream in(out.str());
  const Checkpoint<float> back = read_checkpoint(in);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.epoch, 7u);
  EXPECT_EQ(back.val_mean_iou, 0.625);
  std::ostringstream again;
  write_checkpoint(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(CheckpointFileTest, RejectsCorruption) {
  std::ostringstream out;
  write_checkpoint(out, small_checkpoint());
  const std::string s = out.str();
  auto rejects = [](const std::string& bytes) {
    std::istringstream in(bytes);
    EXPECT_THROW(read_checkpoint(in), DataError);
  };
  rejects(s.substr(0, s.size() - 1));
  rejects(s + "z");
  rejects("DXV1" + s.substr(4));
  std::string nan = s;
  const std::string nan_bits = [] {
    std::string b;
    f32le(b, std::numeric_limits<float>::infinity());
    return b;
  }();
  nan.replace(s.size() - 4, 4, nan_bits);
  rejects(nan);
}

TEST(TrainConfigJsonTest, RoundTripsAndDefaults) {
  TrainConfig c;
  c.latent_dim = 7;
  c.text_mode = TextMode::answer;
  EXPECT_EQ(train_config_from_json(to_json(c)), c);
  EXPECT_EQ(train_config_from_json(nlohmann::json::object()), TrainConfig{});
  EXPECT_THROW(train_config_from_json({{"latent_dim", "big"}}), ConfigError);
}

}  // namespace
}  // namespace docground
