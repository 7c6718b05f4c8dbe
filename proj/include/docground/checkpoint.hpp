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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "docground/binary_io.hpp"
#include "docground/errors.hpp"
#include "docground/json_util.hpp"
#include "docground/regressor.hpp"
#include "json.hpp"

// DXV0 checkpoints:
//   "DXV0" | u8 version | u32 header_len | header JSON (config, epoch,
//   metrics, tensor shapes) | tensors in declared order, f32 row-major.

namespace docground {

inline constexpr std::uint8_t kCheckpointVersion = 1;

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"latent_dim", c.latent_dim},     {"hidden_dim", c.hidden_dim},
          {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"epochs", c.epochs},             {"seed", c.seed},
          {"text_mode", to_string(c.text_mode)}, {"beta1", c.beta1},
          {"beta2", c.beta2},               {"epsilon", c.epsilon}};
}

// Missing keys keep their defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.text_mode = parse_text_mode(j.value("text_mode", std::string(to_string(c.text_mode))));
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  return c;
}

template <typename T>
void write_checkpoint(std::ostream& out, const Checkpoint<T>& ck) {
  ck.params.check_shapes();
  nlohmann::json shapes = nlohmann::json::array();
  for (std::size_t id = 0; id < kParamCount; ++id)
    shapes.push_back({{"name", kParamNames[id]}, {"shape", ck.params[id].shape}});
  const nlohmann::json header = {
      {"config", to_json(ck.config)},
      {"epoch", ck.epoch},
      {"metrics", {{"val_mean_iou", ck.val_mean_iou}, {"train_loss", ck.train_loss}}},
      {"visual_dim", ck.params.visual_dim()},
      {"text_dim", ck.params.text_dim()},
      {"tensors", shapes}};
  const std::string text = dump_json(header);
  out.write("DXV0", 4);
  le::put_u8(out, kCheckpointVersion);
  le::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : ck.params.tensors)
    for (T v : t.values) le::put_f32(out, static_cast<float>(v));
  if (!out) throw IoError("failed writing checkpoint");
}

inline Checkpoint<float> read_checkpoint(std::istream& in) {
  le::Reader r(in, "DXV0");
  r.expect_magic("DXV0");
  const std::uint8_t version = r.u8();
  if (version != kCheckpointVersion)
    throw DataError("DXV0: unsupported version " + std::to_string(version));
  const std::uint32_t len = r.u32();
  if (len > (1u << 24)) throw DataError("DXV0: header too large");
  nlohmann::json header = nlohmann::json::parse(r.str(len), nullptr, false);
  if (header.is_discarded() || !header.is_object())
    throw DataError("DXV0: header is not a JSON object");

  Checkpoint<float> ck;
  try {
    ck.config = train_config_from_json(header.at("config"));
    ck.epoch = header.at("epoch").get<std::size_t>();
    ck.val_mean_iou = header.at("metrics").at("val_mean_iou").get<double>();
    ck.train_loss = header.at("metrics").at("train_loss").get<double>();
    const auto dv = header.at("visual_dim").get<std::size_t>();
    const auto dt = header.at("text_dim").get<std::size_t>();
    ck.params = RegressorParams<float>::zeros(dv, dt, ck.config.latent_dim,
                                              ck.config.hidden_dim);
    const auto& shapes = header.at("tensors");
    if (!shapes.is_array() || shapes.size() != kParamCount)
      throw DataError("DXV0: wrong tensor count");
    for (std::size_t id = 0; id < kParamCount; ++id) {
      if (shapes[id].at("name").get<std::string>() != kParamNames[id] ||
          shapes[id].at("shape").get<std::vector<std::size_t>>() != ck.params[id].shape)
        throw DataError(std::string("DXV0: tensor ") + kParamNames[id] +
                        " does not match the declared config");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("DXV0: malformed header: ") + e.what());
  }
  if (!(ck.val_mean_iou >= 0.0 && ck.val_mean_iou <= 1.0))
    throw DataError("DXV0: val_mean_iou outside [0, 1]");
  for (auto& t : ck.params.tensors)
    for (float& v : t.values) v = r.f32();
  if (!r.at_end()) throw DataError("DXV0: trailing bytes after tensors");
  if (!ck.params.all_finite()) throw DataError("DXV0: non-finite parameter");
  return ck;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ck);
}

inline Checkpoint<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace docground
