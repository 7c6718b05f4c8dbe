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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "docground/binary_io.hpp"
#include "docground/errors.hpp"
#include "docground/regressor.hpp"

// EMB1 embedding files:
//   "EMB1" | u8 version=1 | u32 Dv | u32 Dt | u32 count
//   per record: u16 id_len | id bytes | Dv f32 | Dt f32 | u8 has_target
//               | 4 f32 (x1, y1, x2, y2) when has_target
// All integers and floats little-endian.

namespace docground {

struct EmbeddingSet {
  std::uint32_t visual_dim = 0;
  std::uint32_t text_dim = 0;
  std::vector<EmbeddingRecord> records;

  const EmbeddingRecord* find(const std::string& qa_id) const {
    for (const EmbeddingRecord& r : records)
      if (r.qa_id == qa_id) return &r;
    return nullptr;
  }
};

inline constexpr std::uint8_t kEmbeddingVersion = 1;

inline void write_embeddings(std::ostream& out, const EmbeddingSet& set) {
  out.write("EMB1", 4);
  le::put_u8(out, kEmbeddingVersion);
  le::put_u32(out, set.visual_dim);
  le::put_u32(out, set.text_dim);
  if (set.records.size() > std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("too many embedding records");
  le::put_u32(out, static_cast<std::uint32_t>(set.records.size()));
  for (const EmbeddingRecord& r : set.records) {
    if (r.qa_id.size() > std::numeric_limits<std::uint16_t>::max())
      throw ConfigError("qa_id too long for EMB1: " + r.qa_id.substr(0, 32));
    if (r.visual.size() != set.visual_dim || r.text.size() != set.text_dim)
      throw ConfigError("record '" + r.qa_id + "' does not match the declared dimensions");
    le::put_u16(out, static_cast<std::uint16_t>(r.qa_id.size()));
    out.write(r.qa_id.data(), static_cast<std::streamsize>(r.qa_id.size()));
    for (float v : r.visual) le::put_f32(out, v);
    for (float v : r.text) le::put_f32(out, v);
    le::put_u8(out, r.target ? 1 : 0);
    if (r.target) {
      le::put_f32(out, static_cast<float>(r.target->x1));
      le::put_f32(out, static_cast<float>(r.target->y1));
      le::put_f32(out, static_cast<float>(r.target->x2));
      le::put_f32(out, static_cast<float>(r.target->y2));
    }
  }
  if (!out) throw IoError("failed writing embedding file");
}

// Rejects non-finite components, invalid target boxes, duplicate ids and
// trailing bytes.
inline EmbeddingSet read_embeddings(std::istream& in) {
  le::Reader r(in, "EMB1");
  r.expect_magic("EMB1");
  const std::uint8_t version = r.u8();
  if (version != kEmbeddingVersion)
    throw DataError("EMB1: unsupported version " + std::to_string(version));
  EmbeddingSet set;
  set.visual_dim = r.u32();
  set.text_dim = r.u32();
  const std::uint32_t count = r.u32();
  std::set<std::string> seen;
  set.records.reserve(std::min<std::uint32_t>(count, 1u << 20));
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.qa_id = r.str(r.u16());
    if (!seen.insert(rec.qa_id).second)
      throw ValidationError("EMB1: duplicate qa_id '" + rec.qa_id + "'");
    rec.visual.resize(set.visual_dim);
    rec.text.resize(set.text_dim);
    for (float& v : rec.visual) v = r.f32();
    for (float& v : rec.text) v = r.f32();
    for (float v : rec.visual)
      if (!std::isfinite(v)) throw ValidationError("EMB1: non-finite visual value in '" + rec.qa_id + "'");
    for (float v : rec.text)
      if (!std::isfinite(v)) throw ValidationError("EMB1: non-finite text value in '" + rec.qa_id + "'");
    const std::uint8_t has_target = r.u8();
    if (has_target > 1)
      throw ValidationError("EMB1: bad has_target flag for '" + rec.qa_id + "'");
    if (has_target) {
      NormBox b;
      b.x1 = r.f32();
      b.y1 = r.f32();
      b.x2 = r.f32();
      b.y2 = r.f32();
      if (!b.valid())
        throw ValidationError("EMB1: invalid target box for '" + rec.qa_id + "'");
      rec.target = b;
    }
    set.records.push_back(std::move(rec));
  }
  if (!r.at_end()) throw DataError("EMB1: trailing bytes after the last record");
  return set;
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  return read_embeddings(in);
}

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file " + path.string());
  write_embeddings(out, set);
}

}  // namespace docground
