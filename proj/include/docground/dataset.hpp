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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "docground/errors.hpp"
#include "docground/geometry.hpp"
#include "docground/rng.hpp"
#include "docground/text_metrics.hpp"
#include "docground/json_util.hpp"
#include "json.hpp"

namespace docground {

struct PageInfo {
  std::string image;  // relative to the corpus file's directory
  int width = 0;
  int height = 0;

  friend bool operator==(const PageInfo&, const PageInfo&) = default;
};

struct OcrToken {
  std::string text;
  NormBox box;
  int page = 0;

  friend bool operator==(const OcrToken&, const OcrToken&) = default;
};

struct DocumentRecord {
  std::string doc_id;
  std::vector<PageInfo> pages;
  std::vector<OcrToken> tokens;  // source order

  friend bool operator==(const DocumentRecord&,
                         const DocumentRecord&) = default;
};

struct AnswerBox {
  int page = 0;
  NormBox box;

  friend bool operator==(const AnswerBox&, const AnswerBox&) = default;
};

enum class Split { train, val, test };

struct QaRecord {
  std::string qa_id;
  std::string doc_id;
  std::string question;
  std::string rephrased_question;
  std::string answer_value;
  std::vector<AnswerBox> answer_boxes;
  std::optional<Split> split_hint;

  friend bool operator==(const QaRecord&, const QaRecord&) = default;
};

struct Corpus {
  std::map<std::string, DocumentRecord> documents;
  std::vector<QaRecord> qas;

  const DocumentRecord& document(const std::string& doc_id) const {
    auto it = documents.find(doc_id);
    if (it == documents.end())
      throw ValidationError("unknown doc_id '" + doc_id + "'");
    return it->second;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct LoadOptions {
  // Out-of-range boxes are a hard error when strict; otherwise they are
  // clamped and reported as warnings.
  bool strict = true;
};

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "train";
}

inline std::optional<Split> parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "validation" || s == "dev") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

namespace detail {

using nlohmann::json;

class LineReader {
 public:
  LineReader(const json& obj, std::size_t line) : obj_(obj), line_(line) {}

  const json& field(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end())
      throw ParseError(line_, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string str(const char* key) const {
    const json& v = field(key);
    if (!v.is_string())
      throw ParseError(line_, std::string("field '") + key +
                                  "' must be a string");
    return v.get<std::string>();
  }

  std::int64_t integer(const json& v, const char* what) const {
    if (!v.is_number_integer())
      throw ParseError(line_, std::string(what) + " must be an integer");
    return v.get<std::int64_t>();
  }

  const json& array(const char* key) const {
    const json& v = field(key);
    if (!v.is_array())
      throw ParseError(line_, std::string("field '") + key +
                                  "' must be an array");
    return v;
  }

  const json& obj() const { return obj_; }
  std::size_t line() const { return line_; }

 private:
  const json& obj_;
  std::size_t line_;
};

struct BoxReadContext {
  const LoadOptions& opts;
  std::vector<std::string>* warnings;
  std::vector<std::string>& problems;
};

inline NormBox read_box(const LineReader& r, const json& v,
                        const std::string& owner, BoxReadContext& ctx) {
  if (!v.is_array() || v.size() != 4)
    throw ParseError(r.line(), "box must be an array of 4 integers");
  std::int64_t raw[4];
  for (int i = 0; i < 4; ++i) raw[i] = r.integer(v[i], "box value");
  bool out_of_range = raw[0] + raw[2] > kPromptScale ||
                      raw[1] + raw[3] > kPromptScale;
  for (std::int64_t x : raw) out_of_range |= x < 0 || x > kPromptScale;
  auto narrow = [](std::int64_t x) {
    return static_cast<int>(std::clamp<std::int64_t>(x, -1, kPromptScale + 1));
  };
  const ConvertedBox cb = from_prompt_box(
      PromptBox{narrow(raw[0]), narrow(raw[1]), narrow(raw[2]), narrow(raw[3])});
  if (out_of_range) {
    std::ostringstream msg;
    msg << owner << ": box [" << raw[0] << ", " << raw[1] << ", " << raw[2]
        << ", " << raw[3] << "] outside [0, 1000] (line " << r.line() << ")";
    if (ctx.opts.strict) {
      ctx.problems.push_back(msg.str());
    } else if (ctx.warnings) {
      ctx.warnings->push_back(msg.str() + ", clamped");
    }
  }
  return cb.box;
}

inline bool blank(const std::string& s) {
  return normalize_text(s, {.trim = true,
                            .collapse_whitespace = false,
                            .case_fold = false})
      .empty();
}

inline json box_json(const NormBox& b) {
  const PromptBox pb = to_prompt_box(b);
  return json::array({pb.x, pb.y, pb.w, pb.h});
}

}  // namespace detail

// Reads the newline-delimited interchange format. Throws ParseError for
// malformed lines and ValidationError listing every offending id when the
// parsed records break an invariant.
inline Corpus read_corpus(std::istream& in, const LoadOptions& opts = {},
                          std::vector<std::string>* warnings = nullptr) {
  using detail::json;
  Corpus corpus;
  std::vector<std::string> problems;
  detail::BoxReadContext ctx{opts, warnings, problems};
  std::set<std::string> qa_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(lineno, "expected a JSON object");
    const detail::LineReader r(obj, lineno);
    const std::string kind = r.str("kind");
    if (kind == "doc") {
      DocumentRecord doc;
      doc.doc_id = r.str("doc_id");
      const std::string owner = "doc_id '" + doc.doc_id + "'";
      for (const json& p : r.array("pages")) {
        if (!p.is_object()) throw ParseError(lineno, "page must be an object");
        const detail::LineReader pr(p, lineno);
        PageInfo page{pr.str("image"),
                      static_cast<int>(pr.integer(pr.field("w"), "page w")),
                      static_cast<int>(pr.integer(pr.field("h"), "page h"))};
        if (page.width <= 0 || page.height <= 0)
          problems.push_back(owner + ": page pixel dimensions must be > 0");
        doc.pages.push_back(std::move(page));
      }
      for (const json& t : r.array("tokens")) {
        if (!t.is_object()) throw ParseError(lineno, "token must be an object");
        const detail::LineReader tr(t, lineno);
        OcrToken tok;
        tok.text = tr.str("t");
        tok.page = static_cast<int>(tr.integer(tr.field("page"), "token page"));
        tok.box = detail::read_box(tr, tr.field("box"), owner, ctx);
        if (detail::blank(tok.text))
          problems.push_back(owner + ": empty token text (line " +
                             std::to_string(lineno) + ")");
        if (tok.page < 0 || tok.page >= static_cast<int>(doc.pages.size()))
          problems.push_back(owner + ": token page " +
                             std::to_string(tok.page) + " out of range");
        doc.tokens.push_back(std::move(tok));
      }
      if (corpus.documents.contains(doc.doc_id)) {
        problems.push_back(owner + ": duplicate doc_id");
        continue;
      }
      corpus.documents.emplace(doc.doc_id, std::move(doc));
    } else if (kind == "qa") {
      QaRecord qa;
      qa.qa_id = r.str("qa_id");
      qa.doc_id = r.str("doc_id");
      qa.question = r.str("question");
      qa.rephrased_question = r.str("rephrased_question");
      qa.answer_value = r.str("answer");
      const std::string owner = "qa_id '" + qa.qa_id + "'";
      for (const json& b : r.array("boxes")) {
        if (!b.is_object()) throw ParseError(lineno, "box entry must be an object");
        const detail::LineReader br(b, lineno);
        AnswerBox ab;
        ab.page = static_cast<int>(br.integer(br.field("page"), "box page"));
        ab.box = detail::read_box(br, br.field("box"), owner, ctx);
        qa.answer_boxes.push_back(ab);
      }
      if (auto it = obj.find("split"); it != obj.end() && !it->is_null()) {
        if (!it->is_string())
          throw ParseError(lineno, "field 'split' must be a string");
        qa.split_hint = parse_split(it->get<std::string>());
        if (!qa.split_hint)
          problems.push_back(owner + ": unknown split '" +
                             it->get<std::string>() + "'");
      }
      if (detail::blank(qa.answer_value))
        problems.push_back(owner + ": empty answer");
      if (!qa_ids.insert(qa.qa_id).second)
        problems.push_back(owner + ": duplicate qa_id");
      corpus.qas.push_back(std::move(qa));
    } else {
      throw ParseError(lineno, "unknown record kind '" + kind + "'");
    }
  }

  for (const QaRecord& qa : corpus.qas) {
    auto it = corpus.documents.find(qa.doc_id);
    if (it == corpus.documents.end()) {
      problems.push_back("qa_id '" + qa.qa_id + "': unknown doc_id '" +
                         qa.doc_id + "'");
      continue;
    }
    const auto n_pages = static_cast<int>(it->second.pages.size());
    for (const AnswerBox& ab : qa.answer_boxes) {
      if (ab.page < 0 || ab.page >= n_pages)
        problems.push_back("qa_id '" + qa.qa_id + "': answer page " +
                           std::to_string(ab.page) + " out of range");
    }
  }

  if (!problems.empty()) {
    std::string msg = "corpus validation failed: ";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      if (i) msg += "; ";
      msg += problems[i];
    }
    throw ValidationError(msg);
  }
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path,
                          const LoadOptions& opts = {},
                          std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return read_corpus(in, opts, warnings);
}

// Documents first in doc_id order, then QA records in corpus order. Boxes
// are written back in thousandths.
inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  using detail::json;
  for (const auto& [id, doc] : corpus.documents) {
    json pages = json::array();
    for (const PageInfo& p : doc.pages)
      pages.push_back({{"image", p.image}, {"w", p.width}, {"h", p.height}});
    json tokens = json::array();
    for (const OcrToken& t : doc.tokens)
      tokens.push_back(
          {{"t", t.text}, {"page", t.page}, {"box", detail::box_json(t.box)}});
    json line = {{"kind", "doc"},
                 {"doc_id", id},
                 {"pages", std::move(pages)},
                 {"tokens", std::move(tokens)}};
    out << dump_json(line) << '\n';
  }
  for (const QaRecord& qa : corpus.qas) {
    json boxes = json::array();
    for (const AnswerBox& ab : qa.answer_boxes)
      boxes.push_back({{"page", ab.page}, {"box", detail::box_json(ab.box)}});
    json line = {{"kind", "qa"},
                 {"qa_id", qa.qa_id},
                 {"doc_id", qa.doc_id},
                 {"question", qa.question},
                 {"rephrased_question", qa.rephrased_question},
                 {"answer", qa.answer_value},
                 {"boxes", std::move(boxes)}};
    if (qa.split_hint) line["split"] = to_string(*qa.split_hint);
    out << dump_json(line) << '\n';
  }
}

inline void save_corpus(const std::filesystem::path& path,
                        const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
}

// Keeps QA records with exactly one answer box. Documents are kept even
// when none of their questions survive.
inline Corpus filter_single_box(const Corpus& c) {
  Corpus out;
  out.documents = c.documents;
  for (const QaRecord& qa : c.qas)
    if (qa.answer_boxes.size() == 1) out.qas.push_back(qa);
  return out;
}

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct CorpusSplits {
  Corpus train;
  Corpus val;
  Corpus test;

  Corpus& at(Split s) {
    return s == Split::train ? train : s == Split::val ? val : test;
  }
};

// Honors source split hints when every QA carries one. Otherwise assigns
// whole documents to splits with a seeded shuffle, so no page is shared
// between splits.
inline CorpusSplits split(const Corpus& c, std::uint64_t seed,
                          const SplitFractions& f = {}) {
  if (!(f.train > 0 && f.val > 0 && f.test > 0))
    throw ConfigError("split fractions must be positive");
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");

  std::map<std::string, Split> doc_split;
  const bool hinted =
      !c.qas.empty() && std::all_of(c.qas.begin(), c.qas.end(),
                                    [](const QaRecord& q) {
                                      return q.split_hint.has_value();
                                    });
  CorpusSplits out;
  if (hinted) {
    for (const QaRecord& qa : c.qas) {
      Corpus& dst = out.at(*qa.split_hint);
      dst.qas.push_back(qa);
      dst.documents.emplace(qa.doc_id, c.document(qa.doc_id));
    }
    for (const auto& [id, doc] : c.documents) {
      if (!out.train.documents.contains(id) && !out.val.documents.contains(id) &&
          !out.test.documents.contains(id))
        out.train.documents.emplace(id, doc);
    }
    return out;
  }

  std::vector<std::string> ids;
  ids.reserve(c.documents.size());
  for (const auto& [id, doc] : c.documents) ids.push_back(id);
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(ids));
  const auto n = static_cast<double>(ids.size());
  const std::size_t n_train =
      std::min(ids.size(), static_cast<std::size_t>(std::floor(f.train * n + 0.5)));
  const std::size_t n_val = std::min(
      ids.size() - n_train, static_cast<std::size_t>(std::floor(f.val * n + 0.5)));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Split s = i < n_train ? Split::train
                    : i < n_train + n_val ? Split::val
                                          : Split::test;
    doc_split[ids[i]] = s;
    out.at(s).documents.emplace(ids[i], c.documents.at(ids[i]));
  }
  for (const QaRecord& qa : c.qas) out.at(doc_split.at(qa.doc_id)).qas.push_back(qa);
  return out;
}

inline std::filesystem::path resolve_page_image(
    const std::filesystem::path& corpus_path, const PageInfo& page) {
  const std::filesystem::path img(page.image);
  if (img.is_absolute()) return img;
  return corpus_path.parent_path() / img;
}

}  // namespace docground
