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
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "docground/answer_parser.hpp"
#include "docground/checkpoint.hpp"
#include "docground/dataset.hpp"
#include "docground/embeddings.hpp"
#include "docground/errors.hpp"
#include "docground/geometry.hpp"
#include "docground/json_util.hpp"
#include "docground/ocr_locator.hpp"
#include "docground/prompting.hpp"
#include "docground/regressor.hpp"
#include "docground/report.hpp"
#include "docground/text_metrics.hpp"
#include "docground/vlm_client.hpp"
#include "json.hpp"

namespace docground {

enum class Localizer { model_box, docexplainer, ocr_baseline };

inline Localizer parse_localizer(std::string_view s) {
  if (s == "model_box") return Localizer::model_box;
  if (s == "docexplainer") return Localizer::docexplainer;
  if (s == "ocr_baseline") return Localizer::ocr_baseline;
  throw ConfigError("unknown localizer '" + std::string(s) + "'");
}

inline const char* to_string(Localizer l) {
  switch (l) {
    case Localizer::docexplainer:
      return "docexplainer";
    case Localizer::ocr_baseline:
      return "ocr_baseline";
    case Localizer::model_box:
      break;
  }
  return "model_box";
}

struct PromptOptions {
  PromptStrategy strategy = PromptStrategy::zero_shot;
  std::size_t exemplar_count = 2;
  std::size_t anchor_budget = 100;
  QuestionField question_field = QuestionField::question;
};

struct RunConfig {
  std::filesystem::path corpus;
  ModelEndpoint endpoint;
  std::optional<std::filesystem::path> replay_store;
  std::optional<std::filesystem::path> record_store;
  PromptOptions prompt;
  Localizer localizer = Localizer::model_box;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> embeddings;
  AnlsConfig anls;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  std::string architecture;         // empty: derived from endpoint + localizer
  std::string eval_split = "all";   // all | train | val | test
  bool strict = true;

  void validate() const {
    endpoint.validate();
    anls.validate();
    if (corpus.empty()) throw ConfigError("run config needs a corpus path");
    if (localizer == Localizer::docexplainer && (!checkpoint || !embeddings))
      throw ConfigError("the docexplainer localizer needs checkpoint and embeddings paths");
    if (replay_store && record_store)
      throw ConfigError("replay and record modes are mutually exclusive");
    if (prompt.strategy == PromptStrategy::cot && prompt.exemplar_count < 1)
      throw ConfigError("CoT prompting needs exemplar_count >= 1");
    if (prompt.strategy == PromptStrategy::anchors && prompt.anchor_budget < 1)
      throw ConfigError("anchor prompting needs anchor_budget >= 1");
    if (eval_split != "all" && !parse_split(eval_split))
      throw ConfigError("unknown eval_split '" + eval_split + "'");
  }

  std::string architecture_label() const {
    if (!architecture.empty()) return architecture;
    switch (localizer) {
      case Localizer::docexplainer:
        return endpoint.name + " + D.E.";
      case Localizer::ocr_baseline:
        return endpoint.name + " + Naive OCR";
      case Localizer::model_box:
        break;
    }
    return endpoint.name;
  }
};

// Relative paths in the file resolve against `base_dir`.
inline RunConfig run_config_from_json(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir = {}) {
  auto path_of = [&](const std::string& s) {
    std::filesystem::path p(s);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  RunConfig c;
  try {
    if (j.contains("corpus")) c.corpus = path_of(j.at("corpus").get<std::string>());
    if (j.contains("endpoint")) c.endpoint = endpoint_from_json(j.at("endpoint"));
    if (j.contains("replay")) c.replay_store = path_of(j.at("replay").get<std::string>());
    if (j.contains("record")) c.record_store = path_of(j.at("record").get<std::string>());
    if (j.contains("prompt")) {
      const auto& p = j.at("prompt");
      c.prompt.strategy = parse_strategy(p.value("strategy", std::string("zero_shot")));
      c.prompt.exemplar_count = p.value("exemplars", c.prompt.exemplar_count);
      c.prompt.anchor_budget = p.value("anchor_budget", c.prompt.anchor_budget);
      c.prompt.question_field = parse_question_field(p.value("question_field", std::string("question")));
    }
    if (j.contains("localizer")) c.localizer = parse_localizer(j.at("localizer").get<std::string>());
    if (j.contains("checkpoint")) c.checkpoint = path_of(j.at("checkpoint").get<std::string>());
    if (j.contains("embeddings")) c.embeddings = path_of(j.at("embeddings").get<std::string>());
    if (j.contains("anls")) {
      const auto& a = j.at("anls");
      c.anls.threshold = a.value("threshold", c.anls.threshold);
      c.anls.normalization.trim = a.value("trim", true);
      c.anls.normalization.collapse_whitespace = a.value("collapse_whitespace", true);
      c.anls.normalization.case_fold = a.value("case_fold", true);
    }
    if (j.contains("out")) c.out_dir = path_of(j.at("out").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.architecture = j.value("architecture", c.architecture);
    c.eval_split = j.value("eval_split", c.eval_split);
    c.strict = j.value("strict", c.strict);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  return c;
}

// Where raw model responses come from during an evaluation.
class ResponseSource {
 public:
  virtual ~ResponseSource() = default;
  virtual std::string respond(const std::string& prompt, const std::string& image_bytes,
                              const std::string& media_type) = 0;
  virtual std::size_t concurrency() const { return 1; }
};

class ReplaySource : public ResponseSource {
 public:
  ReplaySource(const TranscriptStore& store, ModelEndpoint endpoint)
      : store_(store), endpoint_(std::move(endpoint)) {}

  std::string respond(const std::string& prompt, const std::string& image_bytes,
                      const std::string&) override {
    return replay_query(store_, endpoint_, prompt, image_bytes);
  }

  std::size_t concurrency() const override { return endpoint_.max_concurrency; }

 private:
  const TranscriptStore& store_;
  ModelEndpoint endpoint_;
};

class LiveSource : public ResponseSource {
 public:
  explicit LiveSource(VlmClient& client) : client_(client) {}

  std::string respond(const std::string& prompt, const std::string& image_bytes,
                      const std::string& media_type) override {
    return client_.query_bytes(prompt, image_bytes, media_type).text;
  }

  std::size_t concurrency() const override { return client_.endpoint().max_concurrency; }

 private:
  VlmClient& client_;
};

// Everything computed for one QA pair; one line of artifacts.jsonl.
struct QaArtifact {
  std::string qa_id;
  std::string doc_id;
  int page = 0;
  std::string prompt_sha256;
  Prediction prediction;
  std::optional<NormBox> box;
  std::optional<MatchMode> locate_mode;
  std::string gt_answer;
  NormBox gt_box;
  double anls = 0.0;
  double iou = 0.0;
};

inline nlohmann::json box_to_json(const std::optional<NormBox>& b) {
  if (!b) return nullptr;
  return nlohmann::json::array({b->x1, b->y1, b->x2, b->y2});
}

inline std::optional<NormBox> box_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return NormBox{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
                 j.at(3).get<double>()};
}

inline nlohmann::json to_json(const QaArtifact& a, Localizer localizer) {
  nlohmann::json j = {{"qa_id", a.qa_id},
                      {"doc_id", a.doc_id},
                      {"page", a.page},
                      {"prompt_sha256", a.prompt_sha256},
                      {"raw_response", a.prediction.raw},
                      {"prediction", to_json(a.prediction)},
                      {"localizer", to_string(localizer)},
                      {"box", box_to_json(a.box)},
                      {"gt_answer", a.gt_answer},
                      {"gt_box", box_to_json(a.gt_box)},
                      {"anls", a.anls},
                      {"iou", a.iou}};
  if (a.locate_mode) j["locate_mode"] = to_string(*a.locate_mode);
  return j;
}

struct EvalOutcome {
  ReportRow row;
  std::vector<QaArtifact> artifacts;
};

// CoT exemplar candidates: training-split QAs when the corpus marks any,
// otherwise every QA, in corpus order.
inline std::vector<const QaRecord*> exemplar_pool(const Corpus& corpus) {
  std::vector<const QaRecord*> pool;
  for (const QaRecord& q : corpus.qas)
    if (q.split_hint == Split::train) pool.push_back(&q);
  if (pool.empty())
    for (const QaRecord& q : corpus.qas) pool.push_back(&q);
  return pool;
}

// First `count` single-box pool entries from other documents.
inline std::vector<Exemplar> pick_exemplars(std::span<const QaRecord* const> pool,
                                            const QaRecord& target, std::size_t count) {
  std::vector<Exemplar> out;
  for (const QaRecord* q : pool) {
    if (out.size() == count) break;
    if (q->doc_id == target.doc_id || q->answer_boxes.size() != 1) continue;
    out.push_back({q->question, q->answer_value, to_prompt_box(q->answer_boxes.front().box)});
  }
  return out;
}

inline std::vector<OcrToken> page_tokens(const DocumentRecord& doc, int page) {
  std::vector<OcrToken> out;
  for (const OcrToken& t : doc.tokens)
    if (t.page == page) out.push_back(t);
  return out;
}

// Prompt for a QA on the page holding its first answer box.
inline std::string build_prompt_for(const QaRecord& qa, std::span<const OcrToken> tokens,
                                    const PromptOptions& opts,
                                    std::span<const QaRecord* const> pool) {
  PromptSpec spec;
  spec.strategy = opts.strategy;
  spec.anchor_budget = opts.anchor_budget;
  spec.question_field = opts.question_field;
  if (spec.strategy == PromptStrategy::cot) {
    spec.exemplars = pick_exemplars(pool, qa, opts.exemplar_count);
    if (spec.exemplars.empty())
      throw ConfigError("no CoT exemplars available outside document " + qa.doc_id);
  }
  return build_prompt(spec, select_question(qa, spec.question_field), tokens);
}

// Scores one QA. Thread-safe given a thread-safe source.
inline QaArtifact evaluate_qa(const RunConfig& cfg, const Corpus& corpus, const QaRecord& qa,
                              const std::vector<const QaRecord*>& exemplar_pool,
                              ResponseSource& source, const Checkpoint<float>* ckpt,
                              const EmbeddingSet* embeddings) {
  const DocumentRecord& doc = corpus.document(qa.doc_id);
  const AnswerBox& gt = qa.answer_boxes.front();
  const std::vector<OcrToken> tokens = page_tokens(doc, gt.page);
  const std::string prompt = build_prompt_for(qa, tokens, cfg.prompt, exemplar_pool);

  const std::filesystem::path image = resolve_page_image(cfg.corpus, doc.pages.at(gt.page));
  const std::string image_bytes = read_file_bytes(image);
  std::string raw;
  try {
    raw = source.respond(prompt, image_bytes, image_media_type(image));
  } catch (const ReplayMiss& miss) {
    throw ReplayMiss(miss.key(), "qa_id '" + qa.qa_id + "'");
  }

  QaArtifact a;
  a.qa_id = qa.qa_id;
  a.doc_id = qa.doc_id;
  a.page = gt.page;
  a.prompt_sha256 = sha256_hex(prompt);
  a.prediction = parse_prediction(raw);
  a.gt_answer = qa.answer_value;
  a.gt_box = gt.box;

  switch (cfg.localizer) {
    case Localizer::model_box:
      a.box = a.prediction.box;
      break;
    case Localizer::docexplainer: {
      const EmbeddingRecord* rec = embeddings->find(qa.qa_id);
      if (!rec) throw DataError("no embedding record for qa_id '" + qa.qa_id + "'");
      a.box = predict(*ckpt, *rec);
      break;
    }
    case Localizer::ocr_baseline: {
      const MatchResult m = locate(a.prediction.content, tokens, cfg.anls.normalization);
      a.locate_mode = m.mode;
      if (m.found()) a.box = m.box;
      break;
    }
  }
  a.anls = a.prediction.status == ParseStatus::failed
               ? 0.0
               : anls_single(a.prediction.content, qa.answer_value, cfg.anls);
  a.iou = a.box ? iou(*a.box, gt.box) : 0.0;
  return a;
}

// Aggregation runs over artifacts in qa_id order.
inline ReportRow aggregate(const RunConfig& cfg, const std::vector<QaArtifact>& artifacts) {
  ReportRow row;
  row.architecture = cfg.architecture_label();
  row.prompting = display_name(cfg.prompt.strategy);
  std::vector<AnswerPair> answers;
  std::vector<BoxPair> boxes;
  for (const QaArtifact& a : artifacts) {
    answers.emplace_back(a.prediction.status == ParseStatus::failed
                             ? std::nullopt
                             : std::optional<std::string>(a.prediction.content),
                         a.gt_answer);
    boxes.emplace_back(a.box, a.gt_box);
    row.n_parse_failures += a.prediction.status == ParseStatus::failed;
    row.n_located += a.box.has_value();
  }
  row.n_qas = artifacts.size();
  row.anls = anls_corpus(answers, cfg.anls);
  row.mean_iou = mean_iou(boxes);
  return row;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_outputs(const std::filesystem::path& dir, const EvalOutcome& outcome,
                          Localizer localizer) {
  std::filesystem::create_directories(dir);
  std::string lines;
  for (const QaArtifact& a : outcome.artifacts) lines += dump_json(to_json(a, localizer)) + "\n";
  write_text_file(dir / "artifacts.jsonl", lines);
  const std::vector<ReportRow> rows = {outcome.row};
  write_text_file(dir / "report.csv", render_csv(rows));
  write_text_file(dir / "report.json", render_json(rows));
  write_text_file(dir / "report.md", render_markdown(rows));
}

// Full pipeline over the single-box QAs of the corpus: prompt, respond,
// parse, localize, score. Work items run in parallel up to the source's
// concurrency; results are reduced in qa_id order.
inline EvalOutcome run_eval(const RunConfig& cfg, ResponseSource& source) {
  cfg.validate();
  const Corpus corpus = filter_single_box(load_corpus(cfg.corpus, {.strict = cfg.strict}));

  std::vector<const QaRecord*> targets;
  CorpusSplits splits;
  if (cfg.eval_split == "all") {
    for (const QaRecord& q : corpus.qas) targets.push_back(&q);
  } else {
    splits = split(corpus, cfg.seed);
    for (const QaRecord& q : splits.at(*parse_split(cfg.eval_split)).qas) targets.push_back(&q);
  }
  std::sort(targets.begin(), targets.end(),
            [](const QaRecord* a, const QaRecord* b) { return a->qa_id < b->qa_id; });

  const std::vector<const QaRecord*> pool = exemplar_pool(corpus);

  std::optional<Checkpoint<float>> ckpt;
  std::optional<EmbeddingSet> embeddings;
  if (cfg.localizer == Localizer::docexplainer) {
    ckpt = load_checkpoint(*cfg.checkpoint);
    embeddings = load_embeddings(*cfg.embeddings);
    check_input_dims(ckpt->params, embeddings->visual_dim, embeddings->text_dim);
  }

  EvalOutcome outcome;
  outcome.artifacts.resize(targets.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= targets.size()) return;
      {
        std::lock_guard lock(failure_mu);
        if (failure) return;
      }
      try {
        outcome.artifacts[i] = evaluate_qa(cfg, corpus, *targets[i], pool, source,
                                           ckpt ? &*ckpt : nullptr,
                                           embeddings ? &*embeddings : nullptr);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(
      1, std::min(source.concurrency(), targets.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  outcome.row = aggregate(cfg, outcome.artifacts);
  if (!cfg.out_dir.empty()) write_outputs(cfg.out_dir, outcome, cfg.localizer);
  return outcome;
}

// Picks replay, record or live mode from the config.
inline EvalOutcome run_eval(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.replay_store) {
    const TranscriptStore store(*cfg.replay_store);
    ReplaySource source(store, cfg.endpoint);
    return run_eval(cfg, source);
  }
  std::unique_ptr<TranscriptStore> recorder;
  ClientOptions opts;
  if (cfg.record_store) {
    recorder = std::make_unique<TranscriptStore>(*cfg.record_store, TranscriptStore::kAppend);
    opts.recorder = recorder.get();
  }
  VlmClient client(cfg.endpoint, opts);
  LiveSource source(client);
  return run_eval(cfg, source);
}

}  // namespace docground
