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

// Command-line front end:
//   docground ingest | prompt | query | parse | locate | train | predict |
//             evaluate | report
//
// Exit codes: 0 success, 1 config error, 2 data/validation error,
// 3 transport error, 4 replay miss.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "docground.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace docground::cli {

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigError("config file " + path.string() + " is not a JSON object");
  return j;
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void print_json(const json& j) { std::cout << dump_json(j, 2) << '\n'; }

struct IngestArgs {
  fs::path corpus;
  bool lenient = false;
  bool single_box = false;
  std::optional<std::uint64_t> split_seed;
  std::vector<double> fractions = {0.8, 0.1, 0.1};
  fs::path out_dir;
};

int run_ingest(const IngestArgs& a) {
  std::vector<std::string> warnings;
  Corpus c = load_corpus(a.corpus, {.strict = !a.lenient}, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (a.single_box) c = filter_single_box(c);
  json summary = {{"documents", c.documents.size()}, {"qas", c.qas.size()},
                  {"warnings", warnings.size()}};
  if (a.split_seed) {
    if (a.fractions.size() != 3) throw ConfigError("--fractions takes three values");
    CorpusSplits s = split(c, *a.split_seed, {a.fractions[0], a.fractions[1], a.fractions[2]});
    summary["splits"] = {{"train", s.train.qas.size()}, {"val", s.val.qas.size()},
                         {"test", s.test.qas.size()}};
    if (!a.out_dir.empty()) {
      fs::create_directories(a.out_dir);
      save_corpus(a.out_dir / "train.jsonl", s.train);
      save_corpus(a.out_dir / "val.jsonl", s.val);
      save_corpus(a.out_dir / "test.jsonl", s.test);
    }
  } else if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    save_corpus(a.out_dir / "corpus.jsonl", c);
  }
  print_json(summary);
  return 0;
}

struct PromptArgs {
  fs::path corpus;
  std::string qa_id;
  std::string question;
  std::string strategy = "zero_shot";
  std::size_t exemplars = 2;
  std::size_t anchor_budget = 100;
  std::string question_field = "question";
};

int run_prompt(const PromptArgs& a) {
  if (a.corpus.empty()) {
    if (parse_strategy(a.strategy) != PromptStrategy::zero_shot)
      throw ConfigError("only zero_shot prompts can be built without --corpus");
    std::cout << build_zero_shot(a.question);
    return 0;
  }
  const PromptOptions opts{parse_strategy(a.strategy), a.exemplars, a.anchor_budget,
                           parse_question_field(a.question_field)};
  const Corpus c = load_corpus(a.corpus);
  const auto it = std::find_if(c.qas.begin(), c.qas.end(),
                               [&](const QaRecord& q) { return q.qa_id == a.qa_id; });
  if (it == c.qas.end()) throw DataError("unknown qa_id '" + a.qa_id + "'");
  if (it->answer_boxes.empty()) throw DataError("qa_id '" + a.qa_id + "' has no answer box");
  const auto tokens = page_tokens(c.document(it->doc_id), it->answer_boxes.front().page);
  std::cout << build_prompt_for(*it, tokens, opts, exemplar_pool(c));
  return 0;
}

struct QueryArgs {
  fs::path endpoint_file;
  std::string prompt;
  fs::path prompt_file;
  fs::path image;
  fs::path record;
  fs::path replay;
};

int run_query(const QueryArgs& a) {
  json ej = read_json_file(a.endpoint_file);
  const ModelEndpoint endpoint = endpoint_from_json(ej.contains("endpoint") ? ej["endpoint"] : ej);
  std::string prompt = a.prompt;
  if (!a.prompt_file.empty()) prompt = read_file_bytes(a.prompt_file);
  if (prompt.empty()) throw ConfigError("query needs --prompt or --prompt-file");
  if (!a.replay.empty()) {
    const TranscriptStore store(a.replay);
    std::cout << replay_query(store, endpoint, prompt, read_file_bytes(a.image)) << '\n';
    return 0;
  }
  std::unique_ptr<TranscriptStore> recorder;
  ClientOptions opts;
  if (!a.record.empty()) {
    recorder = std::make_unique<TranscriptStore>(a.record, TranscriptStore::kAppend);
    opts.recorder = recorder.get();
  }
  VlmClient client(endpoint, opts);
  const QueryResult r = client.query(prompt, a.image);
  std::cout << r.text << '\n';
  return 0;
}

int run_parse(const fs::path& input) {
  std::string raw;
  if (input.empty() || input == "-") {
    raw = read_all(std::cin);
  } else {
    raw = read_file_bytes(input);
  }
  print_json(to_json(parse_prediction(raw)));
  return 0;
}

struct LocateArgs {
  fs::path corpus;
  std::string doc_id;
  std::optional<int> page;
  std::string answer;
};

int run_locate(const LocateArgs& a) {
  const Corpus c = load_corpus(a.corpus);
  std::vector<OcrToken> tokens;
  for (const OcrToken& t : c.document(a.doc_id).tokens)
    if (!a.page || t.page == *a.page) tokens.push_back(t);
  const MatchResult m = locate(a.answer, tokens);
  json j = {{"mode", to_string(m.mode)}};
  if (m.found()) {
    j["box"] = box_to_json(m.box);
    j["page"] = m.page;
    j["span"] = {m.span_start, m.span_length};
  } else {
    j["box"] = nullptr;
  }
  print_json(j);
  return 0;
}

struct TrainArgs {
  fs::path train;
  fs::path val;
  fs::path out;
  fs::path config;
  fs::path history;
  std::optional<std::size_t> epochs, batch_size, latent_dim, hidden_dim;
  std::optional<double> learning_rate;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> text_mode;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : train_config_from_json(read_json_file(a.config));
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.latent_dim) cfg.latent_dim = *a.latent_dim;
  if (a.hidden_dim) cfg.hidden_dim = *a.hidden_dim;
  if (a.learning_rate) cfg.learning_rate = *a.learning_rate;
  if (a.seed) cfg.seed = *a.seed;
  if (a.text_mode) cfg.text_mode = parse_text_mode(*a.text_mode);
  const EmbeddingSet train_set = load_embeddings(a.train);
  EmbeddingSet val_set;
  if (!a.val.empty()) val_set = load_embeddings(a.val);
  const TrainResult<float> result = train<float>(train_set.records, val_set.records, cfg);
  save_checkpoint(a.out, result.best);
  std::string lines;
  for (const EpochStats& e : result.history) {
    lines += dump_json({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_mean_iou", e.train_mean_iou},
                        {"val_mean_iou", e.val_mean_iou}}) +
             "\n";
  }
  if (!a.history.empty()) write_text_file(a.history, lines);
  print_json({{"checkpoint", a.out.string()},
              {"epoch", result.best.epoch},
              {"val_mean_iou", result.best.val_mean_iou},
              {"train_loss", result.best.train_loss}});
  return 0;
}

int run_predict(const fs::path& checkpoint, const fs::path& embeddings, const fs::path& out) {
  const Checkpoint<float> ck = load_checkpoint(checkpoint);
  const EmbeddingSet set = load_embeddings(embeddings);
  check_input_dims(ck.params, set.visual_dim, set.text_dim);
  std::string lines;
  std::vector<BoxPair> scored;
  for (const EmbeddingRecord& r : set.records) {
    const NormBox b = predict(ck, r);
    json j = {{"qa_id", r.qa_id}, {"box", box_to_json(b)}};
    if (r.target) {
      j["iou"] = iou(b, *r.target);
      scored.emplace_back(b, *r.target);
    }
    lines += dump_json(j) + "\n";
  }
  if (out.empty()) {
    std::cout << lines;
  } else {
    write_text_file(out, lines);
  }
  if (!scored.empty()) std::cerr << "mean IoU over targeted records: " << mean_iou(scored) << '\n';
  return 0;
}

struct EvaluateArgs {
  fs::path config;
  std::optional<std::string> localizer, strategy;
  std::optional<fs::path> replay, record, out, checkpoint, embeddings, corpus;
  std::optional<std::uint64_t> seed;
};

int run_evaluate(const EvaluateArgs& a) {
  const json j = read_json_file(a.config);
  RunConfig cfg = run_config_from_json(j, a.config.parent_path());
  if (a.localizer) cfg.localizer = parse_localizer(*a.localizer);
  if (a.strategy) cfg.prompt.strategy = parse_strategy(*a.strategy);
  if (a.replay) {
    cfg.replay_store = *a.replay;
    cfg.record_store.reset();
  }
  if (a.record) {
    cfg.record_store = *a.record;
    cfg.replay_store.reset();
  }
  if (a.out) cfg.out_dir = *a.out;
  if (a.checkpoint) cfg.checkpoint = *a.checkpoint;
  if (a.embeddings) cfg.embeddings = *a.embeddings;
  if (a.corpus) cfg.corpus = *a.corpus;
  if (a.seed) cfg.seed = *a.seed;
  if (a.localizer && !j.contains("architecture")) cfg.architecture.clear();
  const EvalOutcome outcome = run_eval(cfg);
  const std::vector<ReportRow> rows = {outcome.row};
  std::cout << render_markdown(rows);
  return 0;
}

int run_report(const std::vector<fs::path>& inputs, const std::string& format, const fs::path& out) {
  std::vector<ReportRow> rows;
  for (const fs::path& p : inputs) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open report " + p.string());
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("report " + p.string() + " is not valid JSON");
    for (ReportRow& r : report_rows_from_json(j)) rows.push_back(std::move(r));
  }
  const std::string text = render_report(rows, parse_report_format(format));
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
  return 0;
}

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ReplayMiss& ex) {
    std::cerr << "replay miss: " << ex.what() << '\n';
    return 4;
  } catch (const TransportError& ex) {
    std::cerr << "transport error: " << ex.what() << '\n';
    return 3;
  } catch (const DataError& ex) {
    std::cerr << "data error: " << ex.what() << '\n';
    return 2;
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
}

}  // namespace docground::cli

int main(int argc, char** argv) {
  using namespace docground::cli;
  CLI::App app{"Document VQA answer grounding toolkit"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a corpus, optionally filter and split it");
  ingest_cmd->add_option("--corpus", ingest.corpus, "Corpus JSONL")->required();
  ingest_cmd->add_flag("--lenient", ingest.lenient, "Clamp out-of-range boxes instead of failing");
  ingest_cmd->add_flag("--single-box", ingest.single_box, "Keep only single-box QAs");
  ingest_cmd->add_option("--split-seed", ingest.split_seed, "Split by document with this seed");
  ingest_cmd->add_option("--fractions", ingest.fractions, "train val test fractions")->expected(3);
  ingest_cmd->add_option("--out", ingest.out_dir, "Directory for the written corpus files");

  PromptArgs prompt;
  auto* prompt_cmd = app.add_subcommand("prompt", "Render the prompt for a QA or a bare question");
  prompt_cmd->add_option("--corpus", prompt.corpus);
  prompt_cmd->add_option("--qa-id", prompt.qa_id);
  prompt_cmd->add_option("--question", prompt.question);
  prompt_cmd->add_option("--strategy", prompt.strategy, "zero_shot | cot | anchors");
  prompt_cmd->add_option("--exemplars", prompt.exemplars);
  prompt_cmd->add_option("--anchor-budget", prompt.anchor_budget);
  prompt_cmd->add_option("--question-field", prompt.question_field);

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "Send one prompt and page image to an endpoint");
  query_cmd->add_option("--endpoint", query.endpoint_file, "Endpoint or run config JSON")->required();
  query_cmd->add_option("--prompt", query.prompt);
  query_cmd->add_option("--prompt-file", query.prompt_file);
  query_cmd->add_option("--image", query.image)->required();
  query_cmd->add_option("--record", query.record, "Append the transcript to this store");
  query_cmd->add_option("--replay", query.replay, "Answer from this store instead of the network");

  fs::path parse_input;
  auto* parse_cmd = app.add_subcommand("parse", "Parse a raw model response (stdin by default)");
  parse_cmd->add_option("--input", parse_input);

  LocateArgs loc;
  auto* locate_cmd = app.add_subcommand("locate", "Find an answer among a document's OCR tokens");
  locate_cmd->add_option("--corpus", loc.corpus)->required();
  locate_cmd->add_option("--doc-id", loc.doc_id)->required();
  locate_cmd->add_option("--page", loc.page);
  locate_cmd->add_option("--answer", loc.answer)->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the box regressor on EMB1 embeddings");
  train_cmd->add_option("--train", tr.train)->required();
  train_cmd->add_option("--val", tr.val);
  train_cmd->add_option("--out", tr.out)->required();
  train_cmd->add_option("--config", tr.config, "Training config JSON");
  train_cmd->add_option("--history", tr.history, "Write per-epoch history JSONL");
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--latent-dim", tr.latent_dim);
  train_cmd->add_option("--hidden-dim", tr.hidden_dim);
  train_cmd->add_option("--lr", tr.learning_rate);
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--text-mode", tr.text_mode);

  fs::path pred_ckpt, pred_emb, pred_out;
  auto* predict_cmd = app.add_subcommand("predict", "Predict boxes for EMB1 records");
  predict_cmd->add_option("--checkpoint", pred_ckpt)->required();
  predict_cmd->add_option("--embeddings", pred_emb)->required();
  predict_cmd->add_option("--out", pred_out);

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the evaluation pipeline");
  eval_cmd->add_option("--config", ev.config, "Run config JSON")->required();
  eval_cmd->add_option("--localizer", ev.localizer, "model_box | docexplainer | ocr_baseline");
  eval_cmd->add_option("--strategy", ev.strategy);
  eval_cmd->add_option("--replay", ev.replay);
  eval_cmd->add_option("--record", ev.record);
  eval_cmd->add_option("--out", ev.out);
  eval_cmd->add_option("--checkpoint", ev.checkpoint);
  eval_cmd->add_option("--embeddings", ev.embeddings);
  eval_cmd->add_option("--corpus", ev.corpus);
  eval_cmd->add_option("--seed", ev.seed);

  std::vector<fs::path> report_inputs;
  std::string report_format = "md";
  fs::path report_out;
  auto* report_cmd = app.add_subcommand("report", "Combine report.json files into one table");
  report_cmd->add_option("inputs", report_inputs)->required();
  report_cmd->add_option("--format", report_format, "md | csv | json");
  report_cmd->add_option("--out", report_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest);
    if (*prompt_cmd) return run_prompt(prompt);
    if (*query_cmd) return run_query(query);
    if (*parse_cmd) return run_parse(parse_input);
    if (*locate_cmd) return run_locate(loc);
    if (*train_cmd) return run_train(tr);
    if (*predict_cmd) return run_predict(pred_ckpt, pred_emb, pred_out);
    if (*eval_cmd) return run_evaluate(ev);
    if (*report_cmd) return run_report(report_inputs, report_format, report_out);
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return 0;
}
