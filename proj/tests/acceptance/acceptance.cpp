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

// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero when any criterion fails.
//
//   docground_acceptance --fixtures DIR --cli PATH --work DIR

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "docground.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace docground;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s;  // <= 0: no limit
  std::function<Outcome()> run;
};

struct Paths {
  fs::path fixtures;
  fs::path cli;
  fs::path work;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
  Rng rng(101);
  const std::u32string alphabet = U"abcde ABÉéΩж字";
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    std::u32string a, b;
    for (auto n = rng.below(65); n > 0; --n) a += alphabet[rng.below(alphabet.size())];
    // Half the pairs are edits of `a`, so small distances are covered too.
    if (i % 2 == 0) {
      b = a;
      for (auto e = rng.below(6); e > 0 && !b.empty(); --e) {
        const auto pos = rng.below(b.size());
        switch (rng.below(3)) {
          case 0: b.erase(pos, 1); break;
          case 1: b[pos] = alphabet[rng.below(alphabet.size())]; break;
          default: if (b.size() < 64) b.insert(pos, 1, alphabet[rng.below(alphabet.size())]);
        }
      }
    } else {
      for (auto n = rng.below(65); n > 0; --n) b += alphabet[rng.below(alphabet.size())];
    }
    if (levenshtein(a, b) != oracle::naive_levenshtein(a, b)) ++mismatches;
  }

  const std::string ascii = "abcAB  d";
  std::vector<AnswerPair> pairs;
  double expected = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::string p, g;
    for (auto n = rng.below(65); n > 0; --n) p += ascii[rng.below(ascii.size())];
    for (auto n = 1 + rng.below(64); n > 0; --n) g += ascii[rng.below(ascii.size())];
    if (i % 3 == 0) p = g.substr(0, g.size() - std::min<std::size_t>(g.size(), rng.below(4)));
    if (i % 17 == 0) {
      pairs.emplace_back(std::nullopt, g);
      continue;
    }
    expected += oracle::naive_anls(p, g, 0.5);
    pairs.emplace_back(p, g);
  }
  expected /= static_cast<double>(pairs.size());
  const double got = anls_corpus(pairs, AnlsConfig{});
  const double err = std::abs(got - expected);
  return {mismatches == 0 && err <= 1e-12,
          std::to_string(mismatches) + " distance mismatches / 10000, |ANLS - oracle| = " + fmt("%.3g", err)};
}

Outcome iou_suite() {
  Rng rng(202);
  std::size_t failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const NormBox a = synthetic::random_box(rng), b = synthetic::random_box(rng);
    const double ab = iou(a, b);
    if (ab != iou(b, a)) ++failures;
    if (!(ab >= 0.0 && ab <= 1.0)) ++failures;
    if (a.area() > 0 && iou(a, a) != 1.0) ++failures;
    // A copy of b moved fully to the right of a.
    const double shift = a.x2 - b.x1 + 1e-3;
    const NormBox moved{b.x1 + shift, b.y1, b.x2 + shift, b.y2};
    if (iou(a, moved) != 0.0) ++failures;
  }
  const double third = iou({0.0, 0.0, 0.2, 0.2}, {0.1, 0.0, 0.3, 0.2});
  const double err = std::abs(third - 1.0 / 3.0);
  return {failures == 0 && err <= 1e-12,
          std::to_string(failures) + " property failures / 10000 pairs, hand case error " + fmt("%.3g", err)};
}

Outcome coordinate_round_trip() {
  std::size_t checked = 0, failures = 0;
  for (int x = 0; x <= 1000; x += 7)
    for (int w = 0; x + w <= 1000; w += 7)
      for (int y = 0; y <= 1000; y += 7)
        for (int h = 0; y + h <= 1000; h += 7) {
          const PromptBox p{x, y, w, h};
          const ConvertedBox c = from_prompt_box(p);
          if (c.clamped || to_prompt_box(c.box) != p) ++failures;
          ++checked;
        }
  return {failures == 0 && checked > 0,
          std::to_string(failures) + " failures over " + std::to_string(checked) + " boxes"};
}

Outcome gradient_check() {
  constexpr double kEps = 1e-5;
  Rng rng(303);
  double worst = 0.0;
  std::size_t components = 0, failures = 0;
  for (int net = 0; net < 100; ++net) {
    TrainConfig cfg;
    cfg.latent_dim = 4;
    cfg.hidden_dim = 4;
    cfg.seed = 1000 + static_cast<std::uint64_t>(net);
    RegressorParams<double> p = init_params<double>(8, 8, cfg);
    for (std::size_t id : {kBVisual, kBText, kB1, kB2, kBOut})
      for (double& b : p[id].values) b = rng.uniform(-0.5, 0.5);
    std::vector<double> v(8), t(8);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    for (double& x : t) x = rng.uniform(-1.0, 1.0);
    const NormBox target = synthetic::random_box(rng);
    const std::array<double, 4> tgt{target.x1, target.y1, target.x2, target.y2};
    const RegressorParams<double> g = backward<double>(p, v, t, target);
    for (std::size_t id = 0; id < kParamCount; ++id)
      for (std::size_t i = 0; i < p[id].values.size(); ++i) {
        const double num = oracle::central_difference(p, id, i, v, t, tgt, kEps);
        const double ana = g[id].values[i];
        const double rel = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-6});
        worst = std::max(worst, rel);
        failures += rel >= 1e-4;
        ++components;
      }
  }
  return {failures == 0, std::to_string(components) + " components, " + std::to_string(failures) +
                             " over tolerance, worst relative error " + fmt("%.3g", worst)};
}

Outcome overfit() {
  synthetic::AffineBoxTask task(16, 16, 404);
  const auto records = task.sample(32, 0.01);
  TrainConfig cfg;
  cfg.latent_dim = 64;
  cfg.hidden_dim = 64;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 32;
  cfg.epochs = 200;
  cfg.seed = 404;
  const auto result = train<float>(records, {}, cfg);
  double best_iou = 0.0;
  std::size_t reached_at = 0, violations = 0;
  for (std::size_t e = 0; e < result.history.size(); ++e) {
    const EpochStats& s = result.history[e];
    if (s.train_mean_iou > 0.8 && reached_at == 0) reached_at = s.epoch;
    best_iou = std::max(best_iou, s.train_mean_iou);
    if (e > 0 && s.train_loss > result.history[e - 1].train_loss) ++violations;
  }
  return {reached_at > 0 && violations <= 5,
          "train MeanIoU " + fmt("%.4f", best_iou) +
              (reached_at ? " (> 0.8 from epoch " + std::to_string(reached_at) + ")" : " (never > 0.8)") +
              ", " + std::to_string(violations) + " loss increases"};
}

// Synthetic page: a grid of unique filler words; the planted answer uses
// words from a separate vocabulary so its run is unique.
struct SyntheticDoc {
  std::vector<OcrToken> tokens;
  std::vector<std::string> answer_words;
  NormBox answer_box;
};

SyntheticDoc make_doc(Rng& rng, int doc) {
  SyntheticDoc d;
  const int rows = 6 + static_cast<int>(rng.below(10));
  const int cols = 3 + static_cast<int>(rng.below(4));
  const std::size_t n = static_cast<std::size_t>(rows * cols);
  const std::size_t len = 1 + rng.below(4);
  const std::size_t start = rng.below(n - len + 1);
  std::size_t filler = 0;
  std::vector<NormBox> run;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t k = static_cast<std::size_t>(r * cols + c);
      const double x = 0.05 + 0.9 * c / cols + rng.uniform(0, 0.01);
      const double y = 0.04 + 0.9 * r / rows + rng.uniform(-0.002, 0.002);
      const NormBox box{x, y, x + 0.6 / cols, y + 0.4 / rows};
      std::string text;
      if (k >= start && k < start + len) {
        text = "Ans" + std::to_string(doc) + "x" + std::to_string(k - start);
        d.answer_words.push_back(text);
        run.push_back(box);
      } else {
        text = "w" + std::to_string(doc) + "_" + std::to_string(filler++);
      }
      d.tokens.push_back({text, box, 0});
    }
  d.answer_box = union_box(run);
  // Present tokens out of reading order, as OCR engines often do.
  rng.shuffle(std::span<OcrToken>(d.tokens));
  return d;
}

Outcome ocr_exactness() {
  Rng rng(505);
  std::size_t full = 0, first_word_ok = 0, none_ok = 0;
  double iou_sum = 0.0;
  const int n_docs = 200;
  for (int doc = 0; doc < n_docs; ++doc) {
    const SyntheticDoc d = make_doc(rng, doc);
    std::string answer;
    for (const auto& w : d.answer_words) answer += (answer.empty() ? "" : " ") + w;
    const MatchResult m = locate(answer, d.tokens);
    if (m.mode == MatchMode::full) ++full;
    iou_sum += m.found() ? iou(m.box, d.answer_box) : 0.0;

    // First word kept, the rest replaced by absent words.
    const std::string partial = d.answer_words.front() + " missing" + std::to_string(doc);
    const MatchResult mp = locate(partial, d.tokens);
    if (mp.mode == MatchMode::first_word) ++first_word_ok;
    // Nothing present at all.
    const MatchResult mn = locate("absent" + std::to_string(doc) + " words", d.tokens);
    if (mn.mode == MatchMode::none) ++none_ok;
  }
  const double mean = iou_sum / n_docs;
  return {full == n_docs && mean == 1.0 && first_word_ok == n_docs && none_ok == n_docs,
          "full " + std::to_string(full) + "/200, mean IoU " + fmt("%.6f", mean) + ", first_word " +
              std::to_string(first_word_ok) + "/200, none " + std::to_string(none_ok) + "/200"};
}

Outcome parser_robustness(const Paths& paths) {
  std::ifstream in(paths.fixtures / "parser" / "noisy_outputs.jsonl");
  if (!in) return {false, "fixture missing"};
  std::size_t total = 0, good = 0, broken_invariants = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = nlohmann::json::parse(line);
    const Prediction p = parse_prediction(c.at("raw").get<std::string>());
    ++total;
    if (p.usable()) ++good;
    if (p.usable() && p.content.empty()) ++broken_invariants;
    if (p.box && !p.box->valid()) ++broken_invariants;
  }
  return {total == 50 && good >= 45 && broken_invariants == 0,
          std::to_string(good) + "/" + std::to_string(total) + " clean or recovered, all total"};
}

int run_command(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return rc;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome golden_replay(const Paths& paths) {
  const fs::path golden = paths.fixtures / "golden";
  const char* localizers[] = {"model_box", "ocr_baseline", "docexplainer"};
  const char* files[] = {"artifacts.jsonl", "report.csv", "report.json", "report.md"};
  std::size_t diffs = 0;
  double model_iou = -1, ocr_iou = -1;
  for (const char* loc : localizers) {
    const fs::path cfg_path = golden / ("run_" + std::string(loc) + ".json");
    RunConfig cfg = run_config_from_json(nlohmann::json::parse(read_file_bytes(cfg_path)), golden);
    cfg.out_dir = paths.work / "golden_lib" / loc;
    const EvalOutcome out = run_eval(cfg);
    if (std::string(loc) == "model_box") model_iou = out.row.mean_iou;
    if (std::string(loc) == "ocr_baseline") ocr_iou = out.row.mean_iou;

    const fs::path cli_out = paths.work / "golden_cli" / loc;
    if (run_command(quoted(paths.cli) + " evaluate --config " + quoted(cfg_path) + " --out " + quoted(cli_out)) != 0)
      return {false, std::string("CLI evaluate failed for ") + loc};
    for (const char* f : files) {
      const std::string want = read_file_bytes(golden / "expected" / loc / f);
      diffs += read_file_bytes(cfg.out_dir / f) != want;
      diffs += read_file_bytes(cli_out / f) != want;
    }
  }
  return {diffs == 0 && ocr_iou > model_iou,
          std::to_string(diffs) + " differing files over 2 runs x 3 localizers, MeanIoU ocr_baseline " +
              fmt("%.3f", ocr_iou) + " vs model_box " + fmt("%.3f", model_iou)};
}

Outcome train_determinism(const Paths& paths) {
  const fs::path golden = paths.fixtures / "golden";
  std::string digests[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = paths.work / ("determinism_" + std::to_string(run) + ".dxv");
    fs::remove(out);
    const std::string cmd = quoted(paths.cli) + " train --train " + quoted(golden / "embeddings.emb") +
                            " --config " + quoted(golden / "train_config.json") + " --epochs 40 --out " +
                            quoted(out);
    if (run_command(cmd) != 0) return {false, "train invocation failed"};
    digests[run] = sha256_hex(read_file_bytes(out));
  }
  return {digests[0] == digests[1], "sha256 " + digests[0].substr(0, 16) + "... vs " + digests[1].substr(0, 16) + "..."};
}

}  // namespace

int main(int argc, char** argv) {
  Paths paths;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--fixtures") paths.fixtures = argv[i + 1];
    else if (flag == "--cli") paths.cli = argv[i + 1];
    else if (flag == "--work") paths.work = argv[i + 1];
  }
  if (paths.fixtures.empty() || paths.cli.empty() || paths.work.empty()) {
    std::cerr << "usage: docground_acceptance --fixtures DIR --cli PATH --work DIR\n";
    return 2;
  }
  fs::remove_all(paths.work);
  fs::create_directories(paths.work);

  const std::vector<Criterion> criteria = {
      {"metric oracle equivalence", 10.0, metric_oracle},
      {"IoU property suite", 5.0, iou_suite},
      {"coordinate round-trip", 0.0, coordinate_round_trip},
      {"gradient check", 60.0, gradient_check},
      {"overfit", 60.0, overfit},
      {"OCR-locator exactness", 5.0, ocr_exactness},
      {"parser robustness", 0.0, [&] { return parser_robustness(paths); }},
      {"golden replay run", 10.0, [&] { return golden_replay(paths); }},
      {"training determinism", 0.0, [&] { return train_determinism(paths); }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f", c.time_limit_s) + " s limit";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << o.detail << " (" << fmt("%.2f", secs)
              << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
