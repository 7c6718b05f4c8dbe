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
#include <cstddef>
#include <cstdio>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docground/errors.hpp"
#include "docground/json_util.hpp"
#include "json.hpp"

namespace docground {

// One line of the results table.
struct ReportRow {
  std::string architecture;
  std::string prompting;
  double anls = 0.0;
  double mean_iou = 0.0;
  std::size_t n_qas = 0;
  std::size_t n_parse_failures = 0;
  std::size_t n_located = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

enum class ReportFormat { csv, json, markdown };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  if (s == "md" || s == "markdown") return ReportFormat::markdown;
  throw ConfigError("unknown report format '" + std::string(s) + "'");
}

inline nlohmann::json to_json(const ReportRow& r) {
  return {{"architecture", r.architecture}, {"prompting", r.prompting},
          {"anls", r.anls},                 {"mean_iou", r.mean_iou},
          {"n_qas", r.n_qas},               {"n_parse_failures", r.n_parse_failures},
          {"n_located", r.n_located}};
}

inline std::vector<ReportRow> report_rows_from_json(const nlohmann::json& j) {
  std::vector<ReportRow> rows;
  try {
    for (const auto& r : j.at("rows")) {
      rows.push_back({r.at("architecture").get<std::string>(), r.at("prompting").get<std::string>(),
                      r.at("anls").get<double>(), r.at("mean_iou").get<double>(),
                      r.at("n_qas").get<std::size_t>(), r.at("n_parse_failures").get<std::size_t>(),
                      r.at("n_located").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
  return rows;
}

namespace report_detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Three decimals without the leading zero, like ".720".
inline std::string short_metric(double v) {
  std::string s = fixed(v, 3);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string escape_md(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

// Displayed value of the best and second-best distinct entries.
inline std::pair<std::string, std::string> podium(const std::vector<std::string>& shown) {
  std::set<double, std::greater<>> distinct;
  for (const auto& s : shown) distinct.insert(std::stod(s));
  std::string best, second;
  auto it = distinct.begin();
  if (it != distinct.end()) best = short_metric(*it++);
  if (it != distinct.end()) second = short_metric(*it);
  return {best, second};
}

}  // namespace report_detail

inline std::string render_csv(std::span<const ReportRow> rows) {
  using namespace report_detail;
  std::string out = "architecture,prompting,anls,mean_iou,n_qas,n_parse_failures,n_located\n";
  for (const ReportRow& r : rows) {
    out += csv_field(r.architecture) + "," + csv_field(r.prompting) + "," + fixed(r.anls, 6) + "," +
           fixed(r.mean_iou, 6) + "," + std::to_string(r.n_qas) + "," +
           std::to_string(r.n_parse_failures) + "," + std::to_string(r.n_located) + "\n";
  }
  return out;
}

inline std::string render_json(std::span<const ReportRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ReportRow& r : rows) arr.push_back(to_json(r));
  return dump_json(nlohmann::json{{"rows", arr}}, 2) + "\n";
}

// Aligned markdown table. In each metric column the best displayed value
// is bold and the second best underlined; ties share the mark.
inline std::string render_markdown(std::span<const ReportRow> rows) {
  using namespace report_detail;
  const std::vector<std::string> header = {"Architecture", "Prompting", "ANLS",          "MeanIoU",
                                           "QAs",          "Parse failures", "Located"};
  const std::vector<bool> right = {false, false, true, true, true, true, true};

  std::vector<std::string> anls_shown, iou_shown;
  for (const ReportRow& r : rows) {
    anls_shown.push_back(short_metric(r.anls));
    iou_shown.push_back(short_metric(r.mean_iou));
  }
  const auto [anls_best, anls_second] = podium(anls_shown);
  const auto [iou_best, iou_second] = podium(iou_shown);
  auto mark = [](const std::string& v, const std::string& best, const std::string& second) {
    if (v == best) return "**" + v + "**";
    if (!second.empty() && v == second) return "<u>" + v + "</u>";
    return v;
  };

  std::vector<std::vector<std::string>> cells;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ReportRow& r = rows[i];
    cells.push_back({escape_md(r.architecture), escape_md(r.prompting),
                     mark(anls_shown[i], anls_best, anls_second),
                     mark(iou_shown[i], iou_best, iou_second), std::to_string(r.n_qas),
                     std::to_string(r.n_parse_failures), std::to_string(r.n_located)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = std::max<std::size_t>(header[c].size(), 3);
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  auto pad = [&](const std::string& s, std::size_t c) {
    const std::string fill(width[c] - std::min(width[c], s.size()), ' ');
    return right[c] ? fill + s : s + fill;
  };
  std::string out = "|";
  for (std::size_t c = 0; c < header.size(); ++c) out += " " + pad(header[c], c) + " |";
  out += "\n|";
  for (std::size_t c = 0; c < header.size(); ++c)
    out += right[c] ? " " + std::string(width[c] - 1, '-') + ": |"
                    : " :" + std::string(width[c] - 1, '-') + " |";
  out += "\n";
  for (const auto& row : cells) {
    out += "|";
    for (std::size_t c = 0; c < header.size(); ++c) out += " " + pad(row[c], c) + " |";
    out += "\n";
  }
  return out;
}

inline std::string render_report(std::span<const ReportRow> rows, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv:
      return render_csv(rows);
    case ReportFormat::json:
      return render_json(rows);
    case ReportFormat::markdown:
      break;
  }
  return render_markdown(rows);
}

}  // namespace docground
