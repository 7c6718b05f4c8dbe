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

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "docground/regressor.hpp"

namespace docground::oracle {

// Full (|a|+1) x (|b|+1) edit-distance matrix, no shortcuts.
inline std::size_t naive_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

// ASCII-only normalization + NLS, written out directly.
inline double naive_anls(const std::string& pred, const std::string& gt, double tau) {
  auto norm = [](const std::string& s) {
    std::string t;
    bool space = false;
    for (char c : s) {
      if (c == ' ' || c == '\t' || c == '\n') {
        space = true;
        continue;
      }
      if (space && !t.empty()) t += ' ';
      space = false;
      t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return std::u32string(t.begin(), t.end());
  };
  const auto p = norm(pred), g = norm(gt);
  const std::size_t m = std::max(p.size(), g.size());
  if (m == 0) return 1.0;
  const double nls = 1.0 - static_cast<double>(naive_levenshtein(p, g)) / static_cast<double>(m);
  return nls >= tau ? nls : 0.0;
}

// Straight-line forward pass: explicit matrix-vector products with the
// weight matrix read column by column.
inline std::array<double, 4> naive_forward(const RegressorParams<double>& p,
                                           const std::vector<double>& v,
                                           const std::vector<double>& t) {
  auto layer = [](const Tensor<double>& w, const Tensor<double>& b, const std::vector<double>& x,
                  bool relu) {
    const std::size_t in = w.shape[0], out = w.shape[1];
    std::vector<double> y(out);
    for (std::size_t j = 0; j < out; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < in; ++i) s += w.values[i * out + j] * x[i];
      s += b.values[j];
      y[j] = relu ? std::max(0.0, s) : s;
    }
    return y;
  };
  const auto zv = layer(p[kWVisual], p[kBVisual], v, true);
  const auto zt = layer(p[kWText], p[kBText], t, true);
  std::vector<double> f = zv;
  f.insert(f.end(), zt.begin(), zt.end());
  const auto h1 = layer(p[kW1], p[kB1], f, true);
  const auto h2 = layer(p[kW2], p[kB2], h1, true);
  const auto o = layer(p[kWOut], p[kBOut], h2, false);
  std::array<double, 4> s{};
  for (int k = 0; k < 4; ++k) s[k] = 1.0 / (1.0 + std::exp(-o[k]));
  return {std::min(s[0], s[2]), std::min(s[1], s[3]), std::max(s[0], s[2]), std::max(s[1], s[3])};
}

inline double naive_huber(const std::array<double, 4>& p, const std::array<double, 4>& t) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double d = std::abs(p[k] - t[k]);
    s += d < 1.0 ? 0.5 * d * d : d - 0.5;
  }
  return s / 4.0;
}

// Central differences of the naive loss with respect to one parameter.
inline double central_difference(RegressorParams<double> p, std::size_t tensor, std::size_t index,
                                 const std::vector<double>& v, const std::vector<double>& t,
                                 const std::array<double, 4>& target, double eps) {
  const double orig = p[tensor].values[index];
  p[tensor].values[index] = orig + eps;
  const double up = naive_huber(naive_forward(p, v, t), target);
  p[tensor].values[index] = orig - eps;
  const double down = naive_huber(naive_forward(p, v, t), target);
  return (up - down) / (2.0 * eps);
}

}  // namespace docground::oracle
