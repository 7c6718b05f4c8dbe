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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docground/errors.hpp"
#include "docground/geometry.hpp"
#include "docground/rng.hpp"

// Dual-branch box regressor over frozen image/text embeddings.
//
//   z_v = relu(visual . W_v + b_v)        visual: Dv, z_v: L
//   z_t = relu(text . W_t + b_t)          text:   Dt, z_t: L
//   h1  = relu([z_v, z_t] . W_1 + b_1)    h1: H
//   h2  = relu(h1 . W_2 + b_2)            h2: H
//   o   = sigmoid(h2 . W_o + b_o)         o: 4
//   box = (min(o0,o2), min(o1,o3), max(o0,o2), max(o1,o3))
//
// Weight matrices are stored input-major (in x out, row-major). Everything
// is templated on the scalar so the gradient check can run in double while
// checkpoints hold float.

namespace docground {

class TrainingDiverged : public DataError {
 public:
  using DataError::DataError;
};

enum class TextMode { question, answer, question_plus_answer };

inline const char* to_string(TextMode m) {
  switch (m) {
    case TextMode::question:
      return "question";
    case TextMode::answer:
      return "answer";
    case TextMode::question_plus_answer:
      break;
  }
  return "question_plus_answer";
}

inline TextMode parse_text_mode(std::string_view s) {
  if (s == "question") return TextMode::question;
  if (s == "answer") return TextMode::answer;
  if (s == "question_plus_answer") return TextMode::question_plus_answer;
  throw ConfigError("unknown text_mode '" + std::string(s) + "'");
}

// Text fed to the text encoder for a QA pair.
inline std::string compose_text(TextMode mode, std::string_view question,
                                std::string_view answer) {
  switch (mode) {
    case TextMode::question:
      return std::string(question);
    case TextMode::answer:
      return std::string(answer);
    case TextMode::question_plus_answer:
      break;
  }
  return std::string(question) + " [SEP] " + std::string(answer);
}

struct TrainConfig {
  std::size_t latent_dim = 512;
  std::size_t hidden_dim = 512;
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  TextMode text_mode = TextMode::question_plus_answer;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (latent_dim < 1 || hidden_dim < 1)
      throw ConfigError("latent_dim and hidden_dim must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning_rate must be > 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EmbeddingRecord {
  std::string qa_id;
  std::vector<float> visual;
  std::vector<float> text;
  std::optional<NormBox> target;
};

enum ParamId : std::size_t {
  kWVisual,
  kBVisual,
  kWText,
  kBText,
  kW1,
  kB1,
  kW2,
  kB2,
  kWOut,
  kBOut,
  kParamCount
};

inline constexpr std::array<const char*, kParamCount> kParamNames = {
    "w_visual", "b_visual", "w_text", "b_text", "w_fuse1",
    "b_fuse1",  "w_fuse2",  "b_fuse2", "w_head", "b_head"};

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    values.assign(element_count(shape), T{0});
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t size() const noexcept { return values.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

template <typename T>
struct RegressorParams {
  std::array<Tensor<T>, kParamCount> tensors;

  static RegressorParams zeros(std::size_t visual_dim, std::size_t text_dim,
                               std::size_t latent, std::size_t hidden) {
    RegressorParams p;
    p.tensors[kWVisual] = Tensor<T>({visual_dim, latent});
    p.tensors[kBVisual] = Tensor<T>({latent});
    p.tensors[kWText] = Tensor<T>({text_dim, latent});
    p.tensors[kBText] = Tensor<T>({latent});
    p.tensors[kW1] = Tensor<T>({2 * latent, hidden});
    p.tensors[kB1] = Tensor<T>({hidden});
    p.tensors[kW2] = Tensor<T>({hidden, hidden});
    p.tensors[kB2] = Tensor<T>({hidden});
    p.tensors[kWOut] = Tensor<T>({hidden, 4});
    p.tensors[kBOut] = Tensor<T>({4});
    return p;
  }

  RegressorParams zeros_like() const {
    return zeros(visual_dim(), text_dim(), latent_dim(), hidden_dim());
  }

  Tensor<T>& operator[](std::size_t id) { return tensors[id]; }
  const Tensor<T>& operator[](std::size_t id) const { return tensors[id]; }

  std::size_t visual_dim() const { return tensors[kWVisual].shape.at(0); }
  std::size_t text_dim() const { return tensors[kWText].shape.at(0); }
  std::size_t latent_dim() const { return tensors[kBVisual].shape.at(0); }
  std::size_t hidden_dim() const { return tensors[kB1].shape.at(0); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& t : tensors)
      for (T v : t.values)
        if (!std::isfinite(v)) return false;
    return true;
  }

  // Shapes must follow the architecture for the stored dimensions.
  void check_shapes() const {
    const auto ok = [&](std::size_t id, std::vector<std::size_t> s) {
      if (tensors[id].shape != s || tensors[id].values.size() != Tensor<T>::element_count(s))
        throw ConfigError(std::string("tensor ") + kParamNames[id] +
                          " has an inconsistent shape");
    };
    if (tensors[kWVisual].shape.size() != 2 || tensors[kWText].shape.size() != 2 ||
        tensors[kBVisual].shape.size() != 1 || tensors[kB1].shape.size() != 1)
      throw ConfigError("regressor tensors have the wrong rank");
    const std::size_t dv = visual_dim(), dt = text_dim(), l = latent_dim(),
                      h = hidden_dim();
    ok(kWVisual, {dv, l});
    ok(kBVisual, {l});
    ok(kWText, {dt, l});
    ok(kBText, {l});
    ok(kW1, {2 * l, h});
    ok(kB1, {h});
    ok(kW2, {h, h});
    ok(kB2, {h});
    ok(kWOut, {h, 4});
    ok(kBOut, {4});
  }

  friend bool operator==(const RegressorParams&, const RegressorParams&) = default;
};

// He-uniform for the relu layers, Glorot-uniform for the sigmoid head,
// zero biases. Draws run over tensors in declared order, row-major.
template <typename T>
RegressorParams<T> init_params(std::size_t visual_dim, std::size_t text_dim,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (visual_dim < 1 || text_dim < 1)
    throw ConfigError("embedding dimensions must be >= 1");
  auto p = RegressorParams<T>::zeros(visual_dim, text_dim, cfg.latent_dim,
                                     cfg.hidden_dim);
  Rng rng(cfg.seed);
  for (std::size_t id : {kWVisual, kWText, kW1, kW2, kWOut}) {
    Tensor<T>& w = p[id];
    const double fan_in = static_cast<double>(w.shape[0]);
    const double fan_out = static_cast<double>(w.shape[1]);
    const double limit = id == kWOut ? std::sqrt(6.0 / (fan_in + fan_out))
                                     : std::sqrt(6.0 / fan_in);
    for (T& v : w.values) v = static_cast<T>(rng.uniform(-limit, limit));
  }
  return p;
}

namespace regressor_detail {

// y = x . W + b with W stored in x out.
template <typename T>
void dense(std::span<const T> x, const Tensor<T>& w, const Tensor<T>& b,
           std::span<T> y) {
  const std::size_t out = w.shape[1];
  std::copy(b.values.begin(), b.values.end(), y.begin());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T xi = x[i];
    if (xi == T{0}) continue;
    const T* row = w.values.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += xi * row[j];
  }
}

template <typename T>
void relu(std::span<const T> pre, std::span<T> post) {
  for (std::size_t i = 0; i < pre.size(); ++i)
    post[i] = pre[i] > T{0} ? pre[i] : T{0};
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

// Accumulates dW += x^T g, db += g, and returns dx = W g when wanted.
template <typename T>
void dense_backward(std::span<const T> x, const Tensor<T>& w,
                    std::span<const T> g, Tensor<T>& dw, Tensor<T>& db,
                    std::span<T> dx) {
  const std::size_t out = w.shape[1];
  for (std::size_t j = 0; j < out; ++j) db.values[j] += g[j];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T* row = w.values.data() + i * out;
    T* drow = dw.values.data() + i * out;
    const T xi = x[i];
    T acc{0};
    for (std::size_t j = 0; j < out; ++j) {
      drow[j] += xi * g[j];
      acc += row[j] * g[j];
    }
    if (!dx.empty()) dx[i] = acc;
  }
}

}  // namespace regressor_detail

// Intermediate activations of one forward pass, kept for backward.
template <typename T>
struct ForwardTrace {
  std::vector<T> zv_pre, zt_pre, fused, h1_pre, h1, h2_pre, h2;
  std::array<T, 4> raw{};        // sigmoid outputs
  std::array<T, 4> box{};        // ordered x1, y1, x2, y2
  std::array<std::size_t, 4> source{};  // raw index feeding each box coord
};

template <typename T>
void check_input_dims(const RegressorParams<T>& params, std::size_t visual,
                      std::size_t text) {
  if (visual != params.visual_dim() || text != params.text_dim())
    throw ConfigError("embedding dimensions (" + std::to_string(visual) + ", " +
                      std::to_string(text) + ") do not match the regressor (" +
                      std::to_string(params.visual_dim()) + ", " +
                      std::to_string(params.text_dim()) + ")");
}

template <typename T>
void forward_trace(const RegressorParams<T>& params, std::span<const T> visual,
                   std::span<const T> text, ForwardTrace<T>& tr) {
  using namespace regressor_detail;
  check_input_dims(params, visual.size(), text.size());
  const std::size_t l = params.latent_dim();
  const std::size_t h = params.hidden_dim();
  tr.zv_pre.resize(l);
  tr.zt_pre.resize(l);
  tr.fused.resize(2 * l);
  tr.h1_pre.resize(h);
  tr.h1.resize(h);
  tr.h2_pre.resize(h);
  tr.h2.resize(h);

  dense<T>(visual, params[kWVisual], params[kBVisual], tr.zv_pre);
  dense<T>(text, params[kWText], params[kBText], tr.zt_pre);
  std::span<T> fused(tr.fused);
  relu<T>(tr.zv_pre, fused.first(l));
  relu<T>(tr.zt_pre, fused.last(l));
  dense<T>(tr.fused, params[kW1], params[kB1], tr.h1_pre);
  relu<T>(tr.h1_pre, tr.h1);
  dense<T>(tr.h1, params[kW2], params[kB2], tr.h2_pre);
  relu<T>(tr.h2_pre, tr.h2);
  std::array<T, 4> head{};
  dense<T>(tr.h2, params[kWOut], params[kBOut], head);
  for (int k = 0; k < 4; ++k) tr.raw[k] = sigmoid(head[k]);

  for (std::size_t axis = 0; axis < 2; ++axis) {
    const std::size_t a = axis, b = axis + 2;
    const bool keep = tr.raw[a] <= tr.raw[b];
    tr.source[axis] = keep ? a : b;
    tr.source[axis + 2] = keep ? b : a;
  }
  for (std::size_t k = 0; k < 4; ++k) tr.box[k] = tr.raw[tr.source[k]];
}

template <typename T>
std::array<T, 4> forward_coords(const RegressorParams<T>& params,
                                std::span<const T> visual,
                                std::span<const T> text) {
  ForwardTrace<T> tr;
  forward_trace(params, visual, text, tr);
  return tr.box;
}

template <typename T>
NormBox forward(const RegressorParams<T>& params, std::span<const T> visual,
                std::span<const T> text) {
  const auto c = forward_coords(params, visual, text);
  return NormBox{static_cast<double>(c[0]), static_cast<double>(c[1]),
                 static_cast<double>(c[2]), static_cast<double>(c[3])};
}

// Smooth L1 averaged over the four coordinates:
//   0.5 d^2 when |d| < 1, |d| - 0.5 otherwise.
template <typename T>
T huber_loss(std::span<const T, 4> pred, std::span<const T, 4> target) {
  T sum{0};
  for (std::size_t k = 0; k < 4; ++k) {
    const T d = pred[k] - target[k];
    const T ad = std::abs(d);
    sum += ad < T{1} ? T{0.5} * d * d : ad - T{0.5};
  }
  return sum / T{4};
}

template <typename T>
std::array<T, 4> huber_grad(std::span<const T, 4> pred,
                            std::span<const T, 4> target) {
  std::array<T, 4> g{};
  for (std::size_t k = 0; k < 4; ++k) {
    const T d = pred[k] - target[k];
    const T slope = std::abs(d) < T{1} ? d : (d > T{0} ? T{1} : T{-1});
    g[k] = slope / T{4};
  }
  return g;
}

template <typename T>
std::array<T, 4> box_coords(const NormBox& b) {
  return {static_cast<T>(b.x1), static_cast<T>(b.y1), static_cast<T>(b.x2),
          static_cast<T>(b.y2)};
}

// Accumulates scale * d(loss)/d(params) into grads and returns the loss.
// The min/max reordering sends each coordinate's gradient back to the raw
// output that produced it.
template <typename T>
T accumulate_gradients(const RegressorParams<T>& params,
                       std::span<const T> visual, std::span<const T> text,
                       const std::array<T, 4>& target, T scale,
                       RegressorParams<T>& grads, ForwardTrace<T>& tr) {
  using namespace regressor_detail;
  forward_trace(params, visual, text, tr);
  const T loss = huber_loss<T>(tr.box, target);
  const std::array<T, 4> dbox = huber_grad<T>(tr.box, target);

  std::array<T, 4> dhead{};
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t src = tr.source[k];
    const T o = tr.raw[src];
    dhead[src] += scale * dbox[k] * o * (T{1} - o);
  }

  const std::size_t l = params.latent_dim();
  const std::size_t h = params.hidden_dim();
  std::vector<T> dh2(h), dh1(h), dfused(2 * l);

  dense_backward<T>(tr.h2, params[kWOut], dhead, grads[kWOut], grads[kBOut], dh2);
  for (std::size_t i = 0; i < h; ++i)
    if (!(tr.h2_pre[i] > T{0})) dh2[i] = T{0};
  dense_backward<T>(tr.h1, params[kW2], dh2, grads[kW2], grads[kB2], dh1);
  for (std::size_t i = 0; i < h; ++i)
    if (!(tr.h1_pre[i] > T{0})) dh1[i] = T{0};
  dense_backward<T>(tr.fused, params[kW1], dh1, grads[kW1], grads[kB1], dfused);
  std::span<T> dzv = std::span<T>(dfused).first(l);
  std::span<T> dzt = std::span<T>(dfused).last(l);
  for (std::size_t i = 0; i < l; ++i) {
    if (!(tr.zv_pre[i] > T{0})) dzv[i] = T{0};
    if (!(tr.zt_pre[i] > T{0})) dzt[i] = T{0};
  }
  dense_backward<T>(visual, params[kWVisual], dzv, grads[kWVisual],
                    grads[kBVisual], {});
  dense_backward<T>(text, params[kWText], dzt, grads[kWText], grads[kBText], {});
  return loss;
}

// Gradient of the single-example loss with respect to every parameter.
template <typename T>
RegressorParams<T> backward(const RegressorParams<T>& params,
                            std::span<const T> visual, std::span<const T> text,
                            const NormBox& target) {
  RegressorParams<T> grads = params.zeros_like();
  ForwardTrace<T> tr;
  accumulate_gradients<T>(params, visual, text, box_coords<T>(target), T{1},
                          grads, tr);
  return grads;
}

template <typename T>
T example_loss(const RegressorParams<T>& params, std::span<const T> visual,
               std::span<const T> text, const NormBox& target) {
  const auto pred = forward_coords(params, visual, text);
  const auto tgt = box_coords<T>(target);
  return huber_loss<T>(pred, tgt);
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_mean_iou = 0.0;
  double val_mean_iou = 0.0;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

template <typename T>
struct Checkpoint {
  RegressorParams<T> params;
  TrainConfig config;
  std::size_t epoch = 0;
  double val_mean_iou = 0.0;
  double train_loss = 0.0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

template <typename T>
struct TrainResult {
  Checkpoint<T> best;
  std::vector<EpochStats> history;
};

namespace regressor_detail {

template <typename T>
struct Example {
  std::vector<T> visual;
  std::vector<T> text;
  std::array<T, 4> target{};
  NormBox target_box;
};

template <typename T>
std::vector<Example<T>> to_examples(std::span<const EmbeddingRecord> records,
                                    std::size_t dv, std::size_t dt,
                                    const char* what) {
  std::vector<Example<T>> out;
  out.reserve(records.size());
  for (const EmbeddingRecord& r : records) {
    if (r.visual.size() != dv || r.text.size() != dt)
      throw ConfigError(std::string(what) + " record '" + r.qa_id +
                        "' has inconsistent embedding dimensions");
    if (!r.target)
      throw ConfigError(std::string(what) + " record '" + r.qa_id +
                        "' has no target box");
    Example<T> e;
    e.visual.assign(r.visual.begin(), r.visual.end());
    e.text.assign(r.text.begin(), r.text.end());
    for (T v : e.visual)
      if (!std::isfinite(v)) throw DataError("non-finite embedding in '" + r.qa_id + "'");
    for (T v : e.text)
      if (!std::isfinite(v)) throw DataError("non-finite embedding in '" + r.qa_id + "'");
    e.target = box_coords<T>(*r.target);
    e.target_box = *r.target;
    out.push_back(std::move(e));
  }
  return out;
}

// Mean loss and MeanIoU over a set, reduced in record order.
template <typename T>
std::pair<double, double> evaluate(const RegressorParams<T>& params,
                                   std::span<const Example<T>> examples) {
  if (examples.empty()) return {0.0, 0.0};
  ForwardTrace<T> tr;
  double loss = 0.0;
  std::vector<BoxPair> pairs;
  pairs.reserve(examples.size());
  for (const Example<T>& e : examples) {
    forward_trace<T>(params, e.visual, e.text, tr);
    loss += static_cast<double>(huber_loss<T>(tr.box, e.target));
    pairs.emplace_back(NormBox{static_cast<double>(tr.box[0]), static_cast<double>(tr.box[1]),
                               static_cast<double>(tr.box[2]), static_cast<double>(tr.box[3])},
                       e.target_box);
  }
  return {loss / static_cast<double>(examples.size()), mean_iou(pairs)};
}

}  // namespace regressor_detail

// Mini-batch Adam on the mean Huber loss. After each epoch the full
// training loss, training MeanIoU and validation MeanIoU are recorded; the
// returned checkpoint is the epoch with the highest validation MeanIoU
// (earliest on ties). An empty validation set falls back to the training
// records.
template <typename T>
TrainResult<T> train(std::span<const EmbeddingRecord> records,
                     std::span<const EmbeddingRecord> val,
                     const TrainConfig& cfg) {
  using namespace regressor_detail;
  cfg.validate();
  if (records.empty()) throw ConfigError("training set is empty");
  const std::size_t dv = records.front().visual.size();
  const std::size_t dt = records.front().text.size();
  const auto train_set = to_examples<T>(records, dv, dt, "training");
  const auto val_set = val.empty() ? train_set : to_examples<T>(val, dv, dt, "validation");

  RegressorParams<T> params = init_params<T>(dv, dt, cfg);
  RegressorParams<T> grads = params.zeros_like();
  RegressorParams<T> m = params.zeros_like();
  RegressorParams<T> v = params.zeros_like();
  ForwardTrace<T> tr;

  // Shuffling draws from a stream separate from initialization.
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult<T> result;
  bool have_best = false;
  std::uint64_t step = 0;
  const T lr = static_cast<T>(cfg.learning_rate);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T eps = static_cast<T>(cfg.epsilon);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const T scale = T{1} / static_cast<T>(end - start);
      for (auto& g : grads.tensors) std::fill(g.values.begin(), g.values.end(), T{0});
      T batch_loss{0};
      for (std::size_t k = start; k < end; ++k) {
        const Example<T>& e = train_set[order[k]];
        batch_loss += accumulate_gradients<T>(params, e.visual, e.text, e.target, scale, grads, tr);
      }
      if (!std::isfinite(batch_loss) || !grads.all_finite())
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_index));

      ++step;
      const T c1 = T{1} - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(step)));
      const T c2 = T{1} - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(step)));
      for (std::size_t id = 0; id < kParamCount; ++id) {
        auto& p = params[id].values;
        const auto& g = grads[id].values;
        auto& mm = m[id].values;
        auto& vv = v[id].values;
        for (std::size_t i = 0; i < p.size(); ++i) {
          mm[i] = b1 * mm[i] + (T{1} - b1) * g[i];
          vv[i] = b2 * vv[i] + (T{1} - b2) * g[i] * g[i];
          const T mhat = mm[i] / c1;
          const T vhat = vv[i] / c2;
          p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
      }
      if (!params.all_finite())
        throw TrainingDiverged("non-finite parameters at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_index));
    }

    const auto [train_loss, train_iou] = evaluate<T>(params, train_set);
    const double val_iou = val.empty() ? train_iou : evaluate<T>(params, val_set).second;
    if (!std::isfinite(train_loss))
      throw TrainingDiverged("non-finite epoch loss at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, train_loss, train_iou, val_iou});
    if (!have_best || val_iou > result.best.val_mean_iou) {
      result.best = Checkpoint<T>{params, cfg, epoch, val_iou, train_loss};
      have_best = true;
    }
  }
  return result;
}

template <typename T>
NormBox predict(const Checkpoint<T>& ckpt, const EmbeddingRecord& rec) {
  check_input_dims(ckpt.params, rec.visual.size(), rec.text.size());
  const std::vector<T> visual(rec.visual.begin(), rec.visual.end());
  const std::vector<T> text(rec.text.begin(), rec.text.end());
  return forward<T>(ckpt.params, visual, text);
}

}  // namespace docground
