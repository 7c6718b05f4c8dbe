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

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>

#include "docground/errors.hpp"
#include "docground/json_util.hpp"
#include "docground/rng.hpp"
#include "httplib.h"
#include "json.hpp"

namespace docground {

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

inline std::string base64_encode(std::string_view in) {
  static constexpr char table[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                            (static_cast<unsigned char>(in[i + 1]) << 8) |
                            static_cast<unsigned char>(in[i + 2]);
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out.push_back(table[v & 63]);
  }
  if (i < in.size()) {
    std::uint32_t v = static_cast<unsigned char>(in[i]) << 16;
    if (i + 1 < in.size()) v |= static_cast<unsigned char>(in[i + 1]) << 8;
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(i + 1 < in.size() ? table[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::string image_media_type(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/png";
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

enum class WireFlavor { openai_chat, anthropic_messages };

inline WireFlavor parse_flavor(std::string_view s) {
  if (s == "openai_chat") return WireFlavor::openai_chat;
  if (s == "anthropic_messages") return WireFlavor::anthropic_messages;
  throw ConfigError("unknown endpoint flavor '" + std::string(s) + "'");
}

inline const char* to_string(WireFlavor f) {
  return f == WireFlavor::anthropic_messages ? "anthropic_messages" : "openai_chat";
}

struct ModelEndpoint {
  std::string name;      // report label, also part of the transcript key
  std::string base_url;  // API root, e.g. http://localhost:8000/v1
  std::string model;     // model id sent on the wire; defaults to name
  WireFlavor flavor = WireFlavor::openai_chat;
  std::string auth_env;  // empty when the endpoint needs no key
  std::size_t max_concurrency = 1;
  double timeout_seconds = 120.0;
  double temperature = 0.0;
  int max_tokens = 512;

  void validate() const {
    if (name.empty()) throw ConfigError("endpoint name must not be empty");
    if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (!(timeout_seconds > 0.0)) throw ConfigError("timeout must be > 0");
  }

  const std::string& wire_model() const { return model.empty() ? name : model; }
};

inline ModelEndpoint endpoint_from_json(const nlohmann::json& j) {
  ModelEndpoint e;
  try {
    e.name = j.at("name").get<std::string>();
    e.base_url = j.value("base_url", std::string());
    e.model = j.value("model", std::string());
    e.flavor = parse_flavor(j.value("flavor", std::string("openai_chat")));
    e.auth_env = j.value("auth_env", std::string());
    e.max_concurrency = j.value("max_concurrency", e.max_concurrency);
    e.timeout_seconds = j.value("timeout", e.timeout_seconds);
    e.temperature = j.value("temperature", e.temperature);
    e.max_tokens = j.value("max_tokens", e.max_tokens);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad endpoint config: ") + ex.what());
  }
  e.validate();
  return e;
}

// Digest of (endpoint, prompt, image bytes). The image participates
// through its own digest, taken over the raw file bytes.
inline std::string transcript_key(std::string_view endpoint_name, std::string_view prompt,
                                  std::string_view image_bytes) {
  std::string material;
  material.reserve(endpoint_name.size() + prompt.size() + 66);
  material.append(endpoint_name);
  material.push_back('\0');
  material.append(prompt);
  material.push_back('\0');
  material.append(sha256_hex(image_bytes));
  return sha256_hex(material);
}

struct Transcript {
  std::string key;
  std::string endpoint;
  std::string response;
  std::int64_t latency_ms = 0;
  std::string timestamp;
};

inline nlohmann::json to_json(const Transcript& t) {
  return {{"key", t.key},
          {"endpoint", t.endpoint},
          {"response", t.response},
          {"latency_ms", t.latency_ms},
          {"ts", t.timestamp}};
}

// JSON-lines transcript store. Single writer, many readers; when a key is
// recorded twice the later entry wins.
class TranscriptStore {
 public:
  TranscriptStore() = default;

  static constexpr bool kAppend = true;

  // Loads `path`. With append set the file may be missing and new records
  // are appended to it as they arrive.
  explicit TranscriptStore(const std::filesystem::path& path, bool append = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in && !append) throw IoError("cannot open transcript store " + path.string());
    if (in) load(in);
    if (append) {
      sink_.open(path, std::ios::binary | std::ios::app);
      if (!sink_) throw IoError("cannot append to transcript store " + path.string());
    }
  }

  TranscriptStore(const TranscriptStore&) = delete;
  TranscriptStore& operator=(const TranscriptStore&) = delete;

  void load(std::istream& in) {
    std::unique_lock lock(mu_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object())
        throw ParseError(lineno, "transcript is not a JSON object");
      try {
        Transcript t{j.at("key").get<std::string>(), j.at("endpoint").get<std::string>(),
                     j.at("response").get<std::string>(), j.value("latency_ms", std::int64_t{0}),
                     j.value("ts", std::string())};
        by_key_[t.key] = std::move(t);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(lineno, std::string("bad transcript: ") + e.what());
      }
    }
  }

  std::optional<Transcript> find(const std::string& key) const {
    std::shared_lock lock(mu_);
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
  }

  void record(Transcript t) {
    std::unique_lock lock(mu_);
    if (sink_.is_open()) {
      sink_ << dump_json(to_json(t)) << '\n';
      sink_.flush();
    }
    by_key_[t.key] = std::move(t);
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return by_key_.size();
  }

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Transcript> by_key_;
  std::ofstream sink_;
};

// Looks up a recorded response. Never touches the network.
inline std::string replay_query(const TranscriptStore& store, const ModelEndpoint& endpoint,
                                std::string_view prompt, std::string_view image_bytes) {
  const std::string key = transcript_key(endpoint.name, prompt, image_bytes);
  if (auto t = store.find(key)) return t->response;
  throw ReplayMiss(key);
}

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double multiplier = 2.0;

  // Upper bound of the jittered wait before retry number `retry` (0-based):
  // base, 2*base, 4*base, ...
  std::chrono::milliseconds ceiling(int retry) const {
    double d = static_cast<double>(base_delay.count());
    for (int i = 0; i < retry; ++i) d *= multiplier;
    return std::chrono::milliseconds(static_cast<std::int64_t>(d));
  }
};

struct ClientOptions {
  RetryPolicy retry;
  // Defaults to std::this_thread::sleep_for; tests substitute a recorder.
  std::function<void(std::chrono::milliseconds)> sleep;
  std::function<void(const std::string&)> log;
  TranscriptStore* recorder = nullptr;
  std::uint64_t jitter_seed = 0x5eed;
};

struct QueryResult {
  std::string text;
  int attempts = 0;
  std::int64_t latency_ms = 0;
  std::string key;
};

namespace client_detail {

class Semaphore {
 public:
  explicit Semaphore(std::size_t n) : free_(n) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_;
};

struct Permit {
  explicit Permit(Semaphore& s) : sem(s) { sem.acquire(); }
  ~Permit() { sem.release(); }
  Permit(const Permit&) = delete;
  Permit& operator=(const Permit&) = delete;
  Semaphore& sem;
};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("base_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

inline std::string openai_payload(const ModelEndpoint& e, std::string_view prompt,
                                  const std::string& media_type, std::string_view image) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt}});
  if (!image.empty())
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:" + media_type + ";base64," + base64_encode(image)}}}});
  nlohmann::json body = {{"model", e.wire_model()},
                         {"temperature", e.temperature},
                         {"max_tokens", e.max_tokens},
                         {"messages", {{{"role", "user"}, {"content", content}}}}};
  return dump_json(body);
}

inline std::string anthropic_payload(const ModelEndpoint& e, std::string_view prompt,
                                     const std::string& media_type, std::string_view image) {
  nlohmann::json content = nlohmann::json::array();
  if (!image.empty())
    content.push_back({{"type", "image"},
                       {"source", {{"type", "base64"}, {"media_type", media_type}, {"data", base64_encode(image)}}}});
  content.push_back({{"type", "text"}, {"text", prompt}});
  nlohmann::json body = {{"model", e.wire_model()},
                         {"temperature", e.temperature},
                         {"max_tokens", e.max_tokens},
                         {"messages", {{{"role", "user"}, {"content", content}}}}};
  return dump_json(body);
}

inline std::string response_text(WireFlavor flavor, const std::string& body) {
  const nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw TransportError("endpoint returned a non-JSON body", 200);
  std::string text;
  auto concat_blocks = [&](const nlohmann::json& blocks) {
    for (const auto& b : blocks)
      if (b.is_object() && b.value("type", "") == "text" && b.contains("text") && b["text"].is_string())
        text += b["text"].get<std::string>();
  };
  if (flavor == WireFlavor::openai_chat) {
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty())
      throw TransportError("response has no choices", 200);
    const auto& msg = (*choices)[0].value("message", nlohmann::json::object());
    const auto c = msg.find("content");
    if (c == msg.end()) throw TransportError("response message has no content", 200);
    if (c->is_string()) text = c->get<std::string>();
    else if (c->is_array()) concat_blocks(*c);
  } else {
    const auto c = j.find("content");
    if (c == j.end() || !c->is_array()) throw TransportError("response has no content blocks", 200);
    concat_blocks(*c);
  }
  return text;
}

}  // namespace client_detail

// HTTP client for one endpoint. Shareable across threads; at most
// max_concurrency requests are in flight at once. Transient failures
// (429, 5xx, connection errors, timeouts) are retried with exponential
// backoff and full jitter.
class VlmClient {
 public:
  explicit VlmClient(ModelEndpoint endpoint, ClientOptions options = {})
      : endpoint_(std::move(endpoint)),
        options_(std::move(options)),
        slots_(endpoint_.max_concurrency),
        jitter_(options_.jitter_seed) {
    endpoint_.validate();
    if (!options_.sleep)
      options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (!options_.log) options_.log = [](const std::string& m) { std::clog << m << '\n'; };
  }

  const ModelEndpoint& endpoint() const { return endpoint_; }

  QueryResult query(std::string_view prompt, const std::filesystem::path& image) {
    const std::string api_key = resolve_key();
    const std::string bytes = read_file_bytes(image);
    return send(prompt, bytes, image_media_type(image), api_key);
  }

  QueryResult query_bytes(std::string_view prompt, std::string_view image_bytes,
                          const std::string& media_type = "image/png") {
    const std::string api_key = resolve_key();
    return send(prompt, image_bytes, media_type, api_key);
  }

 private:
  std::string resolve_key() const {
    if (endpoint_.auth_env.empty()) return {};
    const char* v = std::getenv(endpoint_.auth_env.c_str());
    if (!v || !*v)
      throw ConfigError("environment variable " + endpoint_.auth_env + " is not set for endpoint " +
                        endpoint_.name);
    return v;
  }

  QueryResult send(std::string_view prompt, std::string_view image, const std::string& media_type,
                   const std::string& api_key) {
    using namespace client_detail;
    if (endpoint_.base_url.empty()) throw ConfigError("endpoint " + endpoint_.name + " has no base_url");
    const SplitUrl url = split_url(endpoint_.base_url);
    const bool anthropic = endpoint_.flavor == WireFlavor::anthropic_messages;
    const std::string path = url.path + (anthropic ? "/messages" : "/chat/completions");
    const std::string body = anthropic ? anthropic_payload(endpoint_, prompt, media_type, image)
                                       : openai_payload(endpoint_, prompt, media_type, image);
    httplib::Headers headers;
    if (anthropic) {
      headers.emplace("anthropic-version", "2023-06-01");
      if (!api_key.empty()) headers.emplace("x-api-key", api_key);
    } else if (!api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + api_key);
    }

    const auto timeout = std::chrono::duration<double>(endpoint_.timeout_seconds);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    const auto sec = static_cast<time_t>(timeout_us.count() / 1000000);
    const auto usec = static_cast<time_t>(timeout_us.count() % 1000000);

    int last_status = -1;
    std::string last_error;
    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
      bool retryable = false;
      {
        Permit permit(slots_);
        httplib::Client cli(url.origin);
        cli.set_connection_timeout(sec, usec);
        cli.set_read_timeout(sec, usec);
        cli.set_write_timeout(sec, usec);
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
          last_status = -1;
          last_error = httplib::to_string(res.error());
          retryable = true;
        } else {
          last_status = res->status;
          if (res->status >= 200 && res->status < 300) {
            QueryResult out;
            out.text = response_text(endpoint_.flavor, res->body);
            out.attempts = attempt;
            out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
            out.key = transcript_key(endpoint_.name, prompt, image);
            if (options_.recorder)
              options_.recorder->record(
                  Transcript{out.key, endpoint_.name, out.text, out.latency_ms, utc_timestamp()});
            return out;
          }
          last_error = "HTTP " + std::to_string(res->status);
          retryable = res->status == 429 || res->status >= 500;
        }
      }
      if (!retryable)
        throw TransportError(endpoint_.name + ": request rejected (" + last_error + ")", last_status);
      if (attempt == options_.retry.max_attempts) break;
      const auto wait = jittered(options_.retry.ceiling(attempt - 1));
      options_.log(endpoint_.name + ": attempt " + std::to_string(attempt) + " failed (" + last_error +
                   "), retrying in " + std::to_string(wait.count()) + " ms");
      options_.sleep(wait);
    }
    throw TransportError(endpoint_.name + ": giving up after " + std::to_string(options_.retry.max_attempts) +
                             " attempts (" + last_error + ")",
                         last_status);
  }

  std::chrono::milliseconds jittered(std::chrono::milliseconds ceiling) {
    std::lock_guard lock(jitter_mu_);
    return std::chrono::milliseconds(
        static_cast<std::int64_t>(jitter_.uniform() * static_cast<double>(ceiling.count())));
  }

  ModelEndpoint endpoint_;
  ClientOptions options_;
  client_detail::Semaphore slots_;
  std::mutex jitter_mu_;
  Rng jitter_;
};

}  // namespace docground
