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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace docground {

// Every failure the toolkit raises derives from Error. The CLI maps the
// four families below onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or API misuse (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be read or does not validate (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// Network failure after retries were exhausted (exit code 3).
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int last_status)
      : Error(what), last_status_(last_status) {}

  // Last HTTP status seen, or -1 when no response was received.
  int last_status() const noexcept { return last_status_; }

 private:
  int last_status_;
};

// A replayed request had no recorded transcript (exit code 4).
class ReplayMiss : public Error {
 public:
  explicit ReplayMiss(const std::string& key, const std::string& context = "")
      : Error((context.empty() ? "" : context + ": ") +
              "replay miss for transcript key " + key),
        key_(key) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace docground
