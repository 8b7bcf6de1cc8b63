// Copyright 2026 The effgan-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace effgan {

// Base of every error thrown by the core library. The C API maps the
// concrete type onto an effgan_status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument shapes or violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Dimension mismatch between two operands.
class ShapeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Non-finite loss or gradient during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Unknown key or an invariant violation in an experiment configuration.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key.empty() ? message : "config key '" + key + "': " + message),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed IDX input. Each failure mode has its own kind so callers can
// distinguish a wrong file from a damaged one.
class IdxError : public Error {
 public:
  enum class Kind { kBadMagic, kTruncated, kCountMismatch };

  IdxError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Label-skew partition cannot be satisfied by the source dataset.
class InfeasiblePartition : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace effgan
