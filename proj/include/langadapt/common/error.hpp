// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace langadapt {

/// Base class for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter or configuration; detected before any work is done.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// File could not be opened, read, or written.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Input data violates an operation's precondition at runtime.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Operation called in the wrong state (e.g. adapters attached twice).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace langadapt
