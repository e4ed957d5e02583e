// Copyright 2026 The nplm Authors
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

namespace nplm {

// Base class for every error raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

// Malformed or incompatible persisted artifact.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format_error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

// Operation called in the wrong lifecycle state (e.g. querying an untrained
// index).
class StateError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "state_error"; }
};

// A retrieval result references data that was removed after the retrieval
// was made.
class VersionConflict : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "version_conflict"; }
};

}  // namespace nplm
