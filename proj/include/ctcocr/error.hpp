// Copyright 2026 The ctcocr Authors.
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

#include <stdexcept>
#include <string>

namespace ctcocr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or image extents are incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value lies outside the domain an operation accepts (bad label index, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An input violates a documented precondition (e.g. rows not log-normalized).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// API misuse: non-scalar backward root, oversized oracle instance, ...
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset or image content problems.
class DataError : public Error {
 public:
  using Error::Error;
};

// Checkpoint failed its checksum or is structurally truncated.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctcocr
