// Copyright 2026 The MCDRL Authors
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
//
#pragma once

#include <stdexcept>
#include <string>

namespace mcdrl {

// Base of every error raised by the library. Derived types let callers and
// tests distinguish the failure class without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or axis disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf observed in an input or produced by an operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Vector whose norm is at or below the degeneracy threshold.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in a state its contract forbids (e.g. a second backward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Out-of-range hyperparameter, flag, or argument value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad magic, truncated payload, overflowing dims).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure: missing file, unwritable path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcdrl
