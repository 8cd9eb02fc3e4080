// Copyright 2026 The CLNR Authors.
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

namespace clnr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input is valid in type but too small or too degenerate to compute on
/// (fewer than two rows for column statistics, a single class, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a precondition that is not a shape problem.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A graph bundle, checkpoint or embedding file could not be read.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Not enough room to satisfy a sampling request.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Bad run configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace clnr
