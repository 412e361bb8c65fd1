// Copyright 2026 The lamda Authors.
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

namespace lamda {

// Base of every error the library raises. The CLI maps each subclass to an
// exit code (numerical failures -> 3, everything else -> 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not line up for an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied configuration (ranks out of range, unknown keys...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced, SVD failed to converge, training diverged.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed container or CSV/JSON input.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace lamda
