// Copyright 2026 The BiUDA Authors
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

namespace biuda {

/// Base class for every error raised by the library. The C API maps each
/// subclass onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or command arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset or checkpoint could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Tensor or raster dimensions do not match the contract of an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Domain controller outside {0, 1}.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input values outside the admissible range (non-simplex probabilities,
/// scores outside [0, 1], ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// A loss became NaN or infinite during training.
class NumericalError : public Error {
 public:
  NumericalError(std::string term, long iteration)
      : Error("non-finite loss term '" + term + "' at iteration " + std::to_string(iteration)),
        term_(std::move(term)),
        iteration_(iteration) {}

  const std::string& term() const noexcept { return term_; }
  long iteration() const noexcept { return iteration_; }

 private:
  std::string term_;
  long iteration_;
};

/// Report generation was asked for rows that are not present.
class ReportError : public Error {
 public:
  using Error::Error;
};

}  // namespace biuda
