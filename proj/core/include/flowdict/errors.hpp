// Copyright 2026 The flowdict authors
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

#ifndef FLOWDICT_ERRORS_HPP
#define FLOWDICT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flowdict {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or grid-metadata disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input bytes: IDX container, USPS text, model file.
class DataFormatError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration (missing key, unparseable value). Carries a
/// line number when the problem is tied to a config-file line.
class ConfigError : public Error {
 public:
  using Error::Error;
  ConfigError(const std::string& message, int line)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

/// Numerical breakdown: singular or ill-conditioned systems, non-finite
/// values, violated optimality preconditions.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowdict

#endif  // FLOWDICT_ERRORS_HPP
