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

#ifndef FLOWDICT_MODEL_HPP
#define FLOWDICT_MODEL_HPP

#include <string>

#include "flowdict/classifier.hpp"
#include "flowdict/tensor.hpp"

namespace flowdict {

/// A trained pipeline: dictionary, classifier, the window side it was
/// trained with, and a verbatim snapshot of the training configuration.
/// config_text round-trips bit-exactly through serialization.
struct Model {
  Dictionary dict;
  ClassifierParams classifier;
  int window_side = 1;
  std::string config_text;
};

}  // namespace flowdict

#endif  // FLOWDICT_MODEL_HPP
