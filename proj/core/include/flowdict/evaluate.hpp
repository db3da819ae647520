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

#ifndef FLOWDICT_EVALUATE_HPP
#define FLOWDICT_EVALUATE_HPP

#include <optional>
#include <vector>

#include "flowdict/data_io.hpp"
#include "flowdict/dataset.hpp"
#include "flowdict/lasso.hpp"
#include "flowdict/model.hpp"

namespace flowdict {

struct EvalOptions {
  /// 0 keeps the model's window side; any odd positive value overrides it
  /// (1 reproduces the unaligned baseline with the same dictionary).
  int window_override = 0;
  /// Warp applied to each raw image before patch extraction.
  std::optional<DeformSpec> deform;
  /// Solver settings for every encode; callers usually copy the training
  /// lambda here.
  SolverConfig solver;
};

struct EvalReport {
  int n_test = 0;
  int errors = 0;
  double error_rate = 0.0;
  double mean_active = 0.0;
  /// Predicted class per sample, in dataset order.
  std::vector<int> predictions;
  std::vector<int> per_class_total;
  std::vector<int> per_class_errors;
};

/// Encodes and classifies every sample.  Deterministic for every thread
/// count: each sample writes only its own slot and aggregation runs in
/// dataset order.
EvalReport evaluate_model(const Model& model, const RawDataset& data,
                          const EvalOptions& opts = {});

}  // namespace flowdict

#endif  // FLOWDICT_EVALUATE_HPP
