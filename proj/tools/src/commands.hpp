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

#ifndef FLOWDICT_TOOLS_COMMANDS_HPP
#define FLOWDICT_TOOLS_COMMANDS_HPP

#include <string>

namespace flowdict::tools {

/// Trains a model from a key=value config file, saving the model and an
/// epoch-metrics CSV.  `full` ignores the train_limit/test_limit keys and
/// runs the complete dataset protocol.
int cmd_train(const std::string& config_path, bool full);

struct EvalArgs {
  std::string model_path;
  std::string images_path;
  /// Empty selects the sparse-text reader for images_path; otherwise the
  /// pair is parsed as an IDX image/label file pair.
  std::string labels_path;
  /// "kind=value" with kind in {translate_x, translate_xy, rotate, scale};
  /// empty means no deformation.
  std::string deform;
  /// 0 keeps the model's window side.
  int window = 0;
  /// 0 evaluates every sample.
  int limit = 0;
  /// 0 uses the lambda recorded in the model's config snapshot.
  double lambda = 0.0;
  /// Empty writes the report to stdout.
  std::string out_path;
};

/// Encodes and classifies a test set, writing per-sample predictions with
/// per-class and overall error summaries.
int cmd_eval(const EvalArgs& args);

/// Runs a training-size or deformation sweep from a config file, writing a
/// long-form CSV and an SVG plot of both methods with their difference
/// band.
int cmd_sweep(const std::string& config_path);

/// Writes every dictionary atom as a PGM image into out_dir.
int cmd_export_dict(const std::string& model_path, const std::string& out_dir);

}  // namespace flowdict::tools

#endif  // FLOWDICT_TOOLS_COMMANDS_HPP
