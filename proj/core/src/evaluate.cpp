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

#include "flowdict/evaluate.hpp"

#include <cstddef>

#include "flowdict/errors.hpp"
#include "flowdict/lasso.hpp"
#include "flowdict/parallel.hpp"

namespace flowdict {

EvalReport evaluate_model(const Model& model, const RawDataset& data,
                          const EvalOptions& opts) {
  validate_dataset(data);
  validate_classifier(model.classifier);
  const int classes = model.classifier.classes();
  for (int label : data.labels) {
    if (label >= classes) {
      throw DataFormatError("evaluate: label outside the model's classes");
    }
  }
  int window = model.window_side;
  if (opts.window_override != 0) {
    if (opts.window_override < 1 || opts.window_override % 2 == 0) {
      throw ConfigError("evaluate: window override must be odd and positive");
    }
    window = opts.window_override;
  }
  if (opts.deform) validate_deform_spec(*opts.deform);

  const PatchGrid& grid = model.dict.grid();
  const SolverConfig& solver_cfg = opts.solver;
  validate_solver_config(solver_cfg);

  EvalReport report;
  report.n_test = data.size();
  report.predictions.assign(static_cast<std::size_t>(data.size()), -1);
  report.per_class_total.assign(static_cast<std::size_t>(classes), 0);
  report.per_class_errors.assign(static_cast<std::size_t>(classes), 0);
  if (data.size() == 0) return report;

  Eigen::MatrixXd hint;
  const Eigen::MatrixXd* hint_ptr = nullptr;
  if (window == 1) {
    hint = unaligned_gram(model.dict);
    hint_ptr = &hint;
  }

  std::vector<double> actives(static_cast<std::size_t>(data.size()), 0.0);
  parallel_chunks(
      static_cast<std::size_t>(data.size()), 8,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          Eigen::MatrixXd img = data.images[i];
          if (opts.deform) img = deform(img, *opts.deform);
          const TensorImage x = tensorize(img, grid.patch, grid.stride);
          const EncodeResult enc =
              encode(model.dict, x, window, solver_cfg, hint_ptr);
          report.predictions[i] = predict(model.classifier, enc.code.alpha);
          actives[i] = static_cast<double>(enc.code.active_set.size());
        }
      });

  double active_sum = 0.0;
  for (std::size_t i = 0; i < report.predictions.size(); ++i) {
    const int truth = data.labels[i];
    report.per_class_total[static_cast<std::size_t>(truth)] += 1;
    if (report.predictions[i] != truth) {
      report.errors += 1;
      report.per_class_errors[static_cast<std::size_t>(truth)] += 1;
    }
    active_sum += actives[i];
  }
  report.error_rate =
      static_cast<double>(report.errors) / static_cast<double>(report.n_test);
  report.mean_active = active_sum / static_cast<double>(report.n_test);
  return report;
}

}  // namespace flowdict
