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

#include "flowdict/classifier.hpp"

#include <cmath>

#include "flowdict/errors.hpp"

namespace flowdict {

namespace {

void check_dims(const ClassifierParams& params,
                const Eigen::Ref<const Eigen::VectorXd>& alpha,
                const Label& y) {
  if (params.code_dim() != alpha.size()) {
    throw DimensionError("classifier: code dimension mismatch");
  }
  if (y.one_vs_all.size() != params.classes()) {
    throw DimensionError("classifier: label class count mismatch");
  }
}

/// Margins m_c = w_c^T [alpha; 1].
Eigen::VectorXd margins(const ClassifierParams& params,
                        const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  const Eigen::Index n = alpha.size();
  return params.weights.leftCols(n) * alpha + params.weights.col(n);
}

}  // namespace

void validate_classifier(const ClassifierParams& params) {
  if (params.classes() < 2 || params.weights.cols() < 2) {
    throw DimensionError(
        "classifier: need at least 2 classes and a bias column");
  }
  if (!params.weights.allFinite() || !std::isfinite(params.mu) ||
      params.mu < 0.0) {
    throw NumericalError("classifier: non-finite weights or bad mu");
  }
}

Label make_label(int class_index, int num_classes) {
  if (num_classes < 2 || class_index < 0 || class_index >= num_classes) {
    throw DimensionError("make_label: class index out of range");
  }
  Label y;
  y.class_index = class_index;
  y.one_vs_all = Eigen::VectorXd::Constant(num_classes, -1.0);
  y.one_vs_all[class_index] = 1.0;
  return y;
}

double svm_loss(const ClassifierParams& params,
                const Eigen::Ref<const Eigen::VectorXd>& alpha,
                const Label& y) {
  check_dims(params, alpha, y);
  const Eigen::VectorXd m = margins(params, alpha);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < m.size(); ++c) {
    const double h = std::max(0.0, 1.0 - y.one_vs_all[c] * m[c]);
    loss += h * h;
  }
  return loss;
}

Eigen::VectorXd svm_loss_grad_alpha(
    const ClassifierParams& params,
    const Eigen::Ref<const Eigen::VectorXd>& alpha, const Label& y) {
  check_dims(params, alpha, y);
  const Eigen::VectorXd m = margins(params, alpha);
  // d loss / d m_c = -2 h_c y_c with h_c the hinge slack.
  Eigen::VectorXd dm(m.size());
  for (Eigen::Index c = 0; c < m.size(); ++c) {
    const double h = std::max(0.0, 1.0 - y.one_vs_all[c] * m[c]);
    dm[c] = -2.0 * h * y.one_vs_all[c];
  }
  return params.weights.leftCols(alpha.size()).transpose() * dm;
}

Eigen::MatrixXd svm_loss_grad_weights(
    const ClassifierParams& params,
    const Eigen::Ref<const Eigen::VectorXd>& alpha, const Label& y) {
  check_dims(params, alpha, y);
  const Eigen::Index n = alpha.size();
  const Eigen::VectorXd m = margins(params, alpha);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(params.classes(), n + 1);
  for (Eigen::Index c = 0; c < m.size(); ++c) {
    const double h = std::max(0.0, 1.0 - y.one_vs_all[c] * m[c]);
    if (h > 0.0) {
      const double dm = -2.0 * h * y.one_vs_all[c];
      grad.row(c).head(n) = dm * alpha.transpose();
      grad(c, n) = dm;
    }
  }
  grad.leftCols(n) += params.mu * params.weights.leftCols(n);
  return grad;
}

int predict(const ClassifierParams& params,
            const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  if (params.code_dim() != alpha.size()) {
    throw DimensionError("predict: code dimension mismatch");
  }
  const Eigen::VectorXd m = margins(params, alpha);
  // Ascending scan with strict improvement: ties keep the smallest index.
  int best = 0;
  for (Eigen::Index c = 1; c < m.size(); ++c) {
    if (m[c] > m[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace flowdict
