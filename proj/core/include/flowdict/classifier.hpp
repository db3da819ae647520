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

#ifndef FLOWDICT_CLASSIFIER_HPP
#define FLOWDICT_CLASSIFIER_HPP

#include <Eigen/Core>

namespace flowdict {

/// Linear one-vs-all classifier over sparse codes.  weights is C x (N+1);
/// the last column is a bias acting on a constant 1 appended to the code
/// and is exempt from the mu regularizer.
struct ClassifierParams {
  Eigen::MatrixXd weights;
  double mu = 1e-4;

  int classes() const { return static_cast<int>(weights.rows()); }
  int code_dim() const { return static_cast<int>(weights.cols()) - 1; }
};

/// Throws unless weights is finite with at least 2 rows and 2 columns and
/// mu is finite and nonnegative.
void validate_classifier(const ClassifierParams& params);

/// One-vs-all target: +1 at class_index, -1 elsewhere.
struct Label {
  int class_index = 0;
  Eigen::VectorXd one_vs_all;
};

/// Builds a Label; throws unless 0 <= class_index < num_classes and
/// num_classes >= 2.
Label make_label(int class_index, int num_classes);

/// Squared hinge loss sum_c max(0, 1 - y_c * w_c^T [alpha; 1])^2.
/// Smooth and convex in both W and alpha; the mu ridge term is NOT
/// included here (it belongs to the training objective, see loss_grad_W).
double svm_loss(const ClassifierParams& params,
                const Eigen::Ref<const Eigen::VectorXd>& alpha,
                const Label& y);

/// Gradient of svm_loss with respect to alpha (bias coordinate dropped).
Eigen::VectorXd svm_loss_grad_alpha(const ClassifierParams& params,
                                    const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                    const Label& y);

/// Gradient of svm_loss + (mu/2) |W_nonbias|_F^2 with respect to W; the
/// bias column carries no ridge term.
Eigen::MatrixXd svm_loss_grad_weights(const ClassifierParams& params,
                                      const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                      const Label& y);

/// argmax_c w_c^T [alpha; 1]; ties go to the smallest class index.
int predict(const ClassifierParams& params,
            const Eigen::Ref<const Eigen::VectorXd>& alpha);

}  // namespace flowdict

#endif  // FLOWDICT_CLASSIFIER_HPP
