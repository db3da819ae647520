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

#ifndef FLOWDICT_LEARN_HPP
#define FLOWDICT_LEARN_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowdict/classifier.hpp"
#include "flowdict/dataset.hpp"
#include "flowdict/lasso.hpp"
#include "flowdict/model.hpp"
#include "flowdict/tensor.hpp"

namespace flowdict {

/// Supervised dictionary learning configuration.
struct LearnConfig {
  int atoms = 150;
  double rho0 = 0.001;
  int batch_size = 512;
  int epochs = 5;
  /// t0 of the step-size schedule rho_t = rho0 / (1 + t/t0), in batches.
  int decay_halflife = 1000;
  double lambda = 0.01;
  double mu = 1e-4;
  int window_side = 5;
  int patch_size = 5;
  int stride = 1;
  std::uint64_t seed = 0;
  /// Retrain the classifier on frozen final codes after the joint phase.
  bool refit_svm = false;

  /// The solver settings used for every encode during learning.
  SolverConfig solver() const {
    SolverConfig cfg;
    cfg.lambda = lambda;
    return cfg;
  }
};

/// Throws ConfigError on nonpositive sizes/rates, an even or nonpositive
/// window, or negative mu.
void validate_learn_config(const LearnConfig& cfg);

/// Mutable state advanced by sgd_step.
struct TrainState {
  Dictionary dict;
  ClassifierParams classifier;
  /// Batches applied so far; drives the step-size schedule.
  long t = 0;
  std::mt19937_64 rng;

  // Running metrics of the most recent batch.
  double last_mean_loss = 0.0;
  double last_mean_active = 0.0;
  int last_errors = 0;
  int last_used = 0;
  int last_skipped = 0;
};

/// Dense dictionary gradient: one M x P array per atom.
using DictGradient = std::vector<Eigen::MatrixXd>;

/// Gradient of the sample loss with respect to the dictionary, computed by
/// differentiating the solver's optimality conditions at the fixed point
/// with the flow held constant (a small dictionary change that flips no
/// best-match winner leaves the flow bit-identical, so its derivative
/// contributes nothing).
///
/// Adjoint form: solve G beta = galpha restricted to the active set, where
/// G is the active-column gram; then for each position p the gradient of
/// the effective column of active atom j is beta_j * r_p - alpha_j * v_p
/// with r_p the reconstruction residual and v_p the effective columns
/// applied to beta.  Each effective-column gradient is scattered onto the
/// subatom the flow selected there; positions sharing a subatom sum.
///
/// Preconditions: `code` must satisfy the optimality conditions for
/// (dict, flow, x) to within kkt_guard, and the active-column gram must be
/// well conditioned; violations raise NumericalError.  An empty active set
/// yields a zero gradient.
DictGradient grad_dictionary_adjoint(
    const Dictionary& dict, const FlowField& flow, const TensorImage& x,
    const SparseCode& code, const Eigen::Ref<const Eigen::VectorXd>& galpha,
    double lambda, double kkt_guard = 1e-4);

/// As above but sums into `grad` (shaped like the dictionary, caller
/// allocated) and reuses a precomputed effective dictionary for
/// (dict, flow, x).
void accumulate_grad_dictionary_adjoint(
    const AlignedDictionary& aligned, const FlowField& flow,
    const TensorImage& x, const SparseCode& code,
    const Eigen::Ref<const Eigen::VectorXd>& galpha, double lambda,
    double kkt_guard, DictGradient& grad);

/// Slow per-entry oracle: the derivative of the active coefficients with
/// respect to a single dictionary entry (element m of atom n's subatom at
/// grid position p), evaluated by assembling both derivative terms of the
/// optimality-condition identity explicitly and solving against the
/// active-column gram.  Returns a vector over the active set; zero when
/// atom n is inactive or the subatom is selected at no position.
Eigen::VectorXd jacobian_entry(const Dictionary& dict, const FlowField& flow,
                               const TensorImage& x, const SparseCode& code,
                               int m, int n, int p, double lambda,
                               double kkt_guard = 1e-4);

/// Rescales every atom to unit Frobenius norm.  Throws NumericalError on a
/// zero or non-finite atom.
Dictionary project_unit_fro(const Dictionary& dict);

/// What one sgd_step did, for logging.
struct BatchStats {
  double mean_loss = 0.0;
  double mean_active = 0.0;
  /// Misclassified samples under the pre-update classifier.
  int errors = 0;
  /// Samples contributing gradients (converged, well-conditioned).
  int used = 0;
  int skipped = 0;
};

/// One stochastic step over batch_indices into `data`: encode every
/// sample, average the classifier and dictionary gradients over the usable
/// samples, step W, step the dictionary, and project atoms back to unit
/// norm.  Samples whose solve does not converge or whose active-column
/// gram is ill conditioned are skipped with a warning on stderr.  Results
/// are identical for every thread count.
BatchStats sgd_step(TrainState& state, const RawDataset& data,
                    const std::vector<int>& batch_indices,
                    const LearnConfig& cfg);

/// Per-epoch log row.
struct EpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_error = 0.0;
  double mean_active_set = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> epochs;
};

/// Called after every applied batch with the updated state and the
/// 0-based global step index.
using StepObserver = std::function<void(const TrainState&, long)>;

/// Full training loop: stratified dictionary initialization, zero
/// classifier init, epochs x ceil(size/batch) steps over reshuffled data.
/// config_snapshot is stored verbatim in the returned model.
TrainResult train(const RawDataset& data, const LearnConfig& cfg,
                  std::string config_snapshot = "",
                  const StepObserver& observer = nullptr);

/// N images drawn class-stratified (round-robin over shuffled per-class
/// pools, no replacement), tensorized and normalized to unit Frobenius
/// norm; class hints record the source labels.
Dictionary init_dictionary(const RawDataset& data, int atoms, int patch,
                           int stride, std::uint64_t seed);

/// Trains a fresh classifier on fixed codes by full-batch gradient descent
/// with backtracking line search on the ridge-regularized squared hinge
/// objective.
ClassifierParams refit_classifier(const std::vector<Eigen::VectorXd>& codes,
                                  const std::vector<Label>& labels,
                                  int num_classes, double mu);

}  // namespace flowdict

#endif  // FLOWDICT_LEARN_HPP
