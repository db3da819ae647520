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

#ifndef FLOWDICT_LASSO_HPP
#define FLOWDICT_LASSO_HPP

#include <vector>

#include <Eigen/Core>

#include "flowdict/alignment.hpp"
#include "flowdict/tensor.hpp"

namespace flowdict {

/// Per-position effective dictionary for one (dictionary, flow, image)
/// triple, plus the quadratic-form data the solver consumes.
///
/// effective[p] is the M x N matrix whose column n is atom n's subatom
/// selected at position p.  gram = sum_p effective[p]^T effective[p] and
/// correlation = sum_p effective[p]^T x_p, so the data-fit term is
/// 0.5 (a^T gram a - 2 correlation^T a + x_sqnorm).
struct AlignedDictionary {
  std::vector<Eigen::MatrixXd> effective;
  Eigen::MatrixXd gram;
  Eigen::VectorXd correlation;
  double x_sqnorm = 0.0;

  int atoms() const { return static_cast<int>(gram.cols()); }
  int positions() const { return static_cast<int>(effective.size()); }
  int vector_dim() const {
    return effective.empty() ? 0 : static_cast<int>(effective[0].rows());
  }
};

struct SolverStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Full value of the l1 objective at alpha, constant term included.
  double objective = 0.0;
  /// Stationarity violation at the returned alpha (see kkt_residual).
  double kkt = 0.0;
  bool converged = false;
};

/// Solver output.  alpha carries exact zeros on the inactive coordinates
/// (it is the soft-thresholded iterate); active_set lists, in ascending
/// order, the indices with |alpha_n| > activation_tol.
struct SparseCode {
  Eigen::VectorXd alpha;
  std::vector<int> active_set;
  SolverStats stats;
};

struct SolverConfig {
  double lambda = 0.01;
  double admm_penalty = 1.0;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  int max_iter = 1000;
  double activation_tol = 1e-8;
  /// Extra stopping requirement: the residual-based stop is only accepted
  /// once the stationarity violation is at most kkt_tol.
  double kkt_tol = 1e-6;
};

/// Throws ConfigError unless every SolverConfig field is positive,
/// finite, and max_iter >= 1.
void validate_solver_config(const SolverConfig& cfg);

/// Gram matrix of the unaligned dictionary (identity flow):
/// sum_p D_p^T D_p with D_p the M x N matrix of subatoms at position p.
/// The result depends only on the dictionary, so window-side-1 callers can
/// compute it once and pass it to assemble/encode as gram_hint.
Eigen::MatrixXd unaligned_gram(const Dictionary& dict);

/// Builds the effective dictionary, its gram, and the correlation with x.
///
/// gram_hint, when non-null, is trusted verbatim in place of the gram
/// accumulation; it must equal the gram of (dict, flow).  Intended for the
/// identity-flow case where unaligned_gram(dict) is sample-independent.
AlignedDictionary assemble(const Dictionary& dict, const FlowField& flow,
                           const TensorImage& x,
                           const Eigen::MatrixXd* gram_hint = nullptr);

/// Max stationarity violation of the lasso optimality conditions at alpha:
/// with g = gram*alpha - correlation, coordinates with |alpha_n| > zero_tol
/// contribute |g_n + lambda*sign(alpha_n)| and the rest max(0, |g_n| -
/// lambda).  Zero iff alpha is exactly optimal.
double kkt_residual(const Eigen::MatrixXd& gram,
                    const Eigen::VectorXd& correlation,
                    const Eigen::Ref<const Eigen::VectorXd>& alpha,
                    double lambda, double zero_tol = 1e-12);
double kkt_residual(const AlignedDictionary& aligned,
                    const Eigen::Ref<const Eigen::VectorXd>& alpha,
                    double lambda, double zero_tol = 1e-12);

/// ADMM solve of  min_a 0.5 sum_p |effective[p] a - x_p|^2 + lambda |a|_1
/// in its N-dimensional form over (gram, correlation).
///
/// The a-update solves (gram + rho I) a = correlation + rho (z - u) with a
/// Cholesky factorization reused across iterations; z is elementwise soft
/// thresholding at lambda/rho; u is the scaled dual.  rho adapts by the
/// factor-of-two residual-balancing rule when one residual exceeds ten
/// times the other (u rescaled inversely, factorization redone), clamped
/// to [1e-6, 1e6].  Iteration stops when primal and dual residual norms
/// fall below eps_abs*sqrt(N) + eps_rel*scale AND the stationarity
/// violation is at most kkt_tol.  On max_iter the best iterate is
/// returned with stats.converged = false, never thrown.
///
/// warm_start, when non-null, seeds z (and alpha) instead of zero.
/// Throws NumericalError on non-finite input or a failed factorization.
SparseCode solve(const AlignedDictionary& aligned, const SolverConfig& cfg,
                 const Eigen::VectorXd* warm_start = nullptr);

/// End-to-end inference: align, assemble, solve.
struct EncodeResult {
  SparseCode code;
  FlowField flow;
  /// Best-match Euclidean distances from align, atoms x positions.
  Eigen::MatrixXd align_residuals;
  AlignedDictionary aligned;
};

/// The single public inference entry point.  gram_hint is forwarded to
/// assemble and is only legal when window_side == 1 (identity flow).
EncodeResult encode(const Dictionary& dict, const TensorImage& x,
                    int window_side, const SolverConfig& cfg,
                    const Eigen::MatrixXd* gram_hint = nullptr);

}  // namespace flowdict

#endif  // FLOWDICT_LASSO_HPP
