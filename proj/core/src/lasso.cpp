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

#include "flowdict/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "flowdict/errors.hpp"

namespace flowdict {

namespace {

constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kBalanceRatio = 10.0;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string("solver config: ") + name +
                      " must be positive and finite");
  }
}

double soft_threshold(double v, double k) {
  if (v > k) return v - k;
  if (v < -k) return v + k;
  return 0.0;
}

}  // namespace

void validate_solver_config(const SolverConfig& cfg) {
  require_positive(cfg.lambda, "lambda");
  require_positive(cfg.admm_penalty, "admm_penalty");
  require_positive(cfg.eps_abs, "eps_abs");
  require_positive(cfg.eps_rel, "eps_rel");
  require_positive(cfg.activation_tol, "activation_tol");
  require_positive(cfg.kkt_tol, "kkt_tol");
  if (cfg.max_iter < 1) {
    throw ConfigError("solver config: max_iter must be at least 1");
  }
}

Eigen::MatrixXd unaligned_gram(const Dictionary& dict) {
  const int atoms = static_cast<int>(dict.size());
  if (atoms == 0) throw DimensionError("unaligned_gram: empty dictionary");
  const PatchGrid& grid = dict.grid();
  const int positions = grid.positions();
  const int m = grid.vector_dim();

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(atoms, atoms);
  Eigen::MatrixXd slice(m, atoms);
  for (int p = 0; p < positions; ++p) {
    for (int n = 0; n < atoms; ++n) {
      slice.col(n) = dict.atom(n).data().col(p);
    }
    gram.selfadjointView<Eigen::Lower>().rankUpdate(slice.transpose());
  }
  return gram.selfadjointView<Eigen::Lower>();
}

AlignedDictionary assemble(const Dictionary& dict, const FlowField& flow,
                           const TensorImage& x,
                           const Eigen::MatrixXd* gram_hint) {
  const int atoms = static_cast<int>(dict.size());
  if (atoms == 0) throw DimensionError("assemble: empty dictionary");
  if (!compatible(dict.grid(), x.grid())) {
    throw DimensionError("assemble: dictionary and image grids differ");
  }

  const PatchGrid& grid = x.grid();
  const int positions = grid.positions();
  const int m = grid.vector_dim();
  if (flow.atoms() != atoms || flow.positions() != positions) {
    throw DimensionError("assemble: flow shape mismatch");
  }
  if ((flow.selected.array() < 0).any() ||
      (flow.selected.array() >= positions).any()) {
    throw DimensionError("assemble: flow index out of range");
  }

  AlignedDictionary out;
  out.effective.resize(static_cast<std::size_t>(positions));
  out.correlation = Eigen::VectorXd::Zero(atoms);
  out.x_sqnorm = 0.0;

  const bool accumulate_gram = (gram_hint == nullptr);
  Eigen::MatrixXd gram;
  if (accumulate_gram) {
    gram = Eigen::MatrixXd::Zero(atoms, atoms);
  } else {
    if (gram_hint->rows() != atoms || gram_hint->cols() != atoms) {
      throw DimensionError("assemble: gram_hint has wrong shape");
    }
    gram = *gram_hint;
  }

  for (int p = 0; p < positions; ++p) {
    Eigen::MatrixXd& slice = out.effective[static_cast<std::size_t>(p)];
    slice.resize(m, atoms);
    for (int n = 0; n < atoms; ++n) {
      slice.col(n) = dict.atom(n).data().col(flow.selected(n, p));
    }
    const auto xp = x.data().col(p);
    out.correlation.noalias() += slice.transpose() * xp;
    out.x_sqnorm += xp.squaredNorm();
    if (accumulate_gram) {
      gram.selfadjointView<Eigen::Lower>().rankUpdate(slice.transpose());
    }
  }
  if (accumulate_gram) {
    out.gram = gram.selfadjointView<Eigen::Lower>();
  } else {
    out.gram = std::move(gram);
  }
  return out;
}

double kkt_residual(const Eigen::MatrixXd& gram,
                    const Eigen::VectorXd& correlation,
                    const Eigen::Ref<const Eigen::VectorXd>& alpha,
                    double lambda, double zero_tol) {
  if (gram.rows() != gram.cols() || gram.cols() != correlation.size() ||
      correlation.size() != alpha.size()) {
    throw DimensionError("kkt_residual: dimension mismatch");
  }
  const Eigen::VectorXd grad = gram * alpha - correlation;
  double worst = 0.0;
  for (Eigen::Index n = 0; n < alpha.size(); ++n) {
    double viol;
    if (std::abs(alpha[n]) > zero_tol) {
      viol = std::abs(grad[n] + lambda * (alpha[n] > 0.0 ? 1.0 : -1.0));
    } else {
      viol = std::max(0.0, std::abs(grad[n]) - lambda);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

double kkt_residual(const AlignedDictionary& aligned,
                    const Eigen::Ref<const Eigen::VectorXd>& alpha,
                    double lambda, double zero_tol) {
  return kkt_residual(aligned.gram, aligned.correlation, alpha, lambda,
                      zero_tol);
}

SparseCode solve(const AlignedDictionary& aligned, const SolverConfig& cfg,
                 const Eigen::VectorXd* warm_start) {
  validate_solver_config(cfg);
  const Eigen::Index n = aligned.gram.cols();
  if (n == 0 || aligned.gram.rows() != n || aligned.correlation.size() != n) {
    throw DimensionError("solve: inconsistent aligned dictionary");
  }
  if (!aligned.gram.allFinite() || !aligned.correlation.allFinite() ||
      !std::isfinite(aligned.x_sqnorm)) {
    throw NumericalError("solve: non-finite input");
  }
  if (warm_start != nullptr &&
      (warm_start->size() != n || !warm_start->allFinite())) {
    throw NumericalError("solve: invalid warm start");
  }

  const Eigen::MatrixXd& theta = aligned.gram;
  const Eigen::VectorXd& b = aligned.correlation;
  const double lambda = cfg.lambda;
  double rho = std::clamp(cfg.admm_penalty, kRhoMin, kRhoMax);

  Eigen::LLT<Eigen::MatrixXd> llt;
  const auto factorize = [&]() {
    llt.compute(theta +
                rho * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) {
      throw NumericalError("solve: Cholesky factorization failed");
    }
  };
  factorize();

  Eigen::VectorXd alpha = warm_start ? *warm_start
                                     : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = alpha;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z_old(n);

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  SolverStats stats;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    alpha = llt.solve(b + rho * (z - u));
    z_old = z;
    const double k = lambda / rho;
    for (Eigen::Index i = 0; i < n; ++i) {
      z[i] = soft_threshold(alpha[i] + u[i], k);
    }
    u += alpha - z;

    const double r_norm = (alpha - z).norm();
    const double s_norm = rho * (z - z_old).norm();
    const double eps_pri =
        sqrt_n * cfg.eps_abs + cfg.eps_rel * std::max(alpha.norm(), z.norm());
    const double eps_dual = sqrt_n * cfg.eps_abs + cfg.eps_rel * rho * u.norm();

    stats.iterations = it;
    stats.primal_residual = r_norm;
    stats.dual_residual = s_norm;

    if (r_norm <= eps_pri && s_norm <= eps_dual) {
      // The residual stop is accepted only once z is stationary enough;
      // downstream gradients differentiate the optimality conditions, so
      // solver noise must sit below kkt_tol.
      stats.kkt = kkt_residual(theta, b, z, lambda);
      if (stats.kkt <= cfg.kkt_tol) {
        stats.converged = true;
        break;
      }
    }
    if (it == cfg.max_iter) break;

    // Residual balancing keeps primal and dual progress within a factor of
    // ten of each other; u is scaled inversely because it carries 1/rho.
    if (r_norm > kBalanceRatio * s_norm && rho < kRhoMax) {
      rho = std::min(rho * 2.0, kRhoMax);
      u *= 0.5;
      factorize();
    } else if (s_norm > kBalanceRatio * r_norm && rho > kRhoMin) {
      rho = std::max(rho * 0.5, kRhoMin);
      u *= 2.0;
      factorize();
    }
  }

  SparseCode out;
  out.alpha = z;
  if (!out.alpha.allFinite()) {
    throw NumericalError("solve: iterate diverged to non-finite values");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(out.alpha[i]) > cfg.activation_tol) {
      out.active_set.push_back(static_cast<int>(i));
    }
  }
  if (!stats.converged) {
    stats.kkt = kkt_residual(theta, b, out.alpha, lambda);
  }
  stats.objective =
      0.5 * (out.alpha.dot(theta * out.alpha) - 2.0 * b.dot(out.alpha) +
             aligned.x_sqnorm) +
      lambda * out.alpha.lpNorm<1>();
  out.stats = stats;
  return out;
}

EncodeResult encode(const Dictionary& dict, const TensorImage& x,
                    int window_side, const SolverConfig& cfg,
                    const Eigen::MatrixXd* gram_hint) {
  if (gram_hint != nullptr && window_side != 1) {
    throw DimensionError("encode: gram_hint requires window side 1");
  }
  EncodeResult out;
  AlignResult aligned_flow = align(dict, x, window_side);
  out.flow = std::move(aligned_flow.flow);
  out.align_residuals = std::move(aligned_flow.residuals);
  out.aligned = assemble(dict, out.flow, x, gram_hint);
  out.code = solve(out.aligned, cfg);
  return out;
}

}  // namespace flowdict
