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

#include "flowdict/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include <Eigen/Eigenvalues>

#include "flowdict/errors.hpp"
#include "flowdict/parallel.hpp"

namespace flowdict {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr std::size_t kGradChunks = 8;

/// Solves theta_ll * out = rhs through an eigendecomposition, rejecting
/// matrices that are numerically singular.  Throws NumericalError when the
/// smallest eigenvalue is nonpositive or the condition number exceeds 1e12.
Eigen::VectorXd solve_active_gram(const Eigen::MatrixXd& theta_ll,
                                  const Eigen::VectorXd& rhs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(theta_ll);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("active-set gram: eigendecomposition failed");
  }
  const Eigen::VectorXd& evals = eig.eigenvalues();
  const double lmin = evals[0];
  const double lmax = evals[evals.size() - 1];
  if (!(lmin > 0.0) || lmax / lmin > kMaxCondition) {
    throw NumericalError("active-set gram is singular or ill conditioned");
  }
  return eig.eigenvectors() *
         (eig.eigenvectors().transpose() * rhs).cwiseQuotient(evals);
}

void check_fixed_point(const AlignedDictionary& aligned,
                       const SparseCode& code, double lambda,
                       double kkt_guard) {
  const double kkt = kkt_residual(aligned, code.alpha, lambda);
  if (kkt > kkt_guard) {
    throw NumericalError(
        "dictionary gradient: code violates the optimality conditions");
  }
}

Eigen::MatrixXd gather_gram(const Eigen::MatrixXd& gram,
                            const std::vector<int>& active) {
  const Eigen::Index l = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd theta_ll(l, l);
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index k = 0; k < l; ++k) {
      theta_ll(j, k) = gram(active[static_cast<std::size_t>(j)],
                            active[static_cast<std::size_t>(k)]);
    }
  }
  return theta_ll;
}

void warn_skip(int sample, const char* reason) {
  std::fprintf(stderr, "flowdict: warning: sample %d skipped (%s)\n", sample,
               reason);
}

/// Deterministic in-place shuffle independent of the standard library's
/// std::shuffle implementation.
void fisher_yates(std::vector<int>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

void validate_learn_config(const LearnConfig& cfg) {
  if (cfg.atoms < 1) throw ConfigError("learn config: atoms must be positive");
  if (!(cfg.rho0 > 0.0) || !std::isfinite(cfg.rho0)) {
    throw ConfigError("learn config: rho0 must be positive and finite");
  }
  if (cfg.batch_size < 1) {
    throw ConfigError("learn config: batch_size must be positive");
  }
  if (cfg.epochs < 0) {
    throw ConfigError("learn config: epochs must be nonnegative");
  }
  if (cfg.decay_halflife < 1) {
    throw ConfigError("learn config: decay_halflife must be positive");
  }
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
    throw ConfigError("learn config: lambda must be positive and finite");
  }
  if (cfg.mu < 0.0 || !std::isfinite(cfg.mu)) {
    throw ConfigError("learn config: mu must be nonnegative and finite");
  }
  if (cfg.window_side < 1 || cfg.window_side % 2 == 0) {
    throw ConfigError("learn config: window_side must be odd and positive");
  }
  if (cfg.patch_size < 1) {
    throw ConfigError("learn config: patch_size must be positive");
  }
  if (cfg.stride < 1) {
    throw ConfigError("learn config: stride must be positive");
  }
}

void accumulate_grad_dictionary_adjoint(
    const AlignedDictionary& aligned, const FlowField& flow,
    const TensorImage& x, const SparseCode& code,
    const Eigen::Ref<const Eigen::VectorXd>& galpha, double lambda,
    double kkt_guard, DictGradient& grad) {
  const int atoms = aligned.atoms();
  const int positions = aligned.positions();
  const int m = aligned.vector_dim();
  if (static_cast<int>(grad.size()) != atoms ||
      galpha.size() != static_cast<Eigen::Index>(atoms) ||
      flow.atoms() != atoms || flow.positions() != positions ||
      x.positions() != positions || x.vector_dim() != m) {
    throw DimensionError("dictionary gradient: shape mismatch");
  }
  if (code.active_set.empty()) return;

  // All throwing work happens before the first write into grad, so a
  // failed sample leaves the accumulator untouched.
  check_fixed_point(aligned, code, lambda, kkt_guard);

  const std::vector<int>& active = code.active_set;
  const Eigen::Index l = static_cast<Eigen::Index>(active.size());
  Eigen::VectorXd alpha_l(l), g_l(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    alpha_l[j] = code.alpha[active[static_cast<std::size_t>(j)]];
    g_l[j] = galpha[active[static_cast<std::size_t>(j)]];
  }
  const Eigen::VectorXd beta = solve_active_gram(
      gather_gram(aligned.gram, active), g_l);

  Eigen::MatrixXd cols(m, l);
  Eigen::VectorXd r_p(m), v_p(m);
  for (int p = 0; p < positions; ++p) {
    const Eigen::MatrixXd& eff = aligned.effective[static_cast<std::size_t>(p)];
    for (Eigen::Index j = 0; j < l; ++j) {
      cols.col(j) = eff.col(active[static_cast<std::size_t>(j)]);
    }
    r_p.noalias() = x.data().col(p) - cols * alpha_l;
    v_p.noalias() = cols * beta;
    for (Eigen::Index j = 0; j < l; ++j) {
      const int n = active[static_cast<std::size_t>(j)];
      grad[static_cast<std::size_t>(n)].col(flow.selected(n, p)) +=
          beta[j] * r_p - alpha_l[j] * v_p;
    }
  }
}

DictGradient grad_dictionary_adjoint(
    const Dictionary& dict, const FlowField& flow, const TensorImage& x,
    const SparseCode& code, const Eigen::Ref<const Eigen::VectorXd>& galpha,
    double lambda, double kkt_guard) {
  DictGradient grad;
  grad.reserve(static_cast<std::size_t>(dict.size()));
  for (int n = 0; n < dict.size(); ++n) {
    grad.emplace_back(Eigen::MatrixXd::Zero(dict.grid().vector_dim(),
                                            dict.grid().positions()));
  }
  const AlignedDictionary aligned = assemble(dict, flow, x);
  accumulate_grad_dictionary_adjoint(aligned, flow, x, code, galpha, lambda,
                                     kkt_guard, grad);
  return grad;
}

Eigen::VectorXd jacobian_entry(const Dictionary& dict, const FlowField& flow,
                               const TensorImage& x, const SparseCode& code,
                               int m, int n, int p, double lambda,
                               double kkt_guard) {
  const int atoms = dict.size();
  const PatchGrid& grid = dict.grid();
  if (m < 0 || m >= grid.vector_dim() || n < 0 || n >= atoms || p < 0 ||
      p >= grid.positions()) {
    throw DimensionError("jacobian_entry: index out of range");
  }
  const Eigen::Index l = static_cast<Eigen::Index>(code.active_set.size());
  if (l == 0) return Eigen::VectorXd();

  const AlignedDictionary aligned = assemble(dict, flow, x);
  check_fixed_point(aligned, code, lambda, kkt_guard);

  const std::vector<int>& active = code.active_set;
  const auto it = std::lower_bound(active.begin(), active.end(), n);
  if (it == active.end() || *it != n) return Eigen::VectorXd::Zero(l);
  const Eigen::Index j = it - active.begin();

  Eigen::VectorXd alpha_l(l);
  for (Eigen::Index k = 0; k < l; ++k) {
    alpha_l[k] = code.alpha[active[static_cast<std::size_t>(k)]];
  }

  // Only positions whose flow picked subatom p of atom n feel the entry.
  Eigen::VectorXd db = Eigen::VectorXd::Zero(l);
  Eigen::MatrixXd dtheta = Eigen::MatrixXd::Zero(l, l);
  Eigen::RowVectorXd row_m(l);
  bool selected_somewhere = false;
  for (int q = 0; q < grid.positions(); ++q) {
    if (flow.selected(n, q) != p) continue;
    selected_somewhere = true;
    const Eigen::MatrixXd& eff = aligned.effective[static_cast<std::size_t>(q)];
    for (Eigen::Index k = 0; k < l; ++k) {
      row_m[k] = eff(m, active[static_cast<std::size_t>(k)]);
    }
    db[j] += x.data()(m, q);
    dtheta.row(j) += row_m;
    dtheta.col(j) += row_m.transpose();
  }
  if (!selected_somewhere) return Eigen::VectorXd::Zero(l);

  const Eigen::VectorXd rhs = db - dtheta * alpha_l;
  return solve_active_gram(gather_gram(aligned.gram, active), rhs);
}

Dictionary project_unit_fro(const Dictionary& dict) {
  std::vector<TensorAtom> atoms;
  atoms.reserve(static_cast<std::size_t>(dict.size()));
  for (int n = 0; n < dict.size(); ++n) {
    atoms.push_back(
        TensorAtom::normalized(dict.atom(n).data(), dict.atom(n).grid()));
  }
  return Dictionary(std::move(atoms), dict.class_hints());
}

BatchStats sgd_step(TrainState& state, const RawDataset& data,
                    const std::vector<int>& batch_indices,
                    const LearnConfig& cfg) {
  validate_learn_config(cfg);
  if (batch_indices.empty()) throw DimensionError("sgd_step: empty batch");
  for (int idx : batch_indices) {
    if (idx < 0 || idx >= data.size()) {
      throw DimensionError("sgd_step: batch index out of range");
    }
  }
  const int atoms = state.dict.size();
  const int classes = state.classifier.classes();
  const int m = state.dict.grid().vector_dim();
  const int positions = state.dict.grid().positions();
  const SolverConfig solver_cfg = cfg.solver();

  // Identity flow makes the gram sample independent; hoist it per batch.
  Eigen::MatrixXd hint;
  const Eigen::MatrixXd* hint_ptr = nullptr;
  if (cfg.window_side == 1) {
    hint = unaligned_gram(state.dict);
    hint_ptr = &hint;
  }

  // Fixed-count chunk accumulators combined in chunk order keep the update
  // bit-identical for every thread count.
  std::vector<DictGradient> chunk_gdict(kGradChunks);
  std::vector<Eigen::MatrixXd> chunk_gw(
      kGradChunks, Eigen::MatrixXd::Zero(classes, atoms + 1));
  std::vector<double> chunk_loss(kGradChunks, 0.0);
  std::vector<double> chunk_active(kGradChunks, 0.0);
  std::vector<int> chunk_used(kGradChunks, 0);
  std::vector<int> chunk_errors(kGradChunks, 0);
  std::vector<int> chunk_skipped(kGradChunks, 0);
  for (auto& g : chunk_gdict) {
    g.assign(static_cast<std::size_t>(atoms),
             Eigen::MatrixXd::Zero(m, positions));
  }

  parallel_chunks(
      batch_indices.size(), kGradChunks,
      [&](std::size_t ci, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const int idx = batch_indices[i];
          const TensorImage x =
              tensorize(data.images[static_cast<std::size_t>(idx)],
                        cfg.patch_size, cfg.stride);
          const Label y =
              make_label(data.labels[static_cast<std::size_t>(idx)], classes);
          const EncodeResult enc =
              encode(state.dict, x, cfg.window_side, solver_cfg, hint_ptr);
          if (!enc.code.stats.converged) {
            ++chunk_skipped[ci];
            warn_skip(idx, "solver did not converge");
            continue;
          }
          const Eigen::VectorXd galpha =
              svm_loss_grad_alpha(state.classifier, enc.code.alpha, y);
          try {
            accumulate_grad_dictionary_adjoint(enc.aligned, enc.flow, x,
                                               enc.code, galpha, cfg.lambda,
                                               1e-4, chunk_gdict[ci]);
          } catch (const NumericalError&) {
            ++chunk_skipped[ci];
            warn_skip(idx, "ill-conditioned active-set gram");
            continue;
          }
          chunk_gw[ci] +=
              svm_loss_grad_weights(state.classifier, enc.code.alpha, y);
          chunk_loss[ci] += svm_loss(state.classifier, enc.code.alpha, y);
          chunk_active[ci] +=
              static_cast<double>(enc.code.active_set.size());
          if (predict(state.classifier, enc.code.alpha) != y.class_index) {
            ++chunk_errors[ci];
          }
          ++chunk_used[ci];
        }
      });

  BatchStats stats;
  Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(classes, atoms + 1);
  DictGradient gdict(static_cast<std::size_t>(atoms),
                     Eigen::MatrixXd::Zero(m, positions));
  double loss_sum = 0.0;
  double active_sum = 0.0;
  for (std::size_t ci = 0; ci < kGradChunks; ++ci) {
    gw += chunk_gw[ci];
    for (std::size_t n = 0; n < gdict.size(); ++n) {
      gdict[n] += chunk_gdict[ci][n];
    }
    loss_sum += chunk_loss[ci];
    active_sum += chunk_active[ci];
    stats.used += chunk_used[ci];
    stats.errors += chunk_errors[ci];
    stats.skipped += chunk_skipped[ci];
  }

  const double rho_t =
      cfg.rho0 /
      (1.0 + static_cast<double>(state.t) /
                 static_cast<double>(cfg.decay_halflife));
  if (stats.used > 0) {
    const double scale = rho_t / static_cast<double>(stats.used);
    state.classifier.weights -= scale * gw;
    std::vector<TensorAtom> updated;
    updated.reserve(static_cast<std::size_t>(atoms));
    for (int n = 0; n < atoms; ++n) {
      updated.push_back(TensorAtom::normalized(
          state.dict.atom(n).data() - scale * gdict[static_cast<std::size_t>(n)],
          state.dict.grid()));
    }
    state.dict = Dictionary(std::move(updated), state.dict.class_hints());
    stats.mean_loss = loss_sum / static_cast<double>(stats.used);
    stats.mean_active = active_sum / static_cast<double>(stats.used);
  }
  state.t += 1;
  state.last_mean_loss = stats.mean_loss;
  state.last_mean_active = stats.mean_active;
  state.last_errors = stats.errors;
  state.last_used = stats.used;
  state.last_skipped = stats.skipped;
  return stats;
}

Dictionary init_dictionary(const RawDataset& data, int atoms, int patch,
                           int stride, std::uint64_t seed) {
  validate_dataset(data);
  if (atoms < 1) throw DimensionError("init_dictionary: atoms must be >= 1");
  if (data.size() < atoms) {
    throw DimensionError("init_dictionary: not enough samples");
  }
  const int classes = data.num_classes();

  std::vector<std::vector<int>> pools(static_cast<std::size_t>(classes));
  for (int i = 0; i < data.size(); ++i) {
    pools[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& pool : pools) fisher_yates(pool, rng);

  // Round-robin over classes so atoms = classes yields one per class.
  std::vector<int> picked;
  std::vector<std::size_t> cursor(static_cast<std::size_t>(classes), 0);
  int c = 0;
  while (static_cast<int>(picked.size()) < atoms) {
    const auto ci = static_cast<std::size_t>(c);
    if (cursor[ci] < pools[ci].size()) {
      picked.push_back(pools[ci][cursor[ci]]);
      ++cursor[ci];
    }
    c = (c + 1) % classes;
  }

  std::vector<TensorAtom> init_atoms;
  std::vector<int> hints;
  init_atoms.reserve(picked.size());
  hints.reserve(picked.size());
  for (int idx : picked) {
    const TensorImage t = tensorize(
        data.images[static_cast<std::size_t>(idx)], patch, stride);
    init_atoms.push_back(TensorAtom::normalized(t.data(), t.grid()));
    hints.push_back(data.labels[static_cast<std::size_t>(idx)]);
  }
  return Dictionary(std::move(init_atoms), std::move(hints));
}

ClassifierParams refit_classifier(const std::vector<Eigen::VectorXd>& codes,
                                  const std::vector<Label>& labels,
                                  int num_classes, double mu) {
  if (codes.empty() || codes.size() != labels.size()) {
    throw DimensionError("refit_classifier: empty or mismatched inputs");
  }
  const Eigen::Index n = codes.front().size();
  ClassifierParams params;
  params.weights = Eigen::MatrixXd::Zero(num_classes, n + 1);
  params.mu = mu;
  const double inv = 1.0 / static_cast<double>(codes.size());

  const auto objective = [&](const ClassifierParams& p) {
    double f = 0.0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
      f += svm_loss(p, codes[i], labels[i]);
    }
    f *= inv;
    f += 0.5 * mu * p.weights.leftCols(n).squaredNorm();
    return f;
  };
  const auto gradient = [&](const ClassifierParams& p) {
    // Per-sample grads each carry mu*W; averaging n of them keeps it once.
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(num_classes, n + 1);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      g += svm_loss_grad_weights(p, codes[i], labels[i]);
    }
    return (g * inv).eval();
  };

  double f = objective(params);
  double step = 1.0;
  for (int it = 0; it < 500; ++it) {
    const Eigen::MatrixXd g = gradient(params);
    const double gnorm2 = g.squaredNorm();
    if (g.lpNorm<Eigen::Infinity>() < 1e-7) break;
    ClassifierParams trial = params;
    double s = step;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      trial.weights = params.weights - s * g;
      const double ft = objective(trial);
      if (ft <= f - 1e-4 * s * gnorm2) {
        params = trial;
        f = ft;
        step = s * 2.0;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
  }
  return params;
}

TrainResult train(const RawDataset& data, const LearnConfig& cfg,
                  std::string config_snapshot, const StepObserver& observer) {
  validate_learn_config(cfg);
  validate_dataset(data);
  if (data.size() == 0) throw DimensionError("train: empty dataset");
  const int classes = data.num_classes();
  if (classes < 2) throw DimensionError("train: need at least 2 classes");

  TrainState state{
      init_dictionary(data, cfg.atoms, cfg.patch_size, cfg.stride, cfg.seed),
      ClassifierParams{
          Eigen::MatrixXd::Zero(classes, cfg.atoms + 1), cfg.mu},
      0,
      std::mt19937_64(cfg.seed + 1)};

  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{
      Model{state.dict, state.classifier, cfg.window_side, config_snapshot},
      {}};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    fisher_yates(order, state.rng);

    double loss_sum = 0.0;
    double active_sum = 0.0;
    long errors = 0;
    long used = 0;
    for (std::size_t off = 0; off < order.size();
         off += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), off + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<int> batch(order.begin() + off, order.begin() + stop);
      const BatchStats stats = sgd_step(state, data, batch, cfg);
      if (observer) observer(state, state.t - 1);
      loss_sum += stats.mean_loss * stats.used;
      active_sum += stats.mean_active * stats.used;
      errors += stats.errors;
      used += stats.used;
    }

    EpochMetrics row;
    row.epoch = epoch;
    if (used > 0) {
      row.mean_loss = loss_sum / static_cast<double>(used);
      row.train_error = static_cast<double>(errors) /
                        static_cast<double>(used);
      row.mean_active_set = active_sum / static_cast<double>(used);
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.epochs.push_back(row);
  }

  if (cfg.refit_svm) {
    // Freeze the dictionary, re-encode everything, retrain W from scratch.
    const SolverConfig solver_cfg = cfg.solver();
    Eigen::MatrixXd hint;
    const Eigen::MatrixXd* hint_ptr = nullptr;
    if (cfg.window_side == 1) {
      hint = unaligned_gram(state.dict);
      hint_ptr = &hint;
    }
    std::vector<Eigen::VectorXd> codes(order.size());
    std::vector<char> keep(order.size(), 0);
    parallel_chunks(
        order.size(), kGradChunks,
        [&](std::size_t, std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) {
            const TensorImage x = tensorize(data.images[i], cfg.patch_size,
                                            cfg.stride);
            const EncodeResult enc =
                encode(state.dict, x, cfg.window_side, solver_cfg, hint_ptr);
            if (enc.code.stats.converged) {
              codes[i] = enc.code.alpha;
              keep[i] = 1;
            }
          }
        });
    std::vector<Eigen::VectorXd> kept_codes;
    std::vector<Label> kept_labels;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (!keep[i]) continue;
      kept_codes.push_back(std::move(codes[i]));
      kept_labels.push_back(
          make_label(data.labels[i], classes));
    }
    if (!kept_codes.empty()) {
      state.classifier =
          refit_classifier(kept_codes, kept_labels, classes, cfg.mu);
    }
  }

  result.model.dict = state.dict;
  result.model.classifier = state.classifier;
  return result;
}

}  // namespace flowdict
