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

#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace flowdict::oracles {

namespace {

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                         double lambda, double tol, int max_sweeps) {
  const int n = static_cast<int>(A.cols());
  const Eigen::MatrixXd gram = A.transpose() * A;
  const Eigen::VectorXd corr = A.transpose() * y;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < n; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) continue;
      // Partial residual correlation with coordinate j's own term restored.
      const double rj = corr(j) - gram.col(j).dot(a) + gjj * a(j);
      const double next = soft(rj, lambda) / gjj;
      max_delta = std::max(max_delta, std::abs(next - a(j)));
      a(j) = next;
    }
    if (max_delta < tol) break;
  }
  return a;
}

double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& a, double lambda) {
  return 0.5 * (A * a - y).squaredNorm() + lambda * a.lpNorm<1>();
}

Eigen::MatrixXd stack_columns(const std::vector<Eigen::MatrixXd>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("stack_columns: empty");
  const Eigen::Index m = blocks[0].rows();
  const Eigen::Index n = blocks[0].cols();
  Eigen::MatrixXd stacked(m * static_cast<Eigen::Index>(blocks.size()), n);
  for (std::size_t p = 0; p < blocks.size(); ++p) {
    stacked.middleRows(static_cast<Eigen::Index>(p) * m, m) = blocks[p];
  }
  return stacked;
}

Eigen::VectorXd stack_pixels(const Eigen::MatrixXd& data) {
  Eigen::VectorXd y(data.size());
  for (Eigen::Index p = 0; p < data.cols(); ++p) {
    y.segment(p * data.rows(), data.rows()) = data.col(p);
  }
  return y;
}

OracleMatch exhaustive_best_match(const Eigen::MatrixXd& atom_data,
                                  const PatchGrid& grid, int position,
                                  int window_side, const Eigen::VectorXd& x) {
  const int radius = (window_side - 1) / 2;
  const int pr = position / grid.cols;
  const int pc = position % grid.cols;
  OracleMatch best;
  bool first = true;
  for (int r = std::max(0, pr - radius);
       r <= std::min(grid.rows - 1, pr + radius); ++r) {
    for (int c = std::max(0, pc - radius);
         c <= std::min(grid.cols - 1, pc + radius); ++c) {
      const int q = r * grid.cols + c;
      const double d2 = (atom_data.col(q) - x).squaredNorm();
      if (first || d2 < best.dist2) {
        best.index = q;
        best.dist2 = d2;
        first = false;
      }
    }
  }
  if (first) throw std::logic_error("exhaustive_best_match: empty window");
  return best;
}

double central_difference(const std::function<double(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

NaiveAssembly naive_assemble(const Dictionary& dict, const FlowField& flow,
                             const TensorImage& x) {
  const int n = dict.size();
  const int positions = x.positions();
  const int m = x.vector_dim();
  NaiveAssembly out;
  out.effective.resize(positions);
  out.gram = Eigen::MatrixXd::Zero(n, n);
  out.correlation = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < positions; ++p) {
    Eigen::MatrixXd slice(m, n);
    for (int j = 0; j < n; ++j) {
      slice.col(j) = dict.atom(j).data().col(flow.selected(j, p));
    }
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        double dot = 0.0;
        for (int k = 0; k < m; ++k) dot += slice(k, a) * slice(k, b);
        out.gram(a, b) += dot;
      }
      double cdot = 0.0;
      for (int k = 0; k < m; ++k) cdot += slice(k, a) * x.data()(k, p);
      out.correlation(a) += cdot;
    }
    for (int k = 0; k < m; ++k) {
      out.x_sqnorm += x.data()(k, p) * x.data()(k, p);
    }
    out.effective[p] = std::move(slice);
  }
  return out;
}

}  // namespace flowdict::oracles
