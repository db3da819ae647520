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

#include "flowdict/tensor.hpp"

#include <cmath>
#include <string>

namespace flowdict {

namespace {

std::string dims(const PatchGrid& g) {
  return std::to_string(g.rows) + "x" + std::to_string(g.cols) + " grid, patch " +
         std::to_string(g.patch) + ", stride " + std::to_string(g.stride);
}

void check_data_shape(const Eigen::MatrixXd& data, const PatchGrid& grid,
                      const char* what) {
  if (data.rows() != grid.vector_dim() || data.cols() != grid.positions()) {
    throw DimensionError(std::string(what) + ": data is " +
                         std::to_string(data.rows()) + "x" +
                         std::to_string(data.cols()) + " but grid expects " +
                         std::to_string(grid.vector_dim()) + "x" +
                         std::to_string(grid.positions()) + " (" + dims(grid) +
                         ")");
  }
  if (!data.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

bool compatible(const PatchGrid& a, const PatchGrid& b) {
  return a.rows == b.rows && a.cols == b.cols && a.patch == b.patch &&
         a.stride == b.stride;
}

void validate_grid(const PatchGrid& grid) {
  if (grid.rows <= 0 || grid.cols <= 0 || grid.patch <= 0 || grid.stride <= 0) {
    throw DimensionError("invalid grid: " + dims(grid));
  }
}

TensorImage::TensorImage(Eigen::MatrixXd data, PatchGrid grid)
    : data_(std::move(data)), grid_(std::move(grid)) {
  validate_grid(grid_);
  check_data_shape(data_, grid_, "TensorImage");
}

TensorAtom::TensorAtom(Eigen::MatrixXd data, PatchGrid grid)
    : data_(std::move(data)), grid_(std::move(grid)) {
  validate_grid(grid_);
  check_data_shape(data_, grid_, "TensorAtom");
  const double norm = data_.norm();
  if (std::abs(norm - 1.0) > 1e-9) {
    throw NumericalError("TensorAtom: Frobenius norm is " +
                         std::to_string(norm) + ", expected 1");
  }
}

TensorAtom TensorAtom::normalized(Eigen::MatrixXd data, PatchGrid grid) {
  validate_grid(grid);
  check_data_shape(data, grid, "TensorAtom");
  const double norm = data.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw NumericalError("TensorAtom: cannot normalize zero or non-finite data");
  }
  data /= norm;
  return TensorAtom(unchecked_t{}, std::move(data), std::move(grid));
}

Dictionary::Dictionary(std::vector<TensorAtom> atoms,
                       std::vector<int> class_hints)
    : atoms_(std::move(atoms)), class_hints_(std::move(class_hints)) {
  if (atoms_.empty()) {
    throw DimensionError("Dictionary: needs at least one atom");
  }
  const PatchGrid& g = atoms_.front().grid();
  for (const TensorAtom& atom : atoms_) {
    if (!(atom.grid() == g)) {
      throw DimensionError("Dictionary: atoms disagree on grid metadata");
    }
  }
  if (!class_hints_.empty() && class_hints_.size() != atoms_.size()) {
    throw DimensionError("Dictionary: class_hints must be empty or one per atom");
  }
}

FlowField identity_flow(int atoms, const PatchGrid& grid) {
  validate_grid(grid);
  if (atoms <= 0) {
    throw DimensionError("identity_flow: atom count must be positive");
  }
  FlowField flow;
  flow.selected.resize(atoms, grid.positions());
  for (int p = 0; p < grid.positions(); ++p) {
    flow.selected.col(p).setConstant(static_cast<std::int32_t>(p));
  }
  return flow;
}

void validate_flow(const FlowField& flow, const PatchGrid& grid,
                   int window_side) {
  if (window_side < 1 || window_side % 2 == 0) {
    throw DimensionError("validate_flow: window side must be odd and positive");
  }
  if (flow.positions() != grid.positions()) {
    throw DimensionError("validate_flow: flow has " +
                         std::to_string(flow.positions()) +
                         " positions, grid has " +
                         std::to_string(grid.positions()));
  }
  const int radius = (window_side - 1) / 2;
  for (int n = 0; n < flow.atoms(); ++n) {
    for (int p = 0; p < flow.positions(); ++p) {
      const std::int32_t q = flow.selected(n, p);
      if (q < 0 || q >= grid.positions()) {
        throw DimensionError("validate_flow: index out of grid");
      }
      const int dr = grid.row_of(q) - grid.row_of(p);
      const int dc = grid.col_of(q) - grid.col_of(p);
      if (std::abs(dr) > radius || std::abs(dc) > radius) {
        throw DimensionError("validate_flow: selection outside the window");
      }
    }
  }
}

TensorImage tensorize(const Eigen::MatrixXd& image, int patch, int stride) {
  const int height = static_cast<int>(image.rows());
  const int width = static_cast<int>(image.cols());
  if (patch <= 0 || stride <= 0) {
    throw DimensionError("tensorize: patch and stride must be positive");
  }
  if (patch > height || patch > width) {
    throw DimensionError("tensorize: patch " + std::to_string(patch) +
                         " does not fit in a " + std::to_string(height) + "x" +
                         std::to_string(width) + " image");
  }
  PatchGrid grid;
  grid.rows = (height - patch) / stride + 1;
  grid.cols = (width - patch) / stride + 1;
  grid.patch = patch;
  grid.stride = stride;
  grid.source_rows = height;
  grid.source_cols = width;

  Eigen::MatrixXd data(grid.vector_dim(), grid.positions());
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int p = grid.index(r, c);
      int m = 0;
      for (int dr = 0; dr < patch; ++dr) {
        for (int dc = 0; dc < patch; ++dc) {
          data(m++, p) = image(r * stride + dr, c * stride + dc);
        }
      }
    }
  }
  return TensorImage(std::move(data), grid);
}

Eigen::MatrixXd reconstruct_image(const Eigen::MatrixXd& data,
                                  const PatchGrid& grid) {
  validate_grid(grid);
  if (data.rows() != grid.vector_dim() || data.cols() != grid.positions()) {
    throw DimensionError("reconstruct_image: data does not match grid");
  }
  const int height = grid.source_rows;
  const int width = grid.source_cols;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(height, width);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(height, width);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int p = grid.index(r, c);
      int m = 0;
      for (int dr = 0; dr < grid.patch; ++dr) {
        for (int dc = 0; dc < grid.patch; ++dc, ++m) {
          sum(r * grid.stride + dr, c * grid.stride + dc) += data(m, p);
          count(r * grid.stride + dr, c * grid.stride + dc) += 1.0;
        }
      }
    }
  }
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      if (count(i, j) > 0.0) sum(i, j) /= count(i, j);
    }
  }
  return sum;
}

WindowView window_view(const TensorAtom& atom, int position, int window_side) {
  const PatchGrid& grid = atom.grid();
  if (position < 0 || position >= grid.positions()) {
    throw DimensionError("window_view: position " + std::to_string(position) +
                         " outside grid with " +
                         std::to_string(grid.positions()) + " positions");
  }
  if (window_side < 1 || window_side % 2 == 0) {
    throw DimensionError("window_view: window side must be odd and positive");
  }
  const int radius = (window_side - 1) / 2;
  const int row = grid.row_of(position);
  const int col = grid.col_of(position);
  const int r0 = std::max(0, row - radius);
  const int r1 = std::min(grid.rows - 1, row + radius);
  const int c0 = std::max(0, col - radius);
  const int c1 = std::min(grid.cols - 1, col + radius);

  WindowView view;
  view.center = position;
  view.window_side = window_side;
  view.absolute_indices.reserve(static_cast<std::size_t>(r1 - r0 + 1) *
                                static_cast<std::size_t>(c1 - c0 + 1));
  for (int rr = r0; rr <= r1; ++rr) {
    for (int cc = c0; cc <= c1; ++cc) {
      view.absolute_indices.push_back(
          static_cast<std::int32_t>(grid.index(rr, cc)));
    }
  }
  view.columns.resize(grid.vector_dim(), view.candidates());
  for (int j = 0; j < view.candidates(); ++j) {
    view.columns.col(j) = atom.data().col(view.absolute_indices[j]);
  }
  return view;
}

Eigen::VectorXd aligned_subatom(const TensorAtom& atom, const FlowField& flow,
                                int n, int p) {
  if (n < 0 || n >= flow.atoms() || p < 0 || p >= flow.positions()) {
    throw DimensionError("aligned_subatom: (n, p) outside the flow field");
  }
  const std::int32_t q = flow.selected(n, p);
  if (q < 0 || q >= atom.grid().positions()) {
    throw DimensionError("aligned_subatom: flow index outside the atom grid");
  }
  return atom.data().col(q);
}

double eval_l1_objective(const Dictionary& dict, const FlowField& flow,
                         const Eigen::VectorXd& alpha, const TensorImage& x,
                         double lambda) {
  if (!compatible(dict.grid(), x.grid())) {
    throw DimensionError("eval_l1_objective: dictionary/image grid mismatch");
  }
  if (alpha.size() != dict.size() || flow.atoms() != dict.size() ||
      flow.positions() != x.positions()) {
    throw DimensionError("eval_l1_objective: operand sizes disagree");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DimensionError("eval_l1_objective: lambda must be finite and >= 0");
  }
  const int positions = x.positions();
  const int atoms = dict.size();
  Eigen::VectorXd residual(x.vector_dim());
  double fit = 0.0;
  for (int p = 0; p < positions; ++p) {
    residual = x.data().col(p);
    for (int n = 0; n < atoms; ++n) {
      if (alpha[n] != 0.0) {
        residual.noalias() -= alpha[n] * dict.atom(n).data().col(flow.selected(n, p));
      }
    }
    fit += residual.squaredNorm();
  }
  return 0.5 * fit + lambda * alpha.lpNorm<1>();
}

double eval_joint_objective(const Dictionary& dict, const FlowField& flow,
                            const Eigen::VectorXd& alpha, const TensorImage& x,
                            double lambda) {
  // A feasible index assignment makes the joint objective's data-fit term
  // coincide with the l1 objective's, so the arithmetic is shared.
  return eval_l1_objective(dict, flow, alpha, x, lambda);
}

}  // namespace flowdict
