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

#ifndef FLOWDICT_TENSOR_HPP
#define FLOWDICT_TENSOR_HPP

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "flowdict/errors.hpp"

// Tensor representation of images and dictionary atoms.
//
// An image is re-represented as a grid of "vector pixels": grid position
// (r, c) holds the vectorized s-by-s patch whose top-left pixel sits at
// (r*stride, c*stride) in the source image.  Dictionary atoms use the same
// layout, so an atom stores one candidate patch ("subatom") per grid
// position and can be re-registered against an input by swapping, at every
// position, its own subatom for a nearby one.
//
// Grid positions are linearized row-major: p = r * grid_cols + c.  Patch
// pixels are vectorized row-major as well: entry d_r * s + d_c of a column
// is patch pixel (d_r, d_c).

namespace flowdict {

/// Grid metadata shared by tensor images and tensor atoms.
struct PatchGrid {
  int rows = 0;         ///< grid rows
  int cols = 0;         ///< grid columns
  int patch = 0;        ///< patch side s; vector pixels have s*s entries
  int stride = 1;       ///< source-pixel step between adjacent grid positions
  int source_rows = 0;  ///< original image height
  int source_cols = 0;  ///< original image width

  int positions() const { return rows * cols; }
  int vector_dim() const { return patch * patch; }
  int index(int row, int col) const { return row * cols + col; }
  int row_of(int p) const { return p / cols; }
  int col_of(int p) const { return p % cols; }
  bool contains(int row, int col) const {
    return row >= 0 && row < rows && col >= 0 && col < cols;
  }

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

/// True when two grids describe the same patch layout.  The source extent is
/// ignored: a grid reconstructed from a model file covers the minimal source
/// image and must still match freshly tensorized inputs.
bool compatible(const PatchGrid& a, const PatchGrid& b);

void validate_grid(const PatchGrid& grid);

/// An image as an M x P array of vector pixels.  Immutable after
/// construction; every entry is finite.
class TensorImage {
 public:
  TensorImage(Eigen::MatrixXd data, PatchGrid grid);

  const Eigen::MatrixXd& data() const { return data_; }
  const PatchGrid& grid() const { return grid_; }
  int vector_dim() const { return grid_.vector_dim(); }
  int positions() const { return grid_.positions(); }

 private:
  Eigen::MatrixXd data_;
  PatchGrid grid_;
};

/// A dictionary atom in the same M x P layout, with unit Frobenius norm.
class TensorAtom {
 public:
  /// Requires data already normalized (|1 - frobenius| <= 1e-9).
  TensorAtom(Eigen::MatrixXd data, PatchGrid grid);

  /// Scales arbitrary finite data to unit Frobenius norm.  Throws
  /// NumericalError when the data has zero or non-finite norm.
  static TensorAtom normalized(Eigen::MatrixXd data, PatchGrid grid);

  const Eigen::MatrixXd& data() const { return data_; }
  const PatchGrid& grid() const { return grid_; }

 private:
  struct unchecked_t {};
  TensorAtom(unchecked_t, Eigen::MatrixXd data, PatchGrid grid)
      : data_(std::move(data)), grid_(std::move(grid)) {}

  Eigen::MatrixXd data_;
  PatchGrid grid_;
};

/// An ordered collection of tensor atoms sharing one grid layout.
class Dictionary {
 public:
  /// class_hints may be empty (no hints) or one label per atom; hints are
  /// bookkeeping from initialization and never enter the math.
  explicit Dictionary(std::vector<TensorAtom> atoms,
                      std::vector<int> class_hints = {});

  int size() const { return static_cast<int>(atoms_.size()); }
  const TensorAtom& atom(int n) const { return atoms_.at(n); }
  const std::vector<TensorAtom>& atoms() const { return atoms_; }
  const PatchGrid& grid() const { return atoms_.front().grid(); }
  const std::vector<int>& class_hints() const { return class_hints_; }

 private:
  std::vector<TensorAtom> atoms_;
  std::vector<int> class_hints_;
};

/// Per-(atom, position) selected subatom, in absolute grid indices.
/// selected(n, p) is the grid index of the subatom of atom n that stands in
/// for position p after registration.
struct FlowField {
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> selected;

  int atoms() const { return static_cast<int>(selected.rows()); }
  int positions() const { return static_cast<int>(selected.cols()); }

  friend bool operator==(const FlowField& a, const FlowField& b) {
    return a.selected.rows() == b.selected.rows() &&
           a.selected.cols() == b.selected.cols() &&
           (a.selected.array() == b.selected.array()).all();
  }
};

/// The flow that keeps every subatom in place (the w = 1 case).
FlowField identity_flow(int atoms, const PatchGrid& grid);

/// Checks that every selected index lies inside the window of side
/// `window_side` centered at its position, clipped to the grid.
void validate_flow(const FlowField& flow, const PatchGrid& grid,
                   int window_side);

/// The candidate subatoms of one atom around one grid position: the window
/// of Chebyshev radius (w-1)/2 centered at p, clipped to the grid.
/// absolute_indices are ascending and column j of `columns` is the subatom
/// at absolute_indices[j].
struct WindowView {
  Eigen::MatrixXd columns;
  std::vector<std::int32_t> absolute_indices;
  int center = 0;
  int window_side = 1;

  int candidates() const { return static_cast<int>(absolute_indices.size()); }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Slides an s-by-s window with step `stride` over `image` (patches fully
/// inside, no padding) and stacks the row-major vectorized patches as
/// columns.  Throws DimensionError when the patch does not fit.
TensorImage tensorize(const Eigen::MatrixXd& image, int patch, int stride = 1);

/// Inverse-ish of tensorize: paints every column back onto a source-sized
/// canvas and averages overlapping contributions.  Pixels covered by no
/// patch (possible with stride > 1) stay zero.
Eigen::MatrixXd reconstruct_image(const Eigen::MatrixXd& data,
                                  const PatchGrid& grid);

WindowView window_view(const TensorAtom& atom, int position, int window_side);

/// The subatom of atom `n` standing in for position `p` under `flow` —
/// the window-matrix/indicator product collapsed to a column read.
Eigen::VectorXd aligned_subatom(const TensorAtom& atom, const FlowField& flow,
                                int n, int p);

/// Value of the l1-penalized reconstruction objective at (alpha, flow):
///   1/2 sum_p | sum_n alpha_n * atom_n[flow(n,p)] - x_p |^2 + lambda*|alpha|_1
/// Pure: identical inputs give bit-identical results.
double eval_l1_objective(const Dictionary& dict, const FlowField& flow,
                         const Eigen::VectorXd& alpha, const TensorImage& x,
                         double lambda);

/// Scores an arbitrary feasible (alpha, flow) pair against the joint
/// selection-plus-code objective.  Given a feasible index assignment the
/// data-fit term coincides with the l1 objective, so the arithmetic is
/// shared.
double eval_joint_objective(const Dictionary& dict, const FlowField& flow,
                            const Eigen::VectorXd& alpha, const TensorImage& x,
                            double lambda);

}  // namespace flowdict

#endif  // FLOWDICT_TENSOR_HPP
