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

#ifndef FLOWDICT_ALIGNMENT_HPP
#define FLOWDICT_ALIGNMENT_HPP

#include <Eigen/Core>
#include <cstdint>

#include "flowdict/tensor.hpp"

// Large-displacement registration of dictionary atoms against an input
// tensor image: for every atom and every grid position, pick the candidate
// subatom inside the searching window that is closest to the input's vector
// pixel.  One Theta(T * M) pass per cell, no sparse solve involved.

namespace flowdict {

struct BestMatch {
  std::int32_t index = 0;  ///< absolute grid index of the winning candidate
  double residual = 0.0;   ///< Euclidean distance attained at that candidate
};

/// Exhaustive scan over the window's candidates.  Ties (equal distances) go
/// to the smallest absolute index; candidates are scanned ascending, and a
/// candidate wins only by a strictly smaller squared distance.
BestMatch best_match(const WindowView& window,
                     const Eigen::Ref<const Eigen::VectorXd>& x);

struct AlignResult {
  FlowField flow;
  /// residuals(n, p): Euclidean distance of the selected subatom of atom n
  /// to vector pixel p.  Diagnostic; also drives the robustness tests.
  Eigen::MatrixXd residuals;
};

/// Registers every atom with the image: selected(n, p) is the best match of
/// window_view(atom n, p, window_side) against x_p.  Cells are independent,
/// so the scan parallelizes over atoms; results do not depend on the
/// partition.
AlignResult align(const Dictionary& dict, const TensorImage& x,
                  int window_side);

}  // namespace flowdict

#endif  // FLOWDICT_ALIGNMENT_HPP
