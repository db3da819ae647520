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

#include "flowdict/alignment.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "flowdict/errors.hpp"
#include "flowdict/parallel.hpp"

namespace flowdict {

namespace {

// Squared Euclidean distance with a fixed four-way accumulation pattern.
// Every candidate scan in this module funnels through this one function, so
// scores (and therefore ties) are bit-identical no matter which entry point
// computed them.
double squared_distance(const double* a, const double* b, int m) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2];
    const double d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < m; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return ((s0 + s1) + (s2 + s3));
}

}  // namespace

BestMatch best_match(const WindowView& window,
                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int count = window.candidates();
  if (count <= 0) throw DimensionError("best_match: empty window");
  if (window.columns.rows() != x.size()) {
    throw DimensionError("best_match: patch dimension mismatch");
  }
  const int m = static_cast<int>(x.size());
  // Candidates are stored in ascending absolute index order and a candidate
  // wins only on a strictly smaller score, so ties resolve to the smallest
  // absolute position index.
  int best = 0;
  double best_sq = squared_distance(window.columns.col(0).data(), x.data(), m);
  for (int j = 1; j < count; ++j) {
    const double sq =
        squared_distance(window.columns.col(j).data(), x.data(), m);
    if (sq < best_sq) {
      best_sq = sq;
      best = j;
    }
  }
  return BestMatch{window.absolute_indices[static_cast<std::size_t>(best)],
                   std::sqrt(best_sq)};
}

AlignResult align(const Dictionary& dict, const TensorImage& x,
                  int window_side) {
  if (dict.size() == 0) throw DimensionError("align: empty dictionary");
  if (!compatible(dict.grid(), x.grid())) {
    throw DimensionError("align: dictionary and image grids differ");
  }
  if (window_side < 1 || window_side % 2 == 0) {
    throw DimensionError("align: window side must be an odd positive integer");
  }

  const PatchGrid& grid = x.grid();
  const int positions = grid.positions();
  const int m = grid.vector_dim();
  const int atoms = static_cast<int>(dict.size());
  const int radius = (window_side - 1) / 2;

  AlignResult out;
  out.flow.selected.resize(atoms, positions);
  out.residuals.resize(atoms, positions);

  // Each chunk owns a disjoint band of atoms, i.e. disjoint rows of the two
  // output matrices, so the per-row writes below never race.
  parallel_chunks(
      static_cast<std::size_t>(atoms), thread_budget(atoms),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
          const Eigen::MatrixXd& atom = dict.atom(static_cast<int>(n)).data();
          for (int p = 0; p < positions; ++p) {
            const double* xp = x.data().col(p).data();
            const int pr = grid.row_of(p);
            const int pc = grid.col_of(p);
            // Window clipped at the grid boundary; no padding.
            const int r0 = std::max(0, pr - radius);
            const int r1 = std::min(grid.rows - 1, pr + radius);
            const int c0 = std::max(0, pc - radius);
            const int c1 = std::min(grid.cols - 1, pc + radius);
            int best = -1;
            double best_sq = std::numeric_limits<double>::infinity();
            // Ascending absolute index scan; strict improvement only, so
            // equal scores keep the earlier (smaller) index.
            for (int r = r0; r <= r1; ++r) {
              for (int c = c0; c <= c1; ++c) {
                const int q = grid.index(r, c);
                const double sq =
                    squared_distance(atom.col(q).data(), xp, m);
                if (sq < best_sq) {
                  best_sq = sq;
                  best = q;
                }
              }
            }
            out.flow.selected(static_cast<Eigen::Index>(n), p) = best;
            out.residuals(static_cast<Eigen::Index>(n), p) =
                std::sqrt(best_sq);
          }
        }
      });
  return out;
}

}  // namespace flowdict
