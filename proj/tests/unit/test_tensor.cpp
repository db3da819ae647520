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

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "flowdict/errors.hpp"
#include "flowdict/tensor.hpp"
#include "testutil.hpp"

using namespace flowdict;
using testutil::Uniform;
using testutil::make_grid;

TEST_SUITE("tensor") {

TEST_CASE("grid arithmetic is row-major") {
  PatchGrid g = make_grid(10, 12, 3, 1);
  CHECK(g.rows == 8);
  CHECK(g.cols == 10);
  CHECK(g.positions() == 80);
  CHECK(g.vector_dim() == 9);
  CHECK(g.index(2, 3) == 23);
  CHECK(g.row_of(23) == 2);
  CHECK(g.col_of(23) == 3);
  CHECK(g.contains(0, 0));
  CHECK(g.contains(7, 9));
  CHECK_FALSE(g.contains(8, 0));
  CHECK_FALSE(g.contains(0, -1));
}

TEST_CASE("compatible ignores the source extent") {
  PatchGrid a = make_grid(10, 10, 3, 1);
  PatchGrid b = a;
  b.source_rows = 999;
  b.source_cols = 777;
  CHECK(compatible(a, b));
  PatchGrid c = a;
  c.patch = 4;
  CHECK_FALSE(compatible(a, c));
  PatchGrid d = a;
  d.cols = a.cols + 1;
  CHECK_FALSE(compatible(a, d));
}

TEST_CASE("validate_grid rejects degenerate layouts") {
  CHECK_THROWS_AS(validate_grid(PatchGrid{}), DimensionError);
  PatchGrid bad = make_grid(10, 10, 3, 1);
  bad.stride = 0;
  CHECK_THROWS_AS(validate_grid(bad), DimensionError);
  PatchGrid ok = make_grid(10, 10, 3, 1);
  CHECK_NOTHROW(validate_grid(ok));
}

TEST_CASE("tensorize vectorizes row-major patches at stride offsets") {
  // 4x4 ramp image, patch 2, stride 2 -> 2x2 grid of disjoint patches.
  Eigen::MatrixXd img(4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) img(r, c) = r * 4 + c;
  }
  TensorImage tx = tensorize(img, 2, 2);
  CHECK(tx.grid().rows == 2);
  CHECK(tx.grid().cols == 2);
  CHECK(tx.vector_dim() == 4);
  CHECK(tx.positions() == 4);
  // Position (0,0): patch rows {0,1} cols {0,1}, row-major vectorized.
  Eigen::VectorXd p00(4);
  p00 << 0, 1, 4, 5;
  CHECK(tx.data().col(0) == p00);
  // Position (1,1) (grid index 3): top-left source pixel (2,2).
  Eigen::VectorXd p11(4);
  p11 << 10, 11, 14, 15;
  CHECK(tx.data().col(3) == p11);
  CHECK(tx.grid().source_rows == 4);
  CHECK(tx.grid().source_cols == 4);
}

TEST_CASE("tensorize with stride 1 gives overlapping patches") {
  Eigen::MatrixXd img(3, 3);
  img << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  TensorImage tx = tensorize(img, 2, 1);
  CHECK(tx.grid().rows == 2);
  CHECK(tx.grid().cols == 2);
  Eigen::VectorXd p01(4);
  p01 << 2, 3, 5, 6;
  CHECK(tx.data().col(1) == p01);
}

TEST_CASE("tensorize rejects patches that do not fit") {
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(4, 4);
  CHECK_THROWS_AS(tensorize(img, 5, 1), DimensionError);
  CHECK_THROWS_AS(tensorize(img, 0, 1), DimensionError);
  CHECK_THROWS_AS(tensorize(img, 2, 0), DimensionError);
}

TEST_CASE("tensorize rejects non-finite pixels") {
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(4, 4);
  img(1, 1) = std::nan("");
  CHECK_THROWS_AS(tensorize(img, 2, 1), NumericalError);
}

TEST_CASE("reconstruct_image averages overlapping patches") {
  Uniform u(11);
  Eigen::MatrixXd img = testutil::random_matrix(6, 7, u, 0.0, 1.0);
  TensorImage tx = tensorize(img, 3, 1);
  // Full-stride-1 coverage reproduces the source up to rounding.
  Eigen::MatrixXd back = reconstruct_image(tx.data(), tx.grid());
  CHECK(back.rows() == 6);
  CHECK(back.cols() == 7);
  CHECK((back - img).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reconstruct_image leaves uncovered pixels zero") {
  // 5x5 image, patch 2, stride 3: only patches at source offset 0 and 3.
  Eigen::MatrixXd img = Eigen::MatrixXd::Ones(5, 5);
  TensorImage tx = tensorize(img, 2, 3);
  Eigen::MatrixXd back = reconstruct_image(tx.data(), tx.grid());
  // Source column 2 is covered by no patch (offsets 0,1 and 3,4).
  CHECK(back(0, 2) == 0.0);
  CHECK(back(2, 0) == 0.0);
  CHECK(back(0, 0) == 1.0);
  CHECK(back(4, 4) == 1.0);
}

TEST_CASE("atom constructor enforces unit Frobenius norm") {
  PatchGrid g = make_grid(4, 4, 2, 1);
  Uniform u(5);
  Eigen::MatrixXd data = testutil::random_matrix(4, 9, u);
  CHECK_THROWS_AS(TensorAtom(data, g), NumericalError);
  Eigen::MatrixXd unit = data / data.norm();
  CHECK_NOTHROW(TensorAtom(unit, g));
  // Slightly off-norm within the 1e-9 tolerance is accepted...
  CHECK_NOTHROW(TensorAtom(unit * (1.0 + 5e-10), g));
  // ... and beyond it rejected.
  CHECK_THROWS_AS(TensorAtom(unit * (1.0 + 1e-7), g), NumericalError);
}

TEST_CASE("normalized scales arbitrary data and rejects zero") {
  PatchGrid g = make_grid(4, 4, 2, 1);
  Uniform u(6);
  Eigen::MatrixXd data = testutil::random_matrix(4, 9, u);
  TensorAtom atom = TensorAtom::normalized(data * 42.0, g);
  CHECK(std::abs(atom.data().norm() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(TensorAtom::normalized(Eigen::MatrixXd::Zero(4, 9), g),
                  NumericalError);
}

TEST_CASE("dictionary indexing and hints") {
  PatchGrid g = make_grid(4, 4, 2, 1);
  Uniform u(7);
  std::vector<TensorAtom> atoms;
  for (int i = 0; i < 3; ++i) atoms.push_back(testutil::random_atom(g, u));
  Eigen::MatrixXd first = atoms[0].data();
  Dictionary dict(atoms, {2, 0, 1});
  CHECK(dict.size() == 3);
  CHECK(dict.atom(0).data() == first);
  CHECK(dict.class_hints() == std::vector<int>{2, 0, 1});
  CHECK(compatible(dict.grid(), g));
}

TEST_CASE("dictionary rejects mismatched grids and bad hints") {
  Uniform u(8);
  PatchGrid g1 = make_grid(4, 4, 2, 1);
  PatchGrid g2 = make_grid(5, 5, 2, 1);
  std::vector<TensorAtom> atoms{testutil::random_atom(g1, u),
                                testutil::random_atom(g2, u)};
  CHECK_THROWS_AS(Dictionary(atoms), DimensionError);
  std::vector<TensorAtom> ok{testutil::random_atom(g1, u),
                             testutil::random_atom(g1, u)};
  CHECK_THROWS_AS(Dictionary(ok, {1}), DimensionError);
  CHECK_THROWS_AS(Dictionary(std::vector<TensorAtom>{}), DimensionError);
}

TEST_CASE("window_view clips at boundaries and orders candidates") {
  PatchGrid g = make_grid(7, 8, 2, 1);  // 6x7 grid
  Uniform u(9);
  TensorAtom atom = testutil::random_atom(g, u);

  SUBCASE("interior window is full") {
    const int p = g.index(3, 3);
    WindowView w = window_view(atom, p, 5);
    CHECK(w.candidates() == 25);
    CHECK(w.center == p);
    CHECK(w.window_side == 5);
    // Ascending absolute indices covering rows 1..5 x cols 1..5.
    std::set<int> expect;
    for (int r = 1; r <= 5; ++r) {
      for (int c = 1; c <= 5; ++c) expect.insert(g.index(r, c));
    }
    std::set<int> got(w.absolute_indices.begin(), w.absolute_indices.end());
    CHECK(got == expect);
    CHECK(std::is_sorted(w.absolute_indices.begin(),
                         w.absolute_indices.end()));
    // Column j is exactly the subatom at absolute_indices[j].
    for (int j = 0; j < w.candidates(); ++j) {
      CHECK(w.columns.col(j) == atom.data().col(w.absolute_indices[j]));
    }
  }

  SUBCASE("corner window is clipped") {
    WindowView w = window_view(atom, g.index(0, 0), 5);
    CHECK(w.candidates() == 9);  // rows 0..2 x cols 0..2
    CHECK(w.absolute_indices.front() == g.index(0, 0));
    CHECK(w.absolute_indices.back() == g.index(2, 2));
  }

  SUBCASE("window side 1 is the identity candidate") {
    const int p = g.index(2, 5);
    WindowView w = window_view(atom, p, 1);
    CHECK(w.candidates() == 1);
    CHECK(w.absolute_indices[0] == p);
    CHECK(w.columns.col(0) == atom.data().col(p));
  }

  SUBCASE("even or nonpositive window side throws") {
    CHECK_THROWS_AS(window_view(atom, 0, 2), DimensionError);
    CHECK_THROWS_AS(window_view(atom, 0, 0), DimensionError);
    CHECK_THROWS_AS(window_view(atom, -1, 3), DimensionError);
    CHECK_THROWS_AS(window_view(atom, g.positions(), 3), DimensionError);
  }
}

TEST_CASE("identity_flow selects every position's own subatom") {
  PatchGrid g = make_grid(6, 6, 2, 1);
  FlowField flow = identity_flow(3, g);
  CHECK(flow.atoms() == 3);
  CHECK(flow.positions() == g.positions());
  for (int n = 0; n < 3; ++n) {
    for (int p = 0; p < g.positions(); ++p) {
      CHECK(flow.selected(n, p) == p);
    }
  }
  CHECK_NOTHROW(validate_flow(flow, g, 1));
}

TEST_CASE("validate_flow rejects out-of-window selections") {
  PatchGrid g = make_grid(6, 6, 2, 1);  // 5x5 grid
  FlowField flow = identity_flow(2, g);
  // Selecting a neighbor is fine for w=3 but not for w=1.
  flow.selected(0, g.index(2, 2)) = g.index(2, 3);
  CHECK_NOTHROW(validate_flow(flow, g, 3));
  CHECK_THROWS_AS(validate_flow(flow, g, 1), DimensionError);
  // Chebyshev distance 2 needs w=5.
  flow.selected(0, g.index(2, 2)) = g.index(4, 4);
  CHECK_THROWS_AS(validate_flow(flow, g, 3), DimensionError);
  CHECK_NOTHROW(validate_flow(flow, g, 5));
  // Out-of-range index is always rejected.
  flow.selected(0, 0) = g.positions();
  CHECK_THROWS_AS(validate_flow(flow, g, 99), DimensionError);
}

TEST_CASE("aligned_subatom reads the selected column") {
  PatchGrid g = make_grid(6, 6, 2, 1);
  Uniform u(10);
  TensorAtom atom = testutil::random_atom(g, u);
  FlowField flow = identity_flow(1, g);
  flow.selected(0, 7) = 12;
  CHECK(aligned_subatom(atom, flow, 0, 7) == atom.data().col(12));
  CHECK(aligned_subatom(atom, flow, 0, 3) == atom.data().col(3));
}

TEST_CASE("l1 objective matches a from-scratch evaluation") {
  PatchGrid g = make_grid(6, 6, 3, 1);  // 4x4 grid, M=9
  Uniform u(12);
  Dictionary dict = testutil::random_dictionary(4, g, u);
  TensorImage x = testutil::random_image(g, u);
  FlowField flow = identity_flow(4, g);
  flow.selected(1, 5) = 6;  // one non-identity selection, w=3 feasible
  Eigen::VectorXd alpha(4);
  alpha << 0.7, -0.3, 0.0, 1.1;
  const double lambda = 0.05;

  double expect = 0.0;
  for (int p = 0; p < g.positions(); ++p) {
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(g.vector_dim());
    for (int n = 0; n < 4; ++n) {
      recon += alpha(n) * dict.atom(n).data().col(flow.selected(n, p));
    }
    expect += 0.5 * (recon - x.data().col(p)).squaredNorm();
  }
  expect += lambda * alpha.cwiseAbs().sum();

  CHECK(eval_l1_objective(dict, flow, alpha, x, lambda) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(eval_joint_objective(dict, flow, alpha, x, lambda) ==
        doctest::Approx(expect).epsilon(1e-12));
}

}  // TEST_SUITE
