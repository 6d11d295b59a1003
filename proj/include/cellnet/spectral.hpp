#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cellnet/activation.hpp"
#include "cellnet/complex.hpp"
#include "cellnet/error.hpp"

namespace cellnet {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  int value = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Integer incidence matrix between (k-1)-cells (rows) and k-cells (columns).
struct BoundaryMatrix {
  int k = 1;
  bool is_signed = false;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Triplet> entries;  ///< column-major order

  Eigen::MatrixXi dense() const {
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (const auto& t : entries) m(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
    return m;
  }

  Eigen::SparseMatrix<double> sparse() const {
    std::vector<Eigen::Triplet<double>> ts;
    ts.reserve(entries.size());
    for (const auto& t : entries) {
      ts.emplace_back(static_cast<int>(t.row), static_cast<int>(t.col), static_cast<double>(t.value));
    }
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    m.setFromTriplets(ts.begin(), ts.end());
    return m;
  }
};

/// k-th boundary matrix. Orientation convention for the signed version:
///  - a 1-cell runs from its lower to its higher vertex;
///  - a 2-cell runs along its boundary cycle from its least vertex toward the
///    smaller neighbour on the cycle (lower edge index on ties); an edge gets +1
///    when its own direction agrees with that traversal;
///  - a 3-cell over vertices v0<v1<v2<v3 gives the face opposite v_i the sign
///    (-1)^i. This matches the 2-cell convention on triangles, whose traversal
///    is always v_a -> v_b -> v_c for a<b<c.
inline BoundaryMatrix boundary_matrix(const CellComplex& x, int k, bool is_signed) {
  if (k < 1 || k > x.dimension()) {
    throw Error(ErrorCode::BadDimension, "boundary matrix B_" + std::to_string(k) + " of a " +
                                             std::to_string(x.dimension()) + "-dimensional complex");
  }
  BoundaryMatrix b;
  b.k = k;
  b.is_signed = is_signed;
  b.rows = x.count(k - 1);
  b.cols = x.count(k);
  for (std::size_t j = 0; j < b.cols; ++j) {
    const auto cell = static_cast<CellIndex>(j);
    const auto faces = x.boundary(k, cell);
    if (!is_signed) {
      for (CellIndex i : faces) b.entries.push_back({i, j, 1});
      continue;
    }
    if (k == 1) {
      b.entries.push_back({faces[0], j, -1});
      b.entries.push_back({faces[1], j, 1});
    } else if (k == 2) {
      const auto edges = x.cycle_edges(cell);
      const auto starts = x.cycle_vertices(cell);
      std::vector<Triplet> col;
      for (std::size_t s = 0; s < edges.size(); ++s) {
        const auto tail = x.boundary(1, edges[s])[0];
        col.push_back({edges[s], j, tail == starts[s] ? 1 : -1});
      }
      std::sort(col.begin(), col.end(), [](const Triplet& a, const Triplet& c) { return a.row < c.row; });
      b.entries.insert(b.entries.end(), col.begin(), col.end());
    } else {
      const auto verts = x.vertices(3, cell);
      if (verts.size() != 4) {
        throw Error(ErrorCode::BadDimension, "signed B_3 is defined only for tetrahedral 3-cells");
      }
      for (CellIndex f : faces) {
        const auto fv = x.vertices(2, f);
        std::size_t missing = 0;
        while (missing < 3 && fv[missing] == verts[missing]) ++missing;
        b.entries.push_back({f, j, missing % 2 == 0 ? 1 : -1});
      }
    }
  }
  return b;
}

/// Hodge Laplacian L_p = B_p^T B_p + B_{p+1} B_{p+1}^T from signed boundary
/// matrices; absent terms are zero.
struct Laplacian {
  int p = 0;
  Eigen::SparseMatrix<double> matrix;
  std::array<bool, 2> uses{false, false};  ///< {B_p present, B_{p+1} present}
};

inline Laplacian hodge_laplacian(const CellComplex& x, int p) {
  if (p < 0 || p > x.dimension()) {
    throw Error(ErrorCode::BadDimension, "Laplacian L_" + std::to_string(p) + " of a " +
                                             std::to_string(x.dimension()) + "-dimensional complex");
  }
  const auto n = static_cast<Eigen::Index>(x.count(p));
  Laplacian lap;
  lap.p = p;
  lap.matrix.resize(n, n);
  if (p >= 1) {
    const auto b = boundary_matrix(x, p, true).sparse();
    lap.matrix += Eigen::SparseMatrix<double>(b.transpose() * b);
    lap.uses[0] = true;
  }
  if (p + 1 <= x.dimension()) {
    const auto b = boundary_matrix(x, p + 1, true).sparse();
    lap.matrix += Eigen::SparseMatrix<double>(b * b.transpose());
    lap.uses[1] = true;
  }
  lap.matrix.makeCompressed();
  return lap;
}

/// Polynomial filter psi(sum_r L_p^r H W_r) on p-cochains.
inline Eigen::MatrixXd poly_conv(const CellComplex& x, int p, const Eigen::MatrixXd& h,
                                 const std::vector<Eigen::MatrixXd>& weights, Activation psi = Activation::Identity) {
  if (static_cast<std::size_t>(h.rows()) != x.count(p)) {
    throw Error(ErrorCode::ShapeMismatch, "feature rows do not match the number of " + std::to_string(p) + "-cells");
  }
  if (weights.empty()) throw Error(ErrorCode::ShapeMismatch, "need at least one weight matrix");
  for (const auto& w : weights) {
    if (w.rows() != h.cols() || w.cols() != weights.front().cols()) {
      throw Error(ErrorCode::ShapeMismatch, "weight shapes must be (width x out) for every power");
    }
  }
  const auto lap = hodge_laplacian(x, p).matrix;
  Eigen::MatrixXd power = h;  // L^r H
  Eigen::MatrixXd out = power * weights[0];
  for (std::size_t r = 1; r < weights.size(); ++r) {
    power = lap * power;
    out += power * weights[r];
  }
  return out.unaryExpr([psi](double v) { return activate(psi, v); });
}

}  // namespace cellnet
