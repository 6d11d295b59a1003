#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cellnet/error.hpp"
#include "cellnet/graph.hpp"

namespace cellnet {

inline constexpr int kMaxCellDim = 3;

using CellIndex = std::uint32_t;

struct CellId {
  int dim = 0;
  CellIndex index = 0;

  friend auto operator<=>(const CellId&, const CellId&) = default;
};

/// (neighbour, witness) pair returned by the upper/lower adjacency queries.
struct AdjacentCell {
  CellId cell;
  CellId witness;

  friend auto operator<=>(const AdjacentCell&, const AdjacentCell&) = default;
};

/// Boundary sequences for one complex: entry p-1 holds the p-cells, each
/// given as indices of (p-1)-cells.
using BoundaryLists = std::vector<std::vector<std::vector<CellIndex>>>;

/// Regular cell complex of dimension at most 3, stored as its boundary
/// relation. Immutable once built; construct through build_complex().
class CellComplex {
 public:
  CellComplex() : CellComplex(0, {}) {}

  /// Declared dimension (number of boundary levels), independent of whether
  /// the top level is populated.
  int dimension() const noexcept { return static_cast<int>(boundary_.size()); }

  std::size_t count(int dim) const noexcept {
    if (dim < 0 || dim > dimension()) return 0;
    return dim == 0 ? num_vertices_ : boundary_[dim - 1].size();
  }

  std::array<std::size_t, kMaxCellDim + 1> counts() const noexcept {
    return {count(0), count(1), count(2), count(3)};
  }

  std::size_t total_cells() const noexcept {
    std::size_t total = 0;
    for (int p = 0; p <= dimension(); ++p) total += count(p);
    return total;
  }

  bool contains(CellId c) const noexcept { return c.dim >= 0 && c.dim <= dimension() && c.index < count(c.dim); }

  /// Indices of the (dim-1)-cells on the boundary, sorted.
  std::span<const CellIndex> boundary(int dim, CellIndex i) const {
    if (dim == 0) return {};
    return boundary_[dim - 1][i];
  }

  /// Indices of the (dim+1)-cells having this cell on their boundary, sorted.
  std::span<const CellIndex> coboundary(int dim, CellIndex i) const {
    if (dim >= dimension()) return {};
    return coboundary_[dim][i];
  }

  /// 0-cells in the closure of the cell, sorted.
  std::span<const CellIndex> vertices(int dim, CellIndex i) const {
    if (dim == 0) return std::span<const CellIndex>(&identity_vertex(i), 1);
    return closure_[dim - 1][i];
  }

  /// For a 2-cell: its boundary edges in traversal order (see orientation notes
  /// in spectral.hpp). Empty for other dimensions.
  std::span<const CellIndex> cycle_edges(CellIndex i) const { return cycle_edges_.at(i); }
  /// For a 2-cell: the vertex at the start of each traversed edge.
  std::span<const CellIndex> cycle_vertices(CellIndex i) const { return cycle_vertices_.at(i); }

  /// Raw boundary lists, suitable for rebuilding the complex.
  const BoundaryLists& boundary_lists() const noexcept { return boundary_; }

  /// Calls f(neighbour, witness) for every upper-adjacent pair of the cell, with
  /// one call per shared coface. Order: witness ascending, then neighbour ascending.
  template <typename F>
  void for_each_upper(int dim, CellIndex i, F&& f) const {
    for (CellIndex w : coboundary(dim, i)) {
      for (CellIndex t : boundary(dim + 1, w)) {
        if (t != i) f(t, w);
      }
    }
  }

  /// Calls f(neighbour, witness) for every lower-adjacent pair of the cell.
  template <typename F>
  void for_each_lower(int dim, CellIndex i, F&& f) const {
    if (dim == 0) return;
    for (CellIndex w : boundary(dim, i)) {
      for (CellIndex t : coboundary(dim - 1, w)) {
        if (t != i) f(t, w);
      }
    }
  }

  friend bool operator==(const CellComplex& a, const CellComplex& b) {
    return a.num_vertices_ == b.num_vertices_ && a.boundary_ == b.boundary_;
  }

 private:
  CellComplex(std::size_t num_vertices, BoundaryLists boundary)
      : num_vertices_(num_vertices), boundary_(std::move(boundary)) {}

  friend CellComplex build_complex(std::size_t, BoundaryLists);

  const CellIndex& identity_vertex(CellIndex i) const {
    if (i >= vertex_ids_.size()) throw Error(ErrorCode::UnknownCell, "vertex " + std::to_string(i));
    return vertex_ids_[i];
  }

  std::size_t num_vertices_ = 0;
  BoundaryLists boundary_;
  std::vector<std::vector<std::vector<CellIndex>>> coboundary_;
  std::vector<std::vector<std::vector<CellIndex>>> closure_;
  std::vector<std::vector<CellIndex>> cycle_edges_;
  std::vector<std::vector<CellIndex>> cycle_vertices_;
  std::vector<CellIndex> vertex_ids_;
};

namespace detail {

inline std::string cell_name(int dim, std::size_t i) {
  return std::to_string(dim) + "-cell " + std::to_string(i);
}

// Walks the boundary edges of a 2-cell. Starts at the least vertex and leaves
// along the incident edge whose other endpoint is smaller (lower edge index on
// ties). Throws NotACycle unless the edges form exactly one closed cycle.
inline void trace_cycle(const BoundaryLists& bnd, std::size_t cell, std::span<const CellIndex> edges,
                        std::vector<CellIndex>& edge_order, std::vector<CellIndex>& vertex_order) {
  if (edges.empty()) throw Error(ErrorCode::NotACycle, cell_name(2, cell) + " has an empty boundary");
  std::map<CellIndex, std::vector<CellIndex>> incident;
  for (CellIndex e : edges) {
    incident[bnd[0][e][0]].push_back(e);
    incident[bnd[0][e][1]].push_back(e);
  }
  for (const auto& [v, es] : incident) {
    if (es.size() != 2) {
      throw Error(ErrorCode::NotACycle, cell_name(2, cell) + ": vertex " + std::to_string(v) + " meets " +
                                            std::to_string(es.size()) + " boundary edges");
    }
  }
  auto other_end = [&](CellIndex e, CellIndex v) { return bnd[0][e][0] == v ? bnd[0][e][1] : bnd[0][e][0]; };
  const CellIndex start = incident.begin()->first;
  const auto& first_pair = incident.begin()->second;
  CellIndex e0 = first_pair[0];
  CellIndex e1 = first_pair[1];
  const auto key = [&](CellIndex e) { return std::pair{other_end(e, start), e}; };
  CellIndex current = key(e0) < key(e1) ? e0 : e1;
  CellIndex v = start;
  edge_order.clear();
  vertex_order.clear();
  do {
    edge_order.push_back(current);
    vertex_order.push_back(v);
    v = other_end(current, v);
    const auto& es = incident[v];
    CellIndex next = es[0] == current ? es[1] : es[0];
    current = next;
  } while (v != start && edge_order.size() <= edges.size());
  if (edge_order.size() != edges.size()) {
    throw Error(ErrorCode::NotACycle, cell_name(2, cell) + ": boundary edges do not form a single closed cycle");
  }
}

}  // namespace detail

/// Validates boundary lists and builds a complex with boundary, coboundary and
/// closure caches. boundaries[p-1] lists the p-cells.
inline CellComplex build_complex(std::size_t num_vertices, BoundaryLists boundaries) {
  if (boundaries.size() > static_cast<std::size_t>(kMaxCellDim)) {
    throw Error(ErrorCode::BadDimension, "cells of dimension " + std::to_string(boundaries.size()) +
                                             " exceed the maximum of " + std::to_string(kMaxCellDim));
  }
  const int top = static_cast<int>(boundaries.size());
  for (int p = 1; p <= top; ++p) {
    const std::size_t below = p == 1 ? num_vertices : boundaries[p - 2].size();
    auto& level = boundaries[p - 1];
    for (std::size_t i = 0; i < level.size(); ++i) {
      auto& b = level[i];
      for (CellIndex j : b) {
        if (j >= below) {
          throw Error(ErrorCode::DanglingBoundary,
                      detail::cell_name(p, i) + " references undeclared " + detail::cell_name(p - 1, j));
        }
      }
      if (p == 1) {
        if (b.size() != 2) {
          throw Error(ErrorCode::BadBoundarySize,
                      detail::cell_name(1, i) + " has " + std::to_string(b.size()) + " endpoints");
        }
        if (b[0] == b[1]) throw Error(ErrorCode::SelfLoopEdge, detail::cell_name(1, i) + " is a self-loop");
      }
      std::sort(b.begin(), b.end());
      if (std::adjacent_find(b.begin(), b.end()) != b.end()) {
        throw Error(ErrorCode::NotACycle, detail::cell_name(p, i) + " repeats a boundary cell");
      }
    }
  }

  CellComplex cx(num_vertices, std::move(boundaries));
  const auto& bnd = cx.boundary_;
  cx.vertex_ids_.resize(num_vertices);
  std::iota(cx.vertex_ids_.begin(), cx.vertex_ids_.end(), CellIndex{0});

  cx.coboundary_.resize(top);
  for (int p = 0; p < top; ++p) {
    cx.coboundary_[p].assign(cx.count(p), {});
    for (std::size_t j = 0; j < bnd[p].size(); ++j) {
      for (CellIndex i : bnd[p][j]) cx.coboundary_[p][i].push_back(static_cast<CellIndex>(j));
    }
  }

  cx.closure_.resize(top);
  for (int p = 1; p <= top; ++p) {
    auto& closure = cx.closure_[p - 1];
    closure.resize(bnd[p - 1].size());
    for (std::size_t i = 0; i < closure.size(); ++i) {
      std::vector<CellIndex> vs;
      for (CellIndex f : bnd[p - 1][i]) {
        auto sub = cx.vertices(p - 1, f);
        vs.insert(vs.end(), sub.begin(), sub.end());
      }
      std::sort(vs.begin(), vs.end());
      vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
      closure[i] = std::move(vs);
    }
  }

  if (top >= 2) {
    const auto& cells = bnd[1];
    cx.cycle_edges_.resize(cells.size());
    cx.cycle_vertices_.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      detail::trace_cycle(bnd, i, cells[i], cx.cycle_edges_[i], cx.cycle_vertices_[i]);
    }
  }

  if (top >= 3) {
    // Combinatorial closed-surface check: every edge under a 3-cell lies on
    // exactly two of its boundary 2-cells, and those 2-cells are connected.
    for (std::size_t i = 0; i < bnd[2].size(); ++i) {
      const auto& faces = bnd[2][i];
      if (faces.empty()) throw Error(ErrorCode::NotACycle, detail::cell_name(3, i) + " has an empty boundary");
      std::map<CellIndex, std::vector<std::size_t>> edge_faces;
      for (std::size_t f = 0; f < faces.size(); ++f) {
        for (CellIndex e : bnd[1][faces[f]]) edge_faces[e].push_back(f);
      }
      std::vector<std::size_t> parent(faces.size());
      std::iota(parent.begin(), parent.end(), std::size_t{0});
      auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
      };
      for (const auto& [e, fs] : edge_faces) {
        if (fs.size() != 2) {
          throw Error(ErrorCode::NotACycle, detail::cell_name(3, i) + ": edge " + std::to_string(e) + " lies on " +
                                                std::to_string(fs.size()) + " boundary faces");
        }
        parent[find(fs[0])] = find(fs[1]);
      }
      for (std::size_t f = 0; f < faces.size(); ++f) {
        if (find(f) != find(0)) {
          throw Error(ErrorCode::NotACycle, detail::cell_name(3, i) + ": boundary faces are not connected");
        }
      }
    }
  }
  return cx;
}

inline void check_cell(const CellComplex& x, CellId c) {
  if (!x.contains(c)) throw Error(ErrorCode::UnknownCell, detail::cell_name(c.dim, c.index));
}

inline std::vector<CellId> boundary_of(const CellComplex& x, CellId c) {
  check_cell(x, c);
  std::vector<CellId> out;
  for (CellIndex i : x.boundary(c.dim, c.index)) out.push_back({c.dim - 1, i});
  return out;
}

inline std::vector<CellId> coboundary_of(const CellComplex& x, CellId c) {
  check_cell(x, c);
  std::vector<CellId> out;
  for (CellIndex i : x.coboundary(c.dim, c.index)) out.push_back({c.dim + 1, i});
  return out;
}

/// Every (tau, delta) with tau upper adjacent to c through coface delta; a
/// neighbour appears once per shared coface. Sorted.
inline std::vector<AdjacentCell> upper_adjacent(const CellComplex& x, CellId c) {
  check_cell(x, c);
  std::vector<AdjacentCell> out;
  x.for_each_upper(c.dim, c.index,
                   [&](CellIndex t, CellIndex w) { out.push_back({{c.dim, t}, {c.dim + 1, w}}); });
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<AdjacentCell> lower_adjacent(const CellComplex& x, CellId c) {
  check_cell(x, c);
  std::vector<AdjacentCell> out;
  x.for_each_lower(c.dim, c.index,
                   [&](CellIndex t, CellIndex w) { out.push_back({{c.dim, t}, {c.dim - 1, w}}); });
  std::sort(out.begin(), out.end());
  return out;
}

/// Subcomplex of cells of dimension at most k.
inline CellComplex skeleton(const CellComplex& x, int k) {
  if (k < 0 || k > kMaxCellDim) throw Error(ErrorCode::BadDimension, "skeleton dimension " + std::to_string(k));
  BoundaryLists lists(x.boundary_lists().begin(),
                      x.boundary_lists().begin() + std::min(k, x.dimension()));
  return build_complex(x.count(0), std::move(lists));
}

/// 1-skeleton of a graph as a complex: 0-cells are vertices, 1-cells the
/// edges in Graph::edges() order.
inline CellComplex graph_complex(const Graph& g) {
  BoundaryLists lists(1);
  for (const auto& [u, v] : g.edges()) lists[0].push_back({u, v});
  return build_complex(g.num_vertices(), std::move(lists));
}

/// Disjoint union of complexes. Cell i of dimension p in parts[k] becomes cell
/// offsets[k][p] + i.
struct ComplexUnion {
  CellComplex complex;
  std::vector<std::array<std::size_t, kMaxCellDim + 1>> offsets;
};

inline ComplexUnion disjoint_union(std::span<const CellComplex* const> parts) {
  int top = 0;
  for (const auto* part : parts) top = std::max(top, part->dimension());
  BoundaryLists lists(top);
  ComplexUnion out;
  std::array<std::size_t, kMaxCellDim + 1> running{};
  for (const auto* part : parts) {
    out.offsets.push_back(running);
    for (int p = 1; p <= part->dimension(); ++p) {
      for (std::size_t i = 0; i < part->count(p); ++i) {
        std::vector<CellIndex> b;
        for (CellIndex j : part->boundary(p, static_cast<CellIndex>(i))) {
          b.push_back(static_cast<CellIndex>(j + running[p - 1]));
        }
        lists[p - 1].push_back(std::move(b));
      }
    }
    for (int p = 0; p <= kMaxCellDim; ++p) running[p] += part->count(p);
  }
  out.complex = build_complex(running[0], std::move(lists));
  return out;
}

/// Complex with cell i of dimension p renamed to perms[p][i]. perms must hold
/// one permutation per populated dimension.
inline CellComplex permute_cells(const CellComplex& x, const std::vector<std::vector<CellIndex>>& perms) {
  if (perms.size() < static_cast<std::size_t>(x.dimension() + 1)) {
    throw Error(ErrorCode::ShapeMismatch, "need one permutation per dimension");
  }
  for (int p = 0; p <= x.dimension(); ++p) {
    if (perms[p].size() != x.count(p)) throw Error(ErrorCode::ShapeMismatch, "permutation size mismatch");
  }
  BoundaryLists lists(x.dimension());
  for (int p = 1; p <= x.dimension(); ++p) {
    lists[p - 1].resize(x.count(p));
    for (std::size_t i = 0; i < x.count(p); ++i) {
      std::vector<CellIndex> b;
      for (CellIndex j : x.boundary(p, static_cast<CellIndex>(i))) b.push_back(perms[p - 1][j]);
      lists[p - 1][perms[p][i]] = std::move(b);
    }
  }
  return build_complex(x.count(0), std::move(lists));
}

}  // namespace cellnet
