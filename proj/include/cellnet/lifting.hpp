#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cellnet/complex.hpp"
#include "cellnet/error.hpp"
#include "cellnet/graph.hpp"

namespace cellnet {

enum class Substructure { Clique, InducedCycle, SimpleCycle };

inline const char* to_string(Substructure kind) {
  switch (kind) {
    case Substructure::Clique: return "CL";
    case Substructure::InducedCycle: return "IC";
    case Substructure::SimpleCycle: return "C";
  }
  return "?";
}

struct LiftingPart {
  Substructure kind = Substructure::InducedCycle;
  int k = 3;

  friend auto operator<=>(const LiftingPart&, const LiftingPart&) = default;
};

/// Union of lifting maps plus the dimension cap of the produced complex.
struct LiftingSpec {
  std::vector<LiftingPart> parts;
  int max_dim = 2;

  void validate() const {
    if (parts.empty()) throw Error(ErrorCode::BadSpec, "lifting spec needs at least one part");
    for (const auto& part : parts) {
      if (part.k < 3) throw Error(ErrorCode::BadSpec, "substructure size must be at least 3");
    }
    if (max_dim < 1 || max_dim > kMaxCellDim) throw Error(ErrorCode::BadSpec, "max_dim must be in [1,3]");
  }

  std::string to_string() const {
    std::string out;
    for (const auto& part : parts) {
      if (!out.empty()) out += ',';
      out += cellnet::to_string(part.kind);
      out += ':' + std::to_string(part.k);
    }
    return out;
  }
};

/// Parses "IC:6", "CL:3,IC:6", "C:8". Kinds are CL, IC and C.
inline LiftingSpec parse_lifting_spec(std::string_view text, int max_dim = 2) {
  LiftingSpec spec;
  spec.max_dim = max_dim;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::BadSpec, "expected KIND:k, got '" + item + "'");
    const std::string kind = item.substr(0, colon);
    LiftingPart part;
    if (kind == "CL") {
      part.kind = Substructure::Clique;
    } else if (kind == "IC") {
      part.kind = Substructure::InducedCycle;
    } else if (kind == "C") {
      part.kind = Substructure::SimpleCycle;
    } else {
      throw Error(ErrorCode::BadSpec, "unknown substructure kind '" + kind + "'");
    }
    try {
      std::size_t used = 0;
      part.k = std::stoi(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::BadSpec, "bad size in '" + item + "'");
    }
    spec.parts.push_back(part);
  }
  spec.validate();
  return spec;
}

/// All cliques with 3..k vertices, each sorted, listed in lexicographic order.
inline std::vector<std::vector<Vertex>> list_cliques(const Graph& g, int k) {
  std::vector<std::vector<Vertex>> out;
  std::vector<Vertex> clique;
  auto extend = [&](auto&& self, const std::vector<Vertex>& candidates) -> void {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const Vertex v = candidates[i];
      clique.push_back(v);
      if (clique.size() >= 3) out.push_back(clique);
      if (static_cast<int>(clique.size()) < k) {
        std::vector<Vertex> next;
        for (std::size_t j = i + 1; j < candidates.size(); ++j) {
          if (g.has_edge(v, candidates[j])) next.push_back(candidates[j]);
        }
        self(self, next);
      }
      clique.pop_back();
    }
  };
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    clique = {v};
    std::vector<Vertex> candidates;
    for (Vertex u : g.neighbours(v)) {
      if (u > v) candidates.push_back(u);
    }
    extend(extend, candidates);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Depth-first cycle search rooted at each vertex s, visiting only vertices
// greater than s. A cycle is reported once, in the direction where the second
// vertex is smaller than the last. With `induced`, a vertex adjacent to an
// interior path vertex is never appended, and a vertex adjacent to s closes the
// cycle instead of extending the path.
inline std::vector<std::vector<Vertex>> cycle_search(const Graph& g, int k, bool induced) {
  std::vector<std::vector<Vertex>> out;
  const std::size_t n = g.num_vertices();
  std::vector<char> on_path(n, 0);
  std::vector<Vertex> path;
  Vertex root = 0;

  auto has_chord_to_interior = [&](Vertex u) {
    // interior = path[1 .. size-2]
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      if (g.has_edge(u, path[i])) return true;
    }
    return false;
  };

  auto dfs = [&](auto&& self) -> void {
    const Vertex last = path.back();
    for (Vertex u : g.neighbours(last)) {
      if (u == root) {
        if (!induced && path.size() >= 3 && path[1] < last) out.push_back(path);
        continue;
      }
      if (u < root || on_path[u]) continue;
      if (induced) {
        if (path.size() >= 2 && has_chord_to_interior(u)) continue;
        if (path.size() >= 2 && g.has_edge(u, root)) {
          if (static_cast<int>(path.size()) + 1 <= k && path[1] < u) {
            path.push_back(u);
            out.push_back(path);
            path.pop_back();
          }
          continue;
        }
        if (static_cast<int>(path.size()) + 2 > k) continue;
      } else if (static_cast<int>(path.size()) >= k) {
        continue;
      }
      on_path[u] = 1;
      path.push_back(u);
      self(self);
      path.pop_back();
      on_path[u] = 0;
    }
  };

  for (root = 0; root < n; ++root) {
    path = {root};
    on_path[root] = 1;
    dfs(dfs);
    on_path[root] = 0;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

}  // namespace detail

/// Every simple cycle with 3..k vertices, once, as a canonical vertex
/// sequence: starts at its smallest vertex and continues toward the smaller of
/// that vertex's two cycle neighbours. Sorted by length, then lexicographically.
inline std::vector<std::vector<Vertex>> list_simple_cycles(const Graph& g, int k) {
  return detail::cycle_search(g, k, false);
}

/// Chordless (induced) cycles with 3..k vertices, canonicalised and ordered as
/// list_simple_cycles.
inline std::vector<std::vector<Vertex>> list_induced_cycles(const Graph& g, int k) {
  return detail::cycle_search(g, k, true);
}

/// Histogram size -> count for sizes 3..k (zero entries included).
inline std::map<int, std::size_t> count_by_size(const std::vector<std::vector<Vertex>>& items, int k) {
  std::map<int, std::size_t> counts;
  for (int s = 3; s <= k; ++s) counts[s] = 0;
  for (const auto& item : items) ++counts[static_cast<int>(item.size())];
  return counts;
}

/// Where a lifted 2- or 3-cell came from.
struct CellProvenance {
  std::vector<Vertex> vertices;  ///< cycle order for 2-cells, sorted for 3-cells
  unsigned kinds = 0;            ///< bit (1 << Substructure) per part that produced it

  bool from(Substructure kind) const { return (kinds >> static_cast<unsigned>(kind)) & 1U; }
};

struct LiftedComplex {
  CellComplex complex;
  std::vector<CellProvenance> two_cells;
  std::vector<CellProvenance> three_cells;
};

/// Skeleton-preserving lifting: 0-cells are the vertices, 1-cells the edges
/// (same indices as in the graph), 2-cells the selected cycles and triangles,
/// 3-cells the 4-cliques when max_dim is 3 and a clique part has k >= 4.
inline LiftedComplex lift_detailed(const Graph& g, const LiftingSpec& spec) {
  spec.validate();
  BoundaryLists lists(spec.max_dim);
  for (const auto& [u, v] : g.edges()) lists[0].push_back({u, v});

  LiftedComplex out;
  if (spec.max_dim >= 2) {
    // Keyed on the sorted boundary edge set, which identifies the cycle.
    std::map<std::vector<CellIndex>, CellProvenance> by_boundary;
    auto add_cycle = [&](const std::vector<Vertex>& cycle, Substructure kind) {
      std::vector<CellIndex> edges;
      for (std::size_t i = 0; i < cycle.size(); ++i) {
        edges.push_back(static_cast<CellIndex>(g.edge_index(cycle[i], cycle[(i + 1) % cycle.size()])));
      }
      std::sort(edges.begin(), edges.end());
      auto& entry = by_boundary[edges];
      entry.vertices = cycle;
      entry.kinds |= 1U << static_cast<unsigned>(kind);
    };
    for (const auto& part : spec.parts) {
      switch (part.kind) {
        case Substructure::Clique:
          for (const auto& c : list_cliques(g, std::min(part.k, 3))) add_cycle(c, part.kind);
          break;
        case Substructure::InducedCycle:
          for (const auto& c : list_induced_cycles(g, part.k)) add_cycle(c, part.kind);
          break;
        case Substructure::SimpleCycle:
          for (const auto& c : list_simple_cycles(g, part.k)) add_cycle(c, part.kind);
          break;
      }
    }
    std::vector<std::pair<std::vector<CellIndex>, CellProvenance>> cells(by_boundary.begin(), by_boundary.end());
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
      const auto& va = a.second.vertices;
      const auto& vb = b.second.vertices;
      return va.size() != vb.size() ? va.size() < vb.size() : va < vb;
    });
    for (auto& [edges, prov] : cells) {
      lists[1].push_back(edges);
      out.two_cells.push_back(std::move(prov));
    }

    if (spec.max_dim >= 3) {
      int clique_k = 0;
      for (const auto& part : spec.parts) {
        if (part.kind == Substructure::Clique) clique_k = std::max(clique_k, part.k);
      }
      if (clique_k >= 4) {
        std::map<std::vector<Vertex>, CellIndex> triangle_index;
        for (std::size_t i = 0; i < out.two_cells.size(); ++i) {
          const auto& vs = out.two_cells[i].vertices;
          if (vs.size() == 3) {
            auto key = vs;
            std::sort(key.begin(), key.end());
            triangle_index[key] = static_cast<CellIndex>(i);
          }
        }
        for (const auto& c : list_cliques(g, 4)) {
          if (c.size() != 4) continue;
          std::vector<CellIndex> faces;
          for (std::size_t skip = 0; skip < 4; ++skip) {
            std::vector<Vertex> tri;
            for (std::size_t j = 0; j < 4; ++j) {
              if (j != skip) tri.push_back(c[j]);
            }
            faces.push_back(triangle_index.at(tri));
          }
          lists[2].push_back(std::move(faces));
          out.three_cells.push_back({c, 1U << static_cast<unsigned>(Substructure::Clique)});
        }
      }
    }
  }
  out.complex = build_complex(g.num_vertices(), std::move(lists));
  return out;
}

inline CellComplex lift(const Graph& g, const LiftingSpec& spec) { return lift_detailed(g, spec).complex; }

/// True iff the 1-skeleton of x is g under the identity vertex map.
inline bool check_skeleton_preserving(const Graph& g, const CellComplex& x) {
  if (x.count(0) != g.num_vertices()) return false;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < x.count(1); ++i) {
    auto b = x.boundary(1, static_cast<CellIndex>(i));
    edges.push_back({b[0], b[1]});
  }
  std::sort(edges.begin(), edges.end());
  return edges == g.edges();
}

}  // namespace cellnet
