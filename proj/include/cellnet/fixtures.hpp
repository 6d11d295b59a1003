#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellnet/complex.hpp"
#include "cellnet/graph.hpp"
#include "cellnet/graph6.hpp"

namespace cellnet {

struct Fixture {
  std::string name;
  Graph graph;
  std::string note;
};

namespace fixtures {

/// graph6 strings for the SR(16,6,2,2) pair, built from the constructions in
/// rook44() and shrikhande() and stored so the family loads without files.
inline constexpr std::string_view kRook44Graph6 = "O~`HW}GPHDaNaGPCcPWaN";
inline constexpr std::string_view kShrikhandeGraph6 = R"(OlfJHsHBGK_\oHWKeBK_\)";

/// 4x4 rook's graph: vertex 4r+c, adjacent when sharing a row or a column.
inline Graph rook44() {
  std::vector<Edge> edges;
  for (Vertex a = 0; a < 16; ++a) {
    for (Vertex b = a + 1; b < 16; ++b) {
      if (a / 4 == b / 4 || a % 4 == b % 4) edges.push_back({a, b});
    }
  }
  return Graph(16, std::move(edges));
}

/// Shrikhande graph: Cayley graph of Z4 x Z4 with generators +-(0,1), +-(1,0), +-(1,1).
inline Graph shrikhande() {
  std::vector<Edge> edges;
  for (Vertex a = 0; a < 16; ++a) {
    for (Vertex b = a + 1; b < 16; ++b) {
      const Vertex dr = (b / 4 + 4 - a / 4) % 4;
      const Vertex dc = (b % 4 + 4 - a % 4) % 4;
      const bool gen = (dr == 0 && (dc == 1 || dc == 3)) || (dc == 0 && (dr == 1 || dr == 3)) ||
                       (dr == dc && (dr == 1 || dr == 3));
      if (gen) edges.push_back({a, b});
    }
  }
  return Graph(16, std::move(edges));
}

/// Two 6-rings fused along the edge (0,5).
inline Graph decalin() {
  return Graph(10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {5, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 0}});
}

/// Two 5-rings joined by the bridge (0,5).
inline Graph bicyclopentyl() {
  return Graph(10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {5, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 5}, {0, 5}});
}

inline Graph cycle_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>((i + 1) % n)});
  return Graph(n, std::move(edges));
}

inline Graph hexagon() { return cycle_graph(6); }

inline Graph two_triangles() { return Graph(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}); }

inline Graph sr16622_rook() { return decode_graph6(kRook44Graph6); }
inline Graph sr16622_shrikhande() { return decode_graph6(kShrikhandeGraph6); }

/// Both SR(16,6,2,2) graphs as a family.
inline std::vector<Graph> sr16622() { return {sr16622_rook(), sr16622_shrikhande()}; }

/// 2-sphere: two vertices, two edges forming a 2-cycle, two hemispheres glued to it.
inline CellComplex sphere() { return build_complex(2, {{{0, 1}, {0, 1}}, {{0, 1}, {0, 1}}}); }

/// Hexagon with one 2-cell glued along its boundary.
inline CellComplex hexagon_disk() {
  BoundaryLists lists(2);
  for (Vertex i = 0; i < 6; ++i) lists[0].push_back({std::min(i, (i + 1) % 6), std::max(i, (i + 1) % 6)});
  // Edge order in the boundary lists must match sorted graph order for
  // consistency with lifted complexes: (0,1),(0,5),(1,2),(2,3),(3,4),(4,5).
  std::sort(lists[0].begin(), lists[0].end());
  lists[1].push_back({0, 1, 2, 3, 4, 5});
  return build_complex(6, std::move(lists));
}

inline const std::vector<Fixture>& all() {
  static const std::vector<Fixture> list = {
      {"rook44", rook44(), "4x4 rook's graph, SR(16,6,2,2)"},
      {"shrikhande", shrikhande(), "Shrikhande graph, SR(16,6,2,2)"},
      {"decalin", decalin(), "two 6-rings sharing an edge"},
      {"bicyclopentyl", bicyclopentyl(), "two 5-rings joined by a bridge"},
      {"hexagon", hexagon(), "6-cycle"},
      {"two_triangles", two_triangles(), "two disjoint triangles"},
  };
  return list;
}

inline std::optional<Graph> find(std::string_view name) {
  for (const auto& f : all()) {
    if (f.name == name) return f.graph;
  }
  return std::nullopt;
}

}  // namespace fixtures

}  // namespace cellnet
