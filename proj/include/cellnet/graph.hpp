#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cellnet/error.hpp"

namespace cellnet {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

/// Simple undirected graph with optional integer node and edge labels.
///
/// Edges are normalised to (low, high) and kept sorted, so the index of an
/// edge is its rank in lexicographic order. Lifting relies on that ordering
/// to give every 1-cell the same index as the corresponding edge.
class Graph {
 public:
  Graph() = default;

  explicit Graph(std::size_t n, std::vector<Edge> edges = {},
                 std::optional<std::vector<int>> node_labels = std::nullopt,
                 std::optional<std::vector<int>> edge_labels = std::nullopt)
      : n_(n) {
    if (edge_labels && edge_labels->size() != edges.size()) {
      throw Error(ErrorCode::InvalidGraph, "edge label count does not match edge count");
    }
    if (node_labels && node_labels->size() != n) {
      throw Error(ErrorCode::InvalidGraph, "node label count does not match node count");
    }
    std::vector<std::pair<Edge, int>> tagged;
    tagged.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      auto [u, v] = edges[i];
      if (u >= n || v >= n) {
        throw Error(ErrorCode::InvalidGraph, "edge (" + std::to_string(u) + "," + std::to_string(v) +
                                                 ") references a node outside [0," + std::to_string(n) + ")");
      }
      if (u == v) {
        throw Error(ErrorCode::InvalidGraph, "self-loop on node " + std::to_string(u));
      }
      if (u > v) std::swap(u, v);
      tagged.push_back({{u, v}, edge_labels ? (*edge_labels)[i] : 0});
    }
    std::sort(tagged.begin(), tagged.end());
    for (std::size_t i = 1; i < tagged.size(); ++i) {
      if (tagged[i].first == tagged[i - 1].first) {
        throw Error(ErrorCode::InvalidGraph, "parallel edge (" + std::to_string(tagged[i].first.first) + "," +
                                                 std::to_string(tagged[i].first.second) + ")");
      }
    }
    edges_.reserve(tagged.size());
    for (const auto& [e, label] : tagged) edges_.push_back(e);
    if (edge_labels) {
      edge_labels_.emplace();
      for (const auto& [e, label] : tagged) edge_labels_->push_back(label);
    }
    node_labels_ = std::move(node_labels);
    adjacency_.assign(n_, {});
    for (const auto& [u, v] : edges_) {
      adjacency_[u].push_back(v);
      adjacency_[v].push_back(u);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
  }

  std::size_t num_vertices() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const Vertex> neighbours(Vertex v) const { return adjacency_.at(v); }
  std::size_t degree(Vertex v) const { return adjacency_.at(v).size(); }

  bool has_edge(Vertex u, Vertex v) const {
    if (u >= n_ || v >= n_) return false;
    const auto& nbrs = adjacency_[u];
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
  }

  /// Index of edge {u,v} in edges(), or -1.
  std::ptrdiff_t edge_index(Vertex u, Vertex v) const {
    if (u > v) std::swap(u, v);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{u, v});
    if (it == edges_.end() || *it != Edge{u, v}) return -1;
    return it - edges_.begin();
  }

  const std::optional<std::vector<int>>& node_labels() const noexcept { return node_labels_; }
  const std::optional<std::vector<int>>& edge_labels() const noexcept { return edge_labels_; }

  /// Graph with vertex v renamed to perm[v]. Labels travel with their vertices.
  Graph relabelled(std::span<const Vertex> perm) const {
    if (perm.size() != n_) throw Error(ErrorCode::InvalidGraph, "permutation size mismatch");
    std::vector<Edge> edges;
    edges.reserve(edges_.size());
    for (const auto& [u, v] : edges_) edges.push_back({perm[u], perm[v]});
    std::optional<std::vector<int>> labels;
    if (node_labels_) {
      labels.emplace(n_);
      for (std::size_t v = 0; v < n_; ++v) (*labels)[perm[v]] = (*node_labels_)[v];
    }
    return Graph(n_, std::move(edges), std::move(labels), edge_labels_);
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.node_labels_ == b.node_labels_ &&
           a.edge_labels_ == b.edge_labels_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::optional<std::vector<int>> node_labels_;
  std::optional<std::vector<int>> edge_labels_;
  std::vector<std::vector<Vertex>> adjacency_;
};

/// Disjoint union; vertices of b are shifted by a.num_vertices().
inline Graph disjoint_union(const Graph& a, const Graph& b) {
  std::vector<Edge> edges = a.edges();
  const auto shift = static_cast<Vertex>(a.num_vertices());
  for (const auto& [u, v] : b.edges()) edges.push_back({u + shift, v + shift});
  std::optional<std::vector<int>> labels;
  if (a.node_labels() || b.node_labels()) {
    labels.emplace();
    for (std::size_t v = 0; v < a.num_vertices(); ++v) labels->push_back(a.node_labels() ? (*a.node_labels())[v] : 0);
    for (std::size_t v = 0; v < b.num_vertices(); ++v) labels->push_back(b.node_labels() ? (*b.node_labels())[v] : 0);
  }
  return Graph(a.num_vertices() + b.num_vertices(), std::move(edges), std::move(labels));
}

}  // namespace cellnet
