#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cellnet/error.hpp"
#include "cellnet/graph.hpp"

namespace cellnet {

struct LabelledGraph {
  Graph graph;
  int label = 0;
};

/// Skip numbers of the CSL benchmark.
inline const std::vector<int>& csl_default_skips() {
  static const std::vector<int> skips = {2, 3, 4, 5, 6, 9, 11, 12, 13, 16};
  return skips;
}

/// Circulant with cycle edges (i, i+1) and skip edges (i, i+C), indices mod N.
inline Graph circulant_skip(std::size_t n, int skip) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<Vertex>(i);
    edges.push_back({a, static_cast<Vertex>((i + 1) % n)});
    edges.push_back({a, static_cast<Vertex>((i + static_cast<std::size_t>(skip)) % n)});
  }
  return Graph(n, std::move(edges));
}

/// Uniformly random vertex relabelling.
inline Graph random_relabelling(const Graph& g, std::mt19937_64& rng) {
  std::vector<Vertex> perm(g.num_vertices());
  std::iota(perm.begin(), perm.end(), Vertex{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return g.relabelled(perm);
}

/// For each skip C (class index = position in `skips`): the circulant itself
/// and copies-1 random relabellings of it.
inline std::vector<LabelledGraph> gen_csl(std::size_t n, const std::vector<int>& skips, std::size_t copies,
                                          std::uint64_t seed) {
  if (n < 4) throw Error(ErrorCode::BadSkip, "CSL graphs need at least 4 nodes");
  for (int c : skips) {
    if (c <= 1 || 2 * static_cast<std::size_t>(c) >= n) {
      throw Error(ErrorCode::BadSkip, "skip " + std::to_string(c) + " outside (1, N/2) for N=" + std::to_string(n));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<LabelledGraph> out;
  for (std::size_t cls = 0; cls < skips.size(); ++cls) {
    const Graph base = circulant_skip(n, skips[cls]);
    for (std::size_t copy = 0; copy < copies; ++copy) {
      out.push_back({copy == 0 ? base : random_relabelling(base, rng), static_cast<int>(cls)});
    }
  }
  return out;
}

struct RingSample {
  Graph graph;
  Eigen::MatrixXd features;  ///< one row per vertex, n_classes columns
  int label = 0;
  Vertex source = 0;
  Vertex target = 0;
};

/// Rings of k nodes. The source (vertex 0) carries the one-hot label, the
/// target (vertex floor(k/2)) carries zeros and every other vertex ones.
/// Labels are exactly balanced and shuffled.
inline std::vector<RingSample> gen_ring_transfer(std::size_t k, std::size_t n_samples, int n_classes,
                                                 std::uint64_t seed) {
  if (k < 4) throw Error(ErrorCode::BadSpec, "rings need at least 4 nodes");
  if (n_classes < 2) throw Error(ErrorCode::BadSpec, "need at least 2 classes");
  if (n_samples % static_cast<std::size_t>(n_classes) != 0) {
    throw Error(ErrorCode::BadSpec, "n_samples must be divisible by n_classes for exact label balance");
  }
  std::vector<int> labels(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(n_classes));
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < k; ++i) edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>((i + 1) % k)});
  const Graph ring(k, std::move(edges));
  const auto target = static_cast<Vertex>(k / 2);

  std::vector<RingSample> out;
  out.reserve(n_samples);
  for (int label : labels) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(k), n_classes);
    h.row(0).setZero();
    h(0, label) = 1.0;
    h.row(target).setZero();
    out.push_back({ring, std::move(h), label, 0, target});
  }
  return out;
}

/// Erdos-Renyi G(n, p).
inline Graph random_gnp(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (Vertex a = 0; a < n; ++a) {
    for (Vertex b = a + 1; b < n; ++b) {
      if (coin(rng)) edges.push_back({a, b});
    }
  }
  return Graph(n, std::move(edges));
}

/// Uniform random graph with m edges, G(n, m).
inline Graph random_gnm(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::vector<Edge> all;
  for (Vertex a = 0; a < n; ++a) {
    for (Vertex b = a + 1; b < n; ++b) all.push_back({a, b});
  }
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(m, all.size()));
  return Graph(n, std::move(all));
}

}  // namespace cellnet
