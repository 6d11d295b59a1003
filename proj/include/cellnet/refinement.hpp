#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cellnet/complex.hpp"
#include "cellnet/error.hpp"
#include "cellnet/graph.hpp"
#include "cellnet/lifting.hpp"

namespace cellnet {

using Colour = std::uint32_t;
using Histogram = std::map<Colour, std::size_t>;

/// Colour refinement trace for one input. Colours are dense per round and
/// shared across every input refined together, so histograms of different
/// inputs are directly comparable round by round.
struct ColourPartition {
  std::vector<std::vector<Colour>> rounds;
  std::vector<Histogram> histograms;
  std::size_t converged_at = 0;  ///< first round whose partition the next round repeats
  bool stable = false;           ///< false when max_rounds cut refinement short

  const std::vector<Colour>& final_colours() const { return rounds.back(); }
  const Histogram& final_histogram() const { return histograms.back(); }
  std::size_t num_colours(std::size_t round) const { return histograms.at(round).size(); }
};

/// Which neighbourhoods CWL hashes.
struct AdjacencySet {
  bool boundary = true;
  bool coboundary = false;
  bool lower = false;
  bool upper = true;

  static AdjacencySet sparse() { return {true, false, false, true}; }
  static AdjacencySet all() { return {true, true, true, true}; }

  void validate() const {
    if (!boundary && !coboundary && !lower && !upper) {
      throw Error(ErrorCode::BadSpec, "adjacency set must enable at least one neighbourhood");
    }
  }

  std::string to_string() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
      if (!on) return;
      if (!out.empty()) out += ',';
      out += name;
    };
    add(boundary, "b");
    add(coboundary, "co");
    add(lower, "down");
    add(upper, "up");
    return out;
  }
};

/// Parses "all" or a comma list of b, co, down, up.
inline AdjacencySet parse_adjacency(const std::string& text) {
  if (text == "all") return AdjacencySet::all();
  AdjacencySet adj{false, false, false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    if (item == "b") {
      adj.boundary = true;
    } else if (item == "co") {
      adj.coboundary = true;
    } else if (item == "down") {
      adj.lower = true;
    } else if (item == "up") {
      adj.upper = true;
    } else {
      throw Error(ErrorCode::BadSpec, "unknown adjacency '" + item + "'");
    }
    start = end + 1;
  }
  adj.validate();
  return adj;
}

namespace detail {

using Signature = std::vector<std::uint64_t>;

struct SignatureHash {
  std::size_t operator()(const Signature& s) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.size();
    for (std::uint64_t x : s) {
      x += 0x9e3779b97f4a7c15ULL;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      x ^= x >> 31;
      h = (h ^ x) * 0x100000001b3ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

// Maps signatures to dense colours in order of first appearance. Buckets are
// chosen by hash and entries compared in full, so distinct signatures never
// share a colour.
class Palette {
 public:
  Colour intern(const Signature& s) {
    auto [it, inserted] = table_.try_emplace(s, static_cast<Colour>(table_.size()));
    return it->second;
  }
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::unordered_map<Signature, Colour, SignatureHash> table_;
};

using InitFn = std::function<void(std::size_t input, std::size_t element, Signature& out)>;
using StepFn = std::function<void(std::size_t input, std::size_t element, std::span<const Colour> colours,
                                  Signature& out)>;

// Lockstep refinement of several inputs over one shared palette per round.
// For inputs without cross links this is refinement of their disjoint union.
inline std::vector<ColourPartition> refine_jointly(std::span<const std::size_t> sizes, const InitFn& init,
                                                   const StepFn& step, std::size_t max_rounds) {
  const std::size_t m = sizes.size();
  std::vector<ColourPartition> parts(m);
  auto run_round = [&](auto&& fill) {
    Palette palette;
    Signature sig;
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<Colour> colours(sizes[k]);
      for (std::size_t e = 0; e < sizes[k]; ++e) {
        sig.clear();
        fill(k, e, sig);
        colours[e] = palette.intern(sig);
      }
      Histogram hist;
      for (Colour c : colours) ++hist[c];
      parts[k].rounds.push_back(std::move(colours));
      parts[k].histograms.push_back(std::move(hist));
    }
    return palette.size();
  };

  std::size_t classes = run_round([&](std::size_t k, std::size_t e, Signature& s) { init(k, e, s); });
  for (std::size_t t = 0;; ++t) {
    if (t >= max_rounds) {
      for (auto& p : parts) p.converged_at = t;
      break;
    }
    const std::size_t next = run_round([&](std::size_t k, std::size_t e, Signature& s) {
      const auto& prev = parts[k].rounds[t];
      s.push_back(prev[e]);
      step(k, e, prev, s);
    });
    if (next == classes) {
      // Same number of classes after a refining step: the partition repeated.
      for (auto& p : parts) {
        p.rounds.pop_back();
        p.histograms.pop_back();
        p.converged_at = t;
        p.stable = true;
      }
      break;
    }
    classes = next;
  }
  return parts;
}

inline void append_sorted(Signature& out, std::vector<std::uint64_t>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  out.push_back(scratch.size());
  out.insert(out.end(), scratch.begin(), scratch.end());
  scratch.clear();
}

inline std::uint64_t pack_pair(Colour a, Colour b) { return (std::uint64_t{a} << 32) | b; }

}  // namespace detail

inline constexpr std::size_t kDefaultMaxRounds = 1000;

/// 1-WL on several graphs with a shared palette. Initial colour is the node
/// label when present, otherwise uniform; edge labels, when present, are
/// hashed together with the neighbour colour.
inline std::vector<ColourPartition> wl_refine_joint(std::span<const Graph* const> graphs,
                                                    std::size_t max_rounds = kDefaultMaxRounds) {
  std::vector<std::size_t> sizes;
  for (const auto* g : graphs) sizes.push_back(g->num_vertices());
  std::vector<std::uint64_t> scratch;
  return detail::refine_jointly(
      sizes,
      [&](std::size_t k, std::size_t v, detail::Signature& s) {
        const auto& labels = graphs[k]->node_labels();
        s.push_back(labels ? static_cast<std::uint64_t>(static_cast<std::int64_t>((*labels)[v])) : 0);
      },
      [&](std::size_t k, std::size_t v, std::span<const Colour> c, detail::Signature& s) {
        const Graph& g = *graphs[k];
        const auto& edge_labels = g.edge_labels();
        for (Vertex u : g.neighbours(static_cast<Vertex>(v))) {
          const Colour label =
              edge_labels ? static_cast<Colour>((*edge_labels)[g.edge_index(static_cast<Vertex>(v), u)]) : 0;
          scratch.push_back(detail::pack_pair(c[u], label));
        }
        detail::append_sorted(s, scratch);
      },
      max_rounds);
}

inline ColourPartition wl_refine(const Graph& g, std::size_t max_rounds = kDefaultMaxRounds) {
  const Graph* one[] = {&g};
  return wl_refine_joint(one, max_rounds).front();
}

/// Global position of cell (dim, index): cells are ordered by dimension, then index.
inline std::array<std::size_t, kMaxCellDim + 2> cell_offsets(const CellComplex& x) {
  std::array<std::size_t, kMaxCellDim + 2> off{};
  for (int p = 0; p <= kMaxCellDim; ++p) off[p + 1] = off[p] + x.count(p);
  return off;
}

inline CellId cell_at(const std::array<std::size_t, kMaxCellDim + 2>& off, std::size_t pos) {
  int p = 0;
  while (pos >= off[p + 1]) ++p;
  return {p, static_cast<CellIndex>(pos - off[p])};
}

struct CwlOptions {
  AdjacencySet adjacency = AdjacencySet::sparse();
  std::size_t max_rounds = kDefaultMaxRounds;
  /// Optional initial labels, one vector per input in global cell order. Empty
  /// means every cell starts with the same colour.
  std::vector<std::vector<std::uint64_t>> initial_labels;
};

/// Cellular WL on several complexes with a shared palette. Upper and lower
/// neighbourhoods contribute (neighbour colour, witness colour) pairs, one per
/// witness.
inline std::vector<ColourPartition> cwl_refine_joint(std::span<const CellComplex* const> complexes,
                                                     const CwlOptions& options = {}) {
  options.adjacency.validate();
  const auto adj = options.adjacency;
  std::vector<std::size_t> sizes;
  std::vector<std::array<std::size_t, kMaxCellDim + 2>> offsets;
  for (const auto* x : complexes) {
    offsets.push_back(cell_offsets(*x));
    sizes.push_back(x->total_cells());
  }
  if (!options.initial_labels.empty()) {
    if (options.initial_labels.size() != complexes.size()) {
      throw Error(ErrorCode::ShapeMismatch, "need one initial label vector per complex");
    }
    for (std::size_t k = 0; k < complexes.size(); ++k) {
      if (options.initial_labels[k].size() != sizes[k]) {
        throw Error(ErrorCode::ShapeMismatch, "initial label count does not match cell count");
      }
    }
  }
  std::vector<std::uint64_t> scratch;
  return detail::refine_jointly(
      sizes,
      [&](std::size_t k, std::size_t e, detail::Signature& s) {
        s.push_back(options.initial_labels.empty() ? 0 : options.initial_labels[k][e]);
      },
      [&](std::size_t k, std::size_t e, std::span<const Colour> c, detail::Signature& s) {
        const CellComplex& x = *complexes[k];
        const auto& off = offsets[k];
        const CellId cell = cell_at(off, e);
        const int p = cell.dim;
        if (adj.boundary) {
          if (p > 0) {
            for (CellIndex j : x.boundary(p, cell.index)) scratch.push_back(c[off[p - 1] + j]);
          }
          detail::append_sorted(s, scratch);
        }
        if (adj.coboundary) {
          for (CellIndex j : x.coboundary(p, cell.index)) scratch.push_back(c[off[p + 1] + j]);
          detail::append_sorted(s, scratch);
        }
        if (adj.lower) {
          x.for_each_lower(p, cell.index, [&](CellIndex t, CellIndex w) {
            scratch.push_back(detail::pack_pair(c[off[p] + t], c[off[p - 1] + w]));
          });
          detail::append_sorted(s, scratch);
        }
        if (adj.upper) {
          x.for_each_upper(p, cell.index, [&](CellIndex t, CellIndex w) {
            scratch.push_back(detail::pack_pair(c[off[p] + t], c[off[p + 1] + w]));
          });
          detail::append_sorted(s, scratch);
        }
      },
      options.max_rounds);
}

inline ColourPartition cwl_refine(const CellComplex& x, const CwlOptions& options = {}) {
  const CellComplex* one[] = {&x};
  return cwl_refine_joint(one, options).front();
}

inline ColourPartition cwl_refine(const CellComplex& x, AdjacencySet adj,
                                  std::size_t max_rounds = kDefaultMaxRounds) {
  CwlOptions options;
  options.adjacency = adj;
  options.max_rounds = max_rounds;
  return cwl_refine(x, options);
}

inline constexpr std::size_t kDefaultThreeWlCap = 64;

/// Oblivious 3-WL over ordered vertex triples (equivalent in power to 2-FWL), graphs refined in lockstep with
/// a shared palette (substituted vertices range over the triple's own graph).
/// Element (a,b,c) of a graph with n vertices sits at a*n*n + b*n + c.
inline std::vector<ColourPartition> three_wl_refine_joint(std::span<const Graph* const> graphs,
                                                          std::size_t max_rounds = kDefaultMaxRounds,
                                                          std::size_t cap = kDefaultThreeWlCap) {
  std::vector<std::size_t> sizes;
  for (const auto* g : graphs) {
    const std::size_t n = g->num_vertices();
    if (n > cap) {
      throw Error(ErrorCode::TooLarge,
                  "3-WL on " + std::to_string(n) + " vertices exceeds the cap of " + std::to_string(cap));
    }
    sizes.push_back(n * n * n);
  }
  std::vector<std::uint64_t> scratch;
  return detail::refine_jointly(
      sizes,
      [&](std::size_t k, std::size_t e, detail::Signature& s) {
        const Graph& g = *graphs[k];
        const std::size_t n = g.num_vertices();
        const auto a = static_cast<Vertex>(e / (n * n));
        const auto b = static_cast<Vertex>((e / n) % n);
        const auto c = static_cast<Vertex>(e % n);
        std::uint64_t pattern = (a == b) | (a == c) << 1 | (b == c) << 2 | g.has_edge(a, b) << 3 |
                                g.has_edge(a, c) << 4 | g.has_edge(b, c) << 5;
        s.push_back(pattern);
        if (const auto& labels = g.node_labels()) {
          for (Vertex v : {a, b, c}) s.push_back(static_cast<std::uint64_t>(static_cast<std::int64_t>((*labels)[v])));
        }
      },
      [&](std::size_t k, std::size_t e, std::span<const Colour> col, detail::Signature& s) {
        const std::size_t n = graphs[k]->num_vertices();
        const std::size_t a = e / (n * n);
        const std::size_t b = (e / n) % n;
        const std::size_t c = e % n;
        // One multiset per substituted position; pairing the three colours per
        // w would give the stronger folklore variant instead.
        const std::size_t stride[3] = {n * n, n, 1};
        const std::size_t pos[3] = {a, b, c};
        for (int i = 0; i < 3; ++i) {
          const std::size_t rest = e - pos[i] * stride[i];
          for (std::size_t w = 0; w < n; ++w) scratch.push_back(col[rest + w * stride[i]]);
          detail::append_sorted(s, scratch);
        }
      },
      max_rounds);
}

inline ColourPartition three_wl_refine(const Graph& g, std::size_t max_rounds = kDefaultMaxRounds,
                                       std::size_t cap = kDefaultThreeWlCap) {
  const Graph* one[] = {&g};
  return three_wl_refine_joint(one, max_rounds, cap).front();
}

enum class Verdict { Distinguished, Inconclusive };

inline const char* to_string(Verdict v) { return v == Verdict::Distinguished ? "Distinguished" : "Inconclusive"; }

enum class TestKind { WL, ThreeWL, CWL, SWL };

struct TestMethod {
  TestKind kind = TestKind::WL;
  LiftingSpec spec;  ///< CWL only
  AdjacencySet adjacency = AdjacencySet::sparse();
  int swl_k = 3;  ///< SWL only: largest clique size
  std::size_t max_rounds = kDefaultMaxRounds;

  static TestMethod wl() { return {}; }
  static TestMethod three_wl() {
    TestMethod m;
    m.kind = TestKind::ThreeWL;
    return m;
  }
  static TestMethod cwl(LiftingSpec spec, AdjacencySet adj = AdjacencySet::sparse()) {
    TestMethod m;
    m.kind = TestKind::CWL;
    m.spec = std::move(spec);
    m.adjacency = adj;
    return m;
  }
  static TestMethod swl(int k, AdjacencySet adj = AdjacencySet::sparse()) {
    TestMethod m;
    m.kind = TestKind::SWL;
    m.swl_k = k;
    m.adjacency = adj;
    return m;
  }

  /// Lifting used by CWL and SWL. SWL is CWL on the clique complex.
  LiftingSpec lifting() const {
    if (kind == TestKind::SWL) return LiftingSpec{{{Substructure::Clique, swl_k}}, 3};
    return spec;
  }

  std::string name() const {
    switch (kind) {
      case TestKind::WL: return "WL";
      case TestKind::ThreeWL: return "3WL";
      case TestKind::CWL: return "CWL(" + spec.to_string() + ";" + adjacency.to_string() + ")";
      case TestKind::SWL: return "SWL(CL:" + std::to_string(swl_k) + ")";
    }
    return "?";
  }
};

struct Comparison {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<ColourPartition> partitions;  ///< one per input
};

/// Refines both inputs together and compares their final histograms.
inline Comparison compare(const Graph& g1, const Graph& g2, const TestMethod& method) {
  Comparison out;
  const Graph* graphs[] = {&g1, &g2};
  switch (method.kind) {
    case TestKind::WL:
      out.partitions = wl_refine_joint(graphs, method.max_rounds);
      break;
    case TestKind::ThreeWL:
      out.partitions = three_wl_refine_joint(graphs, method.max_rounds);
      break;
    case TestKind::CWL:
    case TestKind::SWL: {
      const auto spec = method.lifting();
      const CellComplex x1 = lift(g1, spec);
      const CellComplex x2 = lift(g2, spec);
      const CellComplex* xs[] = {&x1, &x2};
      CwlOptions options;
      options.adjacency = method.adjacency;
      options.max_rounds = method.max_rounds;
      out.partitions = cwl_refine_joint(xs, options);
      break;
    }
  }
  out.verdict = out.partitions[0].final_histogram() == out.partitions[1].final_histogram()
                    ? Verdict::Inconclusive
                    : Verdict::Distinguished;
  return out;
}

inline Verdict distinguish(const Graph& g1, const Graph& g2, const TestMethod& method) {
  return compare(g1, g2, method).verdict;
}

/// Complex-level comparison under CWL.
inline Verdict distinguish_complexes(const CellComplex& x1, const CellComplex& x2, const CwlOptions& options = {}) {
  const CellComplex* xs[] = {&x1, &x2};
  auto parts = cwl_refine_joint(xs, options);
  return parts[0].final_histogram() == parts[1].final_histogram() ? Verdict::Inconclusive
                                                                  : Verdict::Distinguished;
}

}  // namespace cellnet
