#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cellnet/generators.hpp"
#include "cellnet/lifting.hpp"
#include "cellnet/network.hpp"
#include "cellnet/parallel.hpp"
#include "cellnet/refinement.hpp"
#include "cellnet/train.hpp"

namespace cellnet {

/// Distance at or below which two embeddings are deemed equal.
inline constexpr double kSrEpsilon = 0.01;

/// Untrained CIN used on strongly regular families.
inline ModelConfig sr_model_config(std::uint64_t seed) {
  ModelConfig c;
  c.input_width = 1;
  c.layers = 3;
  c.hidden = 16;
  c.embed = 16;
  c.nonlinearity = Activation::ELU;
  c.seed = seed;
  return c;
}

/// Per-cell dense layers with no message passing, then the same readout.
inline ModelConfig sr_baseline_config(std::uint64_t seed) {
  ModelConfig c = sr_model_config(seed);
  c.hidden = 256;
  c.message_passing = false;
  return c;
}

/// 0-cells carry 1, higher cells the sum over their vertices.
inline Sample sr_sample(const Graph& g, int k_ring) {
  Sample s;
  s.complex = lift(g, LiftingSpec{{{Substructure::InducedCycle, k_ring}}, 2});
  s.features = init_features(s.complex, VertexInit::ConstantOne, CellInit::SumOfVertices);
  return s;
}

struct SrResult {
  std::string family;
  int k_ring = 6;
  std::size_t num_graphs = 0;
  std::size_t num_pairs = 0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  double min_pair_distance = 0.0;
  double max_control_distance = 0.0;  ///< largest distance between a graph and a permuted copy
  std::size_t baseline_failures = 0;
  double baseline_failure_rate = 0.0;
};

namespace detail {

inline std::pair<std::size_t, double> count_failures(const std::vector<Eigen::RowVectorXd>& emb) {
  std::size_t failures = 0;
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < emb.size(); ++i) {
    for (std::size_t j = i + 1; j < emb.size(); ++j) {
      const double d = (emb[i] - emb[j]).norm();
      min_dist = std::min(min_dist, d);
      if (d <= kSrEpsilon) ++failures;
    }
  }
  return {failures, emb.size() < 2 ? 0.0 : min_dist};
}

}  // namespace detail

/// Untrained CIN embeddings of every graph of a family lifted with IC(k_ring);
/// a pair within distance kSrEpsilon counts as a failure. The control embeds a
/// randomly relabelled copy of every graph.
inline SrResult run_sr_experiment(const std::string& family, const std::vector<Graph>& graphs, int k_ring,
                                  std::uint64_t seed, std::size_t jobs = 1) {
  SrResult r;
  r.family = family;
  r.k_ring = k_ring;
  r.num_graphs = graphs.size();
  r.num_pairs = graphs.size() * (graphs.size() - (graphs.empty() ? 0 : 1)) / 2;
  const CinModel model(sr_model_config(seed));
  const CinModel baseline(sr_baseline_config(seed));

  std::vector<std::uint64_t> perm_seeds(graphs.size());
  std::mt19937_64 rng(seed);
  for (auto& s : perm_seeds) s = rng();

  struct Embeddings {
    Eigen::RowVectorXd cin, base;
    double control = 0.0;
  };
  const auto out = parallel_map(graphs.size(), jobs, [&](std::size_t i) {
    const Sample s = sr_sample(graphs[i], k_ring);
    std::mt19937_64 prng(perm_seeds[i]);
    const Sample ps = sr_sample(random_relabelling(graphs[i], prng), k_ring);
    Embeddings e;
    e.cin = model.embed(s).row(0);
    e.base = baseline.embed(s).row(0);
    e.control = (e.cin - model.embed(ps).row(0)).norm();
    return e;
  });
  std::vector<Eigen::RowVectorXd> cin, base;
  for (const auto& e : out) {
    cin.push_back(e.cin);
    base.push_back(e.base);
    r.max_control_distance = std::max(r.max_control_distance, e.control);
  }
  std::tie(r.failures, r.min_pair_distance) = detail::count_failures(cin);
  r.baseline_failures = detail::count_failures(base).first;
  if (r.num_pairs > 0) {
    r.failure_rate = static_cast<double>(r.failures) / static_cast<double>(r.num_pairs);
    r.baseline_failure_rate = static_cast<double>(r.baseline_failures) / static_cast<double>(r.num_pairs);
  }
  return r;
}

/// CSL node count used by the experiment. See csl_default_skips().
inline constexpr std::size_t kCslNodes = 41;
inline constexpr std::size_t kCslCopies = 15;

struct CslResult {
  int k_ring = 8;
  std::size_t num_nodes = kCslNodes;
  std::size_t num_graphs = 0;
  std::size_t num_true_classes = 0;
  std::size_t num_histogram_classes = 0;
  bool exact_partition = false;
  double accuracy = 0.0;  ///< fraction of graphs whose histogram class is pure and complete
  std::vector<std::vector<std::size_t>> classes;  ///< graph indices per histogram class
};

/// CWL(IC:k_ring, {B, up}) stable histograms of all CSL graphs under one
/// shared palette; graphs with equal histograms form a class.
inline CslResult run_csl_experiment(int k_ring, std::size_t num_nodes = kCslNodes, std::size_t copies = kCslCopies,
                                    std::uint64_t seed = 0, std::size_t jobs = 1) {
  const auto data = gen_csl(num_nodes, csl_default_skips(), copies, seed);
  const LiftingSpec spec{{{Substructure::InducedCycle, k_ring}}, 2};
  const auto complexes = parallel_map(data.size(), jobs, [&](std::size_t i) { return lift(data[i].graph, spec); });
  std::vector<const CellComplex*> ptrs;
  for (const auto& x : complexes) ptrs.push_back(&x);
  CwlOptions options;
  options.adjacency = AdjacencySet::sparse();
  const auto parts = cwl_refine_joint(ptrs, options);

  CslResult r;
  r.k_ring = k_ring;
  r.num_nodes = num_nodes;
  r.num_graphs = data.size();
  std::map<Histogram, std::size_t> class_of;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, inserted] = class_of.try_emplace(parts[i].final_histogram(), r.classes.size());
    if (inserted) r.classes.emplace_back();
    r.classes[it->second].push_back(i);
  }
  std::map<int, std::size_t> true_sizes;
  for (const auto& d : data) ++true_sizes[d.label];
  r.num_true_classes = true_sizes.size();
  r.num_histogram_classes = r.classes.size();
  std::size_t good = 0;
  for (const auto& cls : r.classes) {
    const int label = data[cls.front()].label;
    const bool pure = std::all_of(cls.begin(), cls.end(), [&](std::size_t i) { return data[i].label == label; });
    if (pure && cls.size() == true_sizes[label]) good += cls.size();
  }
  r.accuracy = data.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(data.size());
  r.exact_partition = good == data.size();
  return r;
}

struct RingTransferOptions {
  int k = 8;
  int n_classes = 5;
  std::size_t n_train = 5000;
  std::size_t n_val = 500;
  std::size_t n_test = 500;
  int layers = 3;
  int hidden = 64;
  int max_epochs = 200;
  int batch_size = 32;
  double lr = 1e-3;
  bool baseline = false;  ///< node-level model on the 1-skeleton
  TrainOptions train;
};

/// Layer count of the node-level baseline: one fewer than the source-target distance.
inline int ring_baseline_layers(int k) { return std::max(1, k / 2 - 1); }

inline std::vector<Sample> ring_samples(const std::vector<RingSample>& rings, int k, bool baseline) {
  std::vector<Sample> out;
  out.reserve(rings.size());
  const LiftingSpec spec{{{Substructure::InducedCycle, k}}, 2};
  const CellComplex shared = baseline ? graph_complex(rings.front().graph) : lift(rings.front().graph, spec);
  for (const auto& r : rings) {
    Sample s;
    s.complex = shared;  // every ring has the same structure
    s.features = derive_features(s.complex, r.features, CellInit::Zero);
    s.label = r.label;
    s.target = r.target;
    out.push_back(std::move(s));
  }
  return out;
}

inline ModelConfig ring_model_config(const RingTransferOptions& o, std::uint64_t seed) {
  ModelConfig c;
  c.input_width = o.n_classes;
  c.layers = o.baseline ? ring_baseline_layers(o.k) : o.layers;
  c.hidden = o.hidden;
  c.out_dim = o.n_classes;
  c.max_dim = o.baseline ? 1 : 2;
  c.head = Head::Node;
  c.nonlinearity = Activation::ReLU;
  c.seed = seed;
  c.lr = o.lr;
  c.max_epochs = o.max_epochs;
  c.batch_size = o.batch_size;
  return c;
}

struct RingTransferRun {
  std::uint64_t seed = 0;
  bool baseline = false;
  int layers = 0;
  TrainMetrics metrics;
  ModelConfig config;
  CinParams params;  ///< trained parameters
};

/// Generates train/val/test splits from seed-derived streams and trains one model.
inline RingTransferRun run_ring_transfer(const RingTransferOptions& o, std::uint64_t seed) {
  if (o.k < 4) throw Error(ErrorCode::BadSpec, "RingTransfer needs k >= 4");
  Dataset data;
  const auto k = static_cast<std::size_t>(o.k);
  data.train = ring_samples(gen_ring_transfer(k, o.n_train, o.n_classes, seed * 3 + 0), o.k, o.baseline);
  if (o.n_val > 0) data.val = ring_samples(gen_ring_transfer(k, o.n_val, o.n_classes, seed * 3 + 1), o.k, o.baseline);
  if (o.n_test > 0) {
    data.test = ring_samples(gen_ring_transfer(k, o.n_test, o.n_classes, seed * 3 + 2), o.k, o.baseline);
  }
  CinModel model(ring_model_config(o, seed));
  RingTransferRun run;
  run.seed = seed;
  run.baseline = o.baseline;
  run.layers = model.config().layers;
  run.metrics = train(model, data, o.train);
  run.config = model.config();
  run.params = model.params();
  return run;
}

}  // namespace cellnet
