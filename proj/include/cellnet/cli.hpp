#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellnet/error.hpp"
#include "cellnet/experiments.hpp"
#include "cellnet/gradcheck.hpp"
#include "cellnet/io.hpp"
#include "cellnet/lifting.hpp"
#include "cellnet/parallel.hpp"
#include "cellnet/refinement.hpp"
#include "cellnet/spectral.hpp"
#include "cellnet/train.hpp"

namespace cellnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad invocation detected after argument parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --seed, falling back to CELLNET_SEED.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (const char* env = std::getenv("CELLNET_SEED")) {
    try {
      std::size_t used = 0;
      const std::string text(env);
      const auto value = std::stoull(text, &used);
      if (used == text.size()) return value;
    } catch (const std::logic_error&) {
    }
    throw UsageError(std::string("CELLNET_SEED is not an unsigned integer: '") + env + "'");
  }
  throw UsageError("this command is stochastic: pass --seed or set CELLNET_SEED");
}

inline Json cycle_counts_json(const std::map<int, std::size_t>& counts) {
  Json out = Json::object();
  for (const auto& [size, count] : counts) out[std::to_string(size)] = count;
  return out;
}

/// Entry point shared by the executable and the tests. JSON goes to `out`,
/// diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cell complex lifting, Weisfeiler-Lehman refinement and cellular message passing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::optional<std::uint64_t> seed;
  std::size_t jobs = 0;
  std::string format_name = "auto";
  int exit_code = kExitOk;
  RunReport report;
  std::function<void()> action;

  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed (fallback: CELLNET_SEED)"); };
  auto add_jobs = [&](CLI::App* sub) {
    sub->add_option("--jobs", jobs, "Parallel width for dataset-level work (0 = all cores)");
  };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format_name, "Input format: auto, graph6, edge_list, json");
  };
  auto format = [&] { return parse_graph_format(format_name); };

  // lift
  std::string input, spec_text = "IC:6", adj_text = "b,up";
  int max_dim = 2;
  auto* lift_cmd = app.add_subcommand("lift", "Lift a graph to a cell complex");
  lift_cmd->add_option("--input", input, "Graph file or fixture name")->required();
  lift_cmd->add_option("--spec", spec_text, "Lifting spec, e.g. IC:6 or CL:3,IC:6");
  lift_cmd->add_option("--max-dim", max_dim, "Highest cell dimension (1-3)");
  add_format(lift_cmd);
  lift_cmd->callback([&] {
    action = [&] {
      const Graph g = parse_single_graph(input, format());
      const auto spec = parse_lifting_spec(spec_text, max_dim);
      const CellComplex x = lift(g, spec);
      report.params = {{"input", input}, {"spec", spec.to_string()}, {"max_dim", max_dim}};
      const auto c = x.counts();
      report.metrics = {{"cells", std::vector<std::size_t>(c.begin(), c.begin() + x.dimension() + 1)},
                        {"total_cells", x.total_cells()},
                        {"skeleton_preserving", check_skeleton_preserving(g, x)}};
      report.items.push_back(to_json(x));
    };
  });

  // cycles
  int max_k = 8;
  bool induced = false;
  auto* cycles_cmd = app.add_subcommand("cycles", "Count simple or induced cycles by length");
  cycles_cmd->add_option("--input", input, "Graph file or fixture name")->required();
  cycles_cmd->add_option("--max-k", max_k, "Largest cycle length");
  cycles_cmd->add_flag("--induced", induced, "Count chordless cycles only");
  add_format(cycles_cmd);
  cycles_cmd->callback([&] {
    action = [&] {
      if (max_k < 3) throw Error(ErrorCode::BadSpec, "--max-k must be at least 3");
      const auto graphs = parse_graph_input(input, format());
      report.params = {{"input", input}, {"max_k", max_k}, {"induced", induced}};
      for (const auto& g : graphs) {
        const auto cycles = induced ? list_induced_cycles(g, max_k) : list_simple_cycles(g, max_k);
        report.items.push_back({{"n", g.num_vertices()}, {"counts", cycle_counts_json(count_by_size(cycles, max_k))}});
      }
      if (graphs.size() == 1) report.metrics = {{"counts", report.items[0]["counts"]}};
      report.metrics["num_graphs"] = graphs.size();
    };
  });

  // wl, 3wl, cwl
  std::string a_path, b_path;
  std::size_t cap = kDefaultThreeWlCap;
  auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--a", a_path, "First graph (file or fixture)")->required();
    sub->add_option("--b", b_path, "Second graph (file or fixture)")->required();
    add_format(sub);
  };
  auto compare_pair = [&](const TestMethod& method) {
    const Graph g1 = parse_single_graph(a_path, format());
    const Graph g2 = parse_single_graph(b_path, format());
    const auto cmp = compare(g1, g2, method);
    report.params["a"] = a_path;
    report.params["b"] = b_path;
    report.params["method"] = method.name();
    report.metrics = {{"verdict", to_string(cmp.verdict)}};
    report.items.push_back(to_json(cmp, method));
  };
  auto* wl_cmd = app.add_subcommand("wl", "1-WL colour refinement on two graphs");
  add_pair(wl_cmd);
  wl_cmd->callback([&] { action = [&] { compare_pair(TestMethod::wl()); }; });

  auto* wl3_cmd = app.add_subcommand("3wl", "3-WL refinement on two graphs");
  add_pair(wl3_cmd);
  wl3_cmd->add_option("--cap", cap, "Largest vertex count accepted");
  wl3_cmd->callback([&] {
    action = [&] {
      const Graph g1 = parse_single_graph(a_path, format());
      const Graph g2 = parse_single_graph(b_path, format());
      const Graph* gs[] = {&g1, &g2};
      Comparison cmp;
      cmp.partitions = three_wl_refine_joint(gs, kDefaultMaxRounds, cap);
      cmp.verdict = cmp.partitions[0].final_histogram() == cmp.partitions[1].final_histogram()
                        ? Verdict::Inconclusive
                        : Verdict::Distinguished;
      const auto method = TestMethod::three_wl();
      report.params = {{"a", a_path}, {"b", b_path}, {"method", method.name()}, {"cap", cap}};
      report.metrics = {{"verdict", to_string(cmp.verdict)}};
      report.items.push_back(to_json(cmp, method));
    };
  });

  auto* cwl_cmd = app.add_subcommand("cwl", "Cellular WL on the lifts of two graphs");
  add_pair(cwl_cmd);
  cwl_cmd->add_option("--spec", spec_text, "Lifting spec, e.g. IC:6");
  cwl_cmd->add_option("--adj", adj_text, "Adjacencies: 'all' or a subset of b,co,down,up");
  cwl_cmd->add_option("--max-dim", max_dim, "Highest cell dimension (3 adds 4-clique cells)");
  cwl_cmd->callback([&] {
    action = [&] {
      compare_pair(TestMethod::cwl(parse_lifting_spec(spec_text, max_dim), parse_adjacency(adj_text)));
    };
  });

  // laplacian
  int lap_p = 0;
  std::optional<int> boundary_k;
  bool unsigned_matrix = false;
  auto* lap_cmd = app.add_subcommand("laplacian", "Hodge Laplacian or boundary matrix of a lift");
  lap_cmd->add_option("--input", input, "Graph file or fixture name")->required();
  lap_cmd->add_option("--spec", spec_text, "Lifting spec");
  lap_cmd->add_option("--max-dim", max_dim, "Highest cell dimension");
  lap_cmd->add_option("--p", lap_p, "Laplacian dimension");
  lap_cmd->add_option("--boundary", boundary_k, "Emit boundary matrix B_k instead");
  lap_cmd->add_flag("--unsigned", unsigned_matrix, "Unsigned boundary matrix");
  add_format(lap_cmd);
  lap_cmd->callback([&] {
    action = [&] {
      const Graph g = parse_single_graph(input, format());
      const CellComplex x = lift(g, parse_lifting_spec(spec_text, max_dim));
      report.params = {{"input", input}, {"spec", spec_text}, {"max_dim", max_dim}};
      if (boundary_k) {
        const auto b = boundary_matrix(x, *boundary_k, !unsigned_matrix);
        report.params["boundary"] = *boundary_k;
        report.params["signed"] = !unsigned_matrix;
        report.metrics = {{"rows", b.rows}, {"cols", b.cols}, {"nonzeros", b.entries.size()}};
        report.items.push_back(to_json(b));
      } else {
        const auto lap = hodge_laplacian(x, lap_p);
        report.params["p"] = lap_p;
        report.metrics = {{"rows", lap.matrix.rows()}, {"nonzeros", lap.matrix.nonZeros()}};
        report.items.push_back(to_json(lap));
      }
    };
  });

  // sr
  std::vector<std::string> families;
  int k_ring = 6;
  auto* sr_cmd = app.add_subcommand("sr", "Untrained CIN on strongly regular families");
  sr_cmd->add_option("--family", families, "graph6 family file(s) or 'sr16622'")->required();
  sr_cmd->add_option("--k", k_ring, "Largest induced cycle lifted to a 2-cell");
  add_seed(sr_cmd);
  add_jobs(sr_cmd);
  sr_cmd->callback([&] {
    action = [&] {
      const auto s = resolve_seed(seed);
      report.seed = s;
      report.params = {{"families", families}, {"k", k_ring}};
      double worst_rate = 0.0, worst_control = 0.0;
      for (const auto& fam : families) {
        const auto graphs = parse_graph_input(fam, GraphFormat::Graph6);
        const auto r = run_sr_experiment(fam, graphs, k_ring, s, jobs);
        worst_rate = std::max(worst_rate, r.failure_rate);
        worst_control = std::max(worst_control, r.max_control_distance);
        report.items.push_back(to_json(r));
      }
      report.metrics = {{"max_failure_rate", worst_rate}, {"max_control_distance", worst_control}};
      if (worst_rate > 0.0 || worst_control >= kSrEpsilon) exit_code = kExitFailure;
    };
  });

  // csl
  std::size_t csl_nodes = kCslNodes, csl_copies = kCslCopies;
  int csl_k = 8;
  auto* csl_cmd = app.add_subcommand("csl", "CWL partition of the circulant skip-link graphs");
  csl_cmd->add_option("--k", csl_k, "Largest induced cycle lifted to a 2-cell");
  csl_cmd->add_option("--nodes", csl_nodes, "Nodes per graph");
  csl_cmd->add_option("--copies", csl_copies, "Graphs per class");
  add_seed(csl_cmd);
  add_jobs(csl_cmd);
  csl_cmd->callback([&] {
    action = [&] {
      const auto s = resolve_seed(seed);
      report.seed = s;
      report.params = {{"k", csl_k}, {"nodes", csl_nodes}, {"copies", csl_copies}, {"skips", csl_default_skips()}};
      const auto r = run_csl_experiment(csl_k, csl_nodes, csl_copies, s, jobs);
      report.metrics = {{"accuracy", r.accuracy},
                        {"exact_partition", r.exact_partition},
                        {"num_histogram_classes", r.num_histogram_classes}};
      report.items.push_back(to_json(r));
      if (!r.exact_partition) exit_code = kExitFailure;
    };
  });

  // ring-transfer and train-ring
  RingTransferOptions ring;
  double threshold = 0.95;
  double target_acc = 2.0;
  std::string checkpoint;
  auto add_ring = [&](CLI::App* sub) {
    sub->add_option("--k", ring.k, "Ring size");
    sub->add_option("--epochs", ring.max_epochs, "Epoch cap");
    sub->add_option("--train-size", ring.n_train, "Training rings");
    sub->add_option("--val-size", ring.n_val, "Validation rings");
    sub->add_option("--test-size", ring.n_test, "Test rings");
    sub->add_option("--batch-size", ring.batch_size, "Mini-batch size");
    sub->add_option("--lr", ring.lr, "Initial learning rate");
    sub->add_option("--target-val-acc", target_acc, "Stop once validation accuracy reaches this value");
    sub->add_flag("--baseline", ring.baseline, "Node-level model with fewer than floor(k/2) layers");
    add_seed(sub);
    add_jobs(sub);
  };
  auto run_ring = [&](const std::string& command) {
    const auto s = resolve_seed(seed);
    report.seed = s;
    ring.train.jobs = jobs;
    ring.train.target_val_accuracy = target_acc;
    const auto run = run_ring_transfer(ring, s);
    report.params = {{"k", ring.k},
                     {"layers", run.layers},
                     {"hidden", ring.hidden},
                     {"baseline", ring.baseline},
                     {"epochs", ring.max_epochs},
                     {"train_size", ring.n_train},
                     {"val_size", ring.n_val},
                     {"test_size", ring.n_test},
                     {"batch_size", ring.batch_size},
                     {"lr", ring.lr}};
    report.metrics = {{"test_accuracy", run.metrics.test_accuracy},
                      {"val_accuracy", run.metrics.val_accuracy},
                      {"train_accuracy", run.metrics.train_accuracy},
                      {"epochs", run.metrics.history.size()},
                      {"stop_reason", run.metrics.stop_reason}};
    report.items.push_back(to_json(run.metrics));
    if (!checkpoint.empty()) {
      std::ofstream f(checkpoint);
      if (!f) throw Error(ErrorCode::ParseError, "cannot write " + checkpoint);
      f << checkpoint_json(CinModel(run.config, run.params)).dump() << "\n";
      report.params["checkpoint"] = checkpoint;
    }
    if (command == "ring-transfer") {
      report.params["threshold"] = threshold;
      const bool ok = ring.baseline ? run.metrics.test_accuracy <= 0.3 : run.metrics.test_accuracy >= threshold;
      if (!ok) exit_code = kExitFailure;
    }
  };
  auto* rt_cmd = app.add_subcommand("ring-transfer", "RingTransfer benchmark run with a pass/fail threshold");
  add_ring(rt_cmd);
  rt_cmd->add_option("--threshold", threshold, "Required test accuracy");
  rt_cmd->callback([&] { action = [&] { run_ring("ring-transfer"); }; });

  auto* tr_cmd = app.add_subcommand("train-ring", "Train a CIN on RingTransfer and optionally save it");
  add_ring(tr_cmd);
  tr_cmd->add_option("--layers", ring.layers, "Message passing layers");
  tr_cmd->add_option("--hidden", ring.hidden, "Hidden width");
  tr_cmd->add_option("--checkpoint", checkpoint, "Write the trained model to this JSON file");
  tr_cmd->callback([&] { action = [&] { run_ring("train-ring"); }; });

  // gradcheck
  double tolerance = 1e-5;
  std::size_t gc_cells = 12;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare backprop gradients with central differences");
  gc_cmd->add_option("--cells", gc_cells, "Cells in the random complex");
  gc_cmd->add_option("--tolerance", tolerance, "Largest accepted relative error");
  add_seed(gc_cmd);
  gc_cmd->callback([&] {
    action = [&] {
      const auto s = resolve_seed(seed);
      report.seed = s;
      const auto r = gradient_check(s, gc_cells);
      report.params = {{"cells", gc_cells}, {"tolerance", tolerance}, {"step", 1e-6}};
      report.metrics = {{"max_rel_error", r.max_rel_error},
                        {"num_checked", r.num_checked},
                        {"num_cells", r.num_cells},
                        {"loss", r.loss}};
      report.items.push_back({{"worst_param", r.worst.name},
                              {"row", r.worst.row},
                              {"col", r.worst.col},
                              {"analytic", r.worst.analytic},
                              {"numeric", r.worst.numeric}});
      if (!(r.max_rel_error <= tolerance)) exit_code = kExitFailure;
    };
  });

  // fixtures
  auto* fx_cmd = app.add_subcommand("fixtures", "List built-in graphs usable as input names");
  fx_cmd->callback([&] {
    action = [&] {
      for (const auto& f : fixtures::all()) {
        report.items.push_back({{"name", f.name},
                                {"n", f.graph.num_vertices()},
                                {"m", f.graph.num_edges()},
                                {"graph6", encode_graph6(f.graph)},
                                {"note", f.note}});
      }
      report.items.push_back({{"name", "sr16622"}, {"n", 16}, {"m", 48}, {"graph6", nullptr},
                              {"note", "family of both SR(16,6,2,2) graphs"}});
      report.metrics = {{"count", report.items.size()}};
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version report success; every other parse problem is a usage error.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) report.command = sub->get_name();
  try {
    action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Diverged ? kExitFailure : kExitUsage;
  }
  out << report.dump();
  return exit_code;
}

}  // namespace cellnet::cli
