#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellnet/complex.hpp"
#include "cellnet/error.hpp"
#include "cellnet/experiments.hpp"
#include "cellnet/fixtures.hpp"
#include "cellnet/graph.hpp"
#include "cellnet/graph6.hpp"
#include "cellnet/network.hpp"
#include "cellnet/refinement.hpp"
#include "cellnet/spectral.hpp"

namespace cellnet {

using Json = nlohmann::json;  // std::map objects, so keys serialise sorted

inline constexpr const char* kVersion = "cellnet 0.1.0";

// ---------------------------------------------------------------- graphs

inline Json to_json(const Graph& g) {
  Json edges = Json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
  Json out = {{"n", g.num_vertices()}, {"edges", edges}};
  if (g.node_labels()) out["node_labels"] = *g.node_labels();
  return out;
}

inline Graph graph_from_json(const Json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::ParseError, "edge must be a [u, v] pair");
      edges.push_back({e[0].get<Vertex>(), e[1].get<Vertex>()});
    }
    std::optional<std::vector<int>> labels;
    if (j.contains("node_labels")) labels = j.at("node_labels").get<std::vector<int>>();
    return Graph(n, std::move(edges), std::move(labels));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("graph json: ") + e.what());
  }
}

/// "u v" per line. '#' starts a comment line, except "# n N" (vertex count)
/// and "# label v value" (node label).
inline Graph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<Edge> edges;
  std::size_t n = 0;
  std::optional<std::size_t> declared;
  std::vector<std::pair<Vertex, int>> labels;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + what);
  };
  auto read_uint = [&](std::istringstream& s) -> std::uint64_t {
    std::string tok;
    if (!(s >> tok)) fail("missing value");
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); })) {
      fail("expected a non-negative integer, got '" + tok + "'");
    }
    return std::stoull(tok);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') {
      std::string key = first.size() > 1 ? first.substr(1) : "";
      if (key.empty() && !(ls >> key)) continue;
      if (key == "n") {
        declared = read_uint(ls);
      } else if (key == "label") {
        const auto v = static_cast<Vertex>(read_uint(ls));
        long long value = 0;
        if (!(ls >> value)) fail("label needs an integer value");
        labels.push_back({v, static_cast<int>(value)});
        n = std::max<std::size_t>(n, v + 1);
      }
      continue;
    }
    std::istringstream whole(line);
    const auto u = read_uint(whole);
    const auto v = read_uint(whole);
    std::string extra;
    if (whole >> extra) fail("unexpected token '" + extra + "'");
    edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v)});
    n = std::max<std::size_t>(n, std::max(u, v) + 1);
  }
  if (declared) {
    if (*declared < n) throw Error(ErrorCode::ParseError, "declared node count is smaller than the largest index");
    n = *declared;
  }
  std::optional<std::vector<int>> node_labels;
  if (!labels.empty()) {
    node_labels = std::vector<int>(n, 0);
    for (const auto& [v, value] : labels) (*node_labels)[v] = value;
  }
  try {
    return Graph(n, std::move(edges), std::move(node_labels));
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

enum class GraphFormat { Auto, Graph6, EdgeList, Json };

inline GraphFormat parse_graph_format(const std::string& name) {
  if (name == "auto") return GraphFormat::Auto;
  if (name == "graph6" || name == "g6") return GraphFormat::Graph6;
  if (name == "edge_list" || name == "edges") return GraphFormat::EdgeList;
  if (name == "json") return GraphFormat::Json;
  throw Error(ErrorCode::ParseError, "unknown graph format '" + name + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<Graph> parse_graph_text(const std::string& text, GraphFormat format) {
  switch (format) {
    case GraphFormat::Graph6:
      return parse_graph6(text);
    case GraphFormat::EdgeList:
      return {parse_edge_list(text)};
    case GraphFormat::Json: {
      Json j;
      try {
        j = Json::parse(text);
      } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("json: ") + e.what());
      }
      if (j.is_array()) {
        std::vector<Graph> out;
        for (const auto& item : j) out.push_back(graph_from_json(item));
        return out;
      }
      return {graph_from_json(j)};
    }
    case GraphFormat::Auto:
      break;
  }
  throw Error(ErrorCode::ParseError, "graph format must be resolved before parsing");
}

/// Fixture names ("rook44", "sr16622", ...) act as pseudo-paths; otherwise the
/// file is read and parsed, with Auto choosing by extension (.g6, .json, else
/// edge list).
inline std::vector<Graph> parse_graph_input(const std::string& path, GraphFormat format = GraphFormat::Auto) {
  if (path == "sr16622") return fixtures::sr16622();
  if (auto g = fixtures::find(path)) return {*g};
  if (format == GraphFormat::Auto) {
    auto ends_with = [&](const std::string& suffix) {
      return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    format = ends_with(".g6") || ends_with(".graph6") ? GraphFormat::Graph6
             : ends_with(".json")                     ? GraphFormat::Json
                                                      : GraphFormat::EdgeList;
  }
  return parse_graph_text(read_file(path), format);
}

/// Exactly one graph from an input.
inline Graph parse_single_graph(const std::string& path, GraphFormat format = GraphFormat::Auto) {
  auto graphs = parse_graph_input(path, format);
  if (graphs.size() != 1) {
    throw Error(ErrorCode::ParseError, path + " holds " + std::to_string(graphs.size()) + " graphs, expected 1");
  }
  return std::move(graphs.front());
}

// ---------------------------------------------------------------- complexes

/// {"dims": [S_0, S_1, ...], "boundaries": [[...1-cells...], [...2-cells...], ...]}
inline Json to_json(const CellComplex& x) {
  Json dims = Json::array();
  for (int p = 0; p <= x.dimension(); ++p) dims.push_back(x.count(p));
  Json bnd = Json::array();
  for (const auto& level : x.boundary_lists()) bnd.push_back(level);
  return {{"dims", dims}, {"boundaries", bnd}};
}

inline CellComplex complex_from_json(const Json& j) {
  try {
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    if (dims.empty()) throw Error(ErrorCode::ParseError, "complex needs at least the 0-cell count");
    auto lists = j.at("boundaries").get<BoundaryLists>();
    return build_complex(dims[0], std::move(lists));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("complex json: ") + e.what());
  }
}

// ---------------------------------------------------------------- matrices

inline Json to_json(const BoundaryMatrix& b) {
  Json triplets = Json::array();
  for (const auto& t : b.entries) triplets.push_back({t.row, t.col, t.value});
  return {{"k", b.k}, {"signed", b.is_signed}, {"rows", b.rows}, {"cols", b.cols}, {"triplets", triplets}};
}

/// Triplets in column-major order.
inline Json to_json(const Laplacian& lap) {
  Json triplets = Json::array();
  const auto& m = lap.matrix;
  for (int c = 0; c < m.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
      if (it.value() != 0.0) triplets.push_back({it.row(), it.col(), it.value()});
    }
  }
  return {{"p", lap.p}, {"rows", m.rows()}, {"cols", m.cols()}, {"triplets", triplets}};
}

// ---------------------------------------------------------------- refinement

inline Json histogram_json(const Histogram& h) {
  Json out = Json::array();
  for (const auto& [colour, count] : h) out.push_back({colour, count});
  return out;
}

inline Json to_json(const Comparison& c, const TestMethod& m) {
  Json parts = Json::array();
  for (const auto& p : c.partitions) {
    parts.push_back({{"rounds", p.rounds.size()},
                     {"stable", p.stable},
                     {"num_colours", p.final_histogram().size()},
                     {"histogram", histogram_json(p.final_histogram())}});
  }
  return {{"method", m.name()}, {"verdict", to_string(c.verdict)}, {"partitions", parts}};
}

// ---------------------------------------------------------------- experiments

inline Json to_json(const SrResult& r) {
  return {{"family", r.family},
          {"k_ring", r.k_ring},
          {"num_graphs", r.num_graphs},
          {"num_pairs", r.num_pairs},
          {"failures", r.failures},
          {"failure_rate", r.failure_rate},
          {"min_pair_distance", r.min_pair_distance},
          {"max_control_distance", r.max_control_distance},
          {"baseline_failures", r.baseline_failures},
          {"baseline_failure_rate", r.baseline_failure_rate}};
}

inline Json to_json(const CslResult& r) {
  return {{"k_ring", r.k_ring},
          {"num_nodes", r.num_nodes},
          {"num_graphs", r.num_graphs},
          {"num_true_classes", r.num_true_classes},
          {"num_histogram_classes", r.num_histogram_classes},
          {"exact_partition", r.exact_partition},
          {"accuracy", r.accuracy},
          {"classes", r.classes}};
}

inline Json to_json(const TrainMetrics& m) {
  Json history = Json::array();
  for (const auto& e : m.history) {
    history.push_back({{"epoch", e.epoch},
                       {"lr", e.lr},
                       {"train_loss", e.train_loss},
                       {"val_loss", e.val_loss},
                       {"val_accuracy", e.val_accuracy}});
  }
  return {{"train_accuracy", m.train_accuracy},
          {"val_accuracy", m.val_accuracy},
          {"test_accuracy", m.test_accuracy},
          {"epochs", m.history.size()},
          {"stop_reason", m.stop_reason},
          {"history", history}};
}

// ---------------------------------------------------------------- checkpoints

inline Json to_json(const ModelConfig& c) {
  Json pooling = Json::array();
  for (auto p : c.pooling) pooling.push_back(p == Pooling::Sum ? "sum" : "mean");
  return {{"input_width", c.input_width}, {"layers", c.layers},
          {"hidden", c.hidden},           {"embed", c.embed},
          {"out_dim", c.out_dim},         {"max_dim", c.max_dim},
          {"nonlinearity", to_string(c.nonlinearity)},
          {"pooling", pooling},           {"head", c.head == Head::Graph ? "graph" : "node"},
          {"message_passing", c.message_passing},
          {"train_eps", c.train_eps},     {"dropout", c.dropout},
          {"seed", c.seed},               {"lr", c.lr},
          {"lr_decay", c.lr_decay},       {"patience", c.patience},
          {"min_lr", c.min_lr},           {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size}};
}

inline ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  try {
    c.input_width = j.at("input_width");
    c.layers = j.at("layers");
    c.hidden = j.at("hidden");
    c.embed = j.at("embed");
    c.out_dim = j.at("out_dim");
    c.max_dim = j.at("max_dim");
    c.nonlinearity = parse_activation(j.at("nonlinearity").get<std::string>());
    const auto pooling = j.at("pooling").get<std::vector<std::string>>();
    for (std::size_t p = 0; p < c.pooling.size() && p < pooling.size(); ++p) {
      c.pooling[p] = pooling[p] == "mean" ? Pooling::Mean : Pooling::Sum;
    }
    c.head = j.at("head").get<std::string>() == "node" ? Head::Node : Head::Graph;
    c.message_passing = j.at("message_passing");
    c.train_eps = j.at("train_eps");
    c.dropout = j.at("dropout");
    c.seed = j.at("seed");
    c.lr = j.at("lr");
    c.lr_decay = j.at("lr_decay");
    c.patience = j.at("patience");
    c.min_lr = j.at("min_lr");
    c.max_epochs = j.at("max_epochs");
    c.batch_size = j.at("batch_size");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

/// {"config": {...}, "params": {name: {"rows", "cols", "data" (row-major)}}}
inline Json checkpoint_json(const CinModel& model) {
  Json params = Json::object();
  for (const auto& [name, m] : model.params().tensors) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    params[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
  }
  return {{"config", to_json(model.config())}, {"params", params}};
}

inline CinModel model_from_checkpoint(const Json& j) {
  const ModelConfig config = model_config_from_json(j.at("config"));
  CinParams params = init_params(config);
  try {
    for (auto& [name, m] : params.tensors) {
      const auto& entry = j.at("params").at(name);
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto cols = entry.at("cols").get<Eigen::Index>();
      const auto data = entry.at("data").get<std::vector<double>>();
      if (rows != m.rows() || cols != m.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor " + name + " has the wrong shape");
      }
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
  return CinModel(config, std::move(params));
}

// ---------------------------------------------------------------- reports

struct RunReport {
  std::string command;
  Json params = Json::object();
  Json metrics = Json::object();
  Json items = Json::array();
  std::optional<std::uint64_t> seed;

  Json to_json() const {
    Json out = {{"command", command},
                {"experiment", command},
                {"params", params},
                {"metrics", metrics},
                {"items", items},
                {"version", kVersion}};
    out["seed"] = seed ? Json(*seed) : Json(nullptr);
    return out;
  }

  std::string dump() const { return to_json().dump(2) + "\n"; }
};

}  // namespace cellnet
