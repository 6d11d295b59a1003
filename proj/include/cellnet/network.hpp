#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cellnet/activation.hpp"
#include "cellnet/autodiff.hpp"
#include "cellnet/complex.hpp"
#include "cellnet/error.hpp"
#include "cellnet/graph.hpp"

namespace cellnet {

inline constexpr int kModelDims = 3;  // features live on 0-, 1- and 2-cells

using Matrix = Eigen::MatrixXd;

/// Dense features per dimension: rows = number of p-cells.
using FeatureSet = std::array<Matrix, kModelDims>;

enum class VertexInit { ConstantOne, NodeLabels, OneHotLabels };
enum class CellInit { SumOfVertices, MeanOfVertices, Zero };

/// Higher cells derived from 0-cell features (sum/mean over the closure) or zero.
inline FeatureSet derive_features(const CellComplex& x, const Matrix& vertex_features, CellInit higher) {
  if (static_cast<std::size_t>(vertex_features.rows()) != x.count(0)) {
    throw Error(ErrorCode::ShapeMismatch, "vertex feature rows do not match the number of 0-cells");
  }
  FeatureSet h;
  h[0] = vertex_features;
  const auto width = vertex_features.cols();
  for (int p = 1; p < kModelDims; ++p) {
    const auto n = static_cast<Eigen::Index>(x.count(p));
    h[p] = Matrix::Zero(n, width);
    if (higher == CellInit::Zero) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto verts = x.vertices(p, static_cast<CellIndex>(i));
      for (CellIndex v : verts) h[p].row(i) += vertex_features.row(v);
      if (higher == CellInit::MeanOfVertices && !verts.empty()) h[p].row(i) /= static_cast<double>(verts.size());
    }
  }
  return h;
}

inline FeatureSet init_features(const CellComplex& x, VertexInit vertex_scheme, CellInit higher,
                                const std::optional<std::vector<int>>& labels = std::nullopt, int num_classes = 0) {
  const auto n = static_cast<Eigen::Index>(x.count(0));
  Matrix h0;
  switch (vertex_scheme) {
    case VertexInit::ConstantOne:
      h0 = Matrix::Ones(n, 1);
      break;
    case VertexInit::NodeLabels:
    case VertexInit::OneHotLabels: {
      if (!labels || static_cast<Eigen::Index>(labels->size()) != n) {
        throw Error(ErrorCode::MissingLabels, "scheme needs one label per 0-cell");
      }
      if (vertex_scheme == VertexInit::NodeLabels) {
        h0 = Matrix(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) h0(i, 0) = (*labels)[static_cast<std::size_t>(i)];
      } else {
        int classes = num_classes;
        for (int l : *labels) {
          if (l < 0) throw Error(ErrorCode::MissingLabels, "one-hot labels must be non-negative");
          classes = std::max(classes, l + 1);
        }
        h0 = Matrix::Zero(n, classes);
        for (Eigen::Index i = 0; i < n; ++i) h0(i, (*labels)[static_cast<std::size_t>(i)]) = 1.0;
      }
      break;
    }
  }
  return derive_features(x, h0, higher);
}

enum class Pooling { Sum, Mean };
enum class Head { Graph, Node };

struct ModelConfig {
  int input_width = 1;
  int layers = 3;
  int hidden = 16;
  int embed = 16;      ///< readout width
  int out_dim = 0;     ///< classifier outputs; 0 means the model returns the embedding
  int max_dim = 2;     ///< highest cell dimension carrying features (<= 2)
  Activation nonlinearity = Activation::ReLU;
  std::array<Pooling, kModelDims> pooling{Pooling::Sum, Pooling::Sum, Pooling::Sum};
  Head head = Head::Graph;
  bool message_passing = true;  ///< false gives the per-cell MLP baseline
  bool train_eps = false;
  double dropout = 0.0;
  std::uint64_t seed = 0;

  // Optimisation
  double lr = 1e-3;
  double lr_decay = 0.5;
  int patience = 5;
  double min_lr = 1e-5;
  int max_epochs = 200;
  int batch_size = 32;

  void validate() const {
    if (layers < 1) throw Error(ErrorCode::BadSpec, "model needs at least one layer");
    if (input_width < 1 || hidden < 1 || embed < 1 || out_dim < 0) {
      throw Error(ErrorCode::BadSpec, "layer widths must be positive");
    }
    if (max_dim < 0 || max_dim >= kModelDims) throw Error(ErrorCode::BadSpec, "max_dim must be 0, 1 or 2");
    if (dropout < 0.0 || dropout >= 1.0) throw Error(ErrorCode::BadSpec, "dropout must be in [0,1)");
  }
};

/// Named parameter blocks. Names follow "layer<t>.dim<p>.<block>.<tensor>",
/// "readout.dim<p>.<tensor>" and "classifier.<tensor>".
struct CinParams {
  std::map<std::string, Matrix> tensors;

  const Matrix& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(ErrorCode::ShapeMismatch, "missing parameter " + name);
    return it->second;
  }
  Matrix& at(const std::string& name) { return const_cast<Matrix&>(std::as_const(*this).at(name)); }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& [name, m] : tensors) n += static_cast<std::size_t>(m.size());
    return n;
  }
};

namespace detail {

inline std::string layer_prefix(int t, int p) {
  return "layer" + std::to_string(t) + ".dim" + std::to_string(p) + ".";
}

class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed) : rng_(seed) {}

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and bias.
  void dense(CinParams& params, const std::string& name, int in, int out, int fan_in = 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : in));
    params.tensors[name + ".weight"] = uniform(in, out, bound);
    params.tensors[name + ".bias"] = uniform(1, out, bound);
  }

  Matrix uniform(int rows, int cols, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    // Fill row by row so the draw order does not depend on storage order.
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = dist(rng_);
    }
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Fresh parameters for the configuration, deterministic in config.seed.
inline CinParams init_params(const ModelConfig& config) {
  config.validate();
  CinParams params;
  detail::ParamInit init(config.seed);
  const int h = config.hidden;
  for (int t = 0; t < config.layers; ++t) {
    const int w = t == 0 ? config.input_width : h;
    for (int p = 0; p <= config.max_dim; ++p) {
      const std::string pre = detail::layer_prefix(t, p);
      if (!config.message_passing) {
        init.dense(params, pre + "dense", w, h);
        continue;
      }
      init.dense(params, pre + "boundary.0", w, h);
      init.dense(params, pre + "boundary.1", h, h);
      init.dense(params, pre + "upper.0", w, h);
      init.dense(params, pre + "upper.1", h, h);
      if (p < config.max_dim) {
        // Message MLP over (neighbour || witness), split into two weight blocks.
        // The top dimension has no upper neighbours and needs none.
        const double bound = 1.0 / std::sqrt(2.0 * w);
        params.tensors[pre + "message.neighbour.weight"] = init.uniform(w, w, bound);
        params.tensors[pre + "message.witness.weight"] = init.uniform(w, w, bound);
        params.tensors[pre + "message.bias"] = init.uniform(1, w, bound);
      }
      init.dense(params, pre + "update", 2 * h, h);
      params.tensors[pre + "eps_boundary"] = Matrix::Zero(1, 1);
      params.tensors[pre + "eps_upper"] = Matrix::Zero(1, 1);
    }
  }
  if (config.head == Head::Graph) {
    for (int p = 0; p <= config.max_dim; ++p) {
      init.dense(params, "readout.dim" + std::to_string(p), h, config.embed);
    }
  }
  if (config.out_dim > 0) {
    init.dense(params, "classifier", config.head == Head::Graph ? config.embed : h, config.out_dim);
  }
  return params;
}

/// One training/evaluation item: a complex, its input features and targets.
struct Sample {
  CellComplex complex;
  FeatureSet features;
  int label = 0;
  CellIndex target = 0;  ///< 0-cell read out by the node head
};

/// Index structure of a batch of complexes treated as one disjoint union.
struct CellBatch {
  int max_dim = 2;
  std::size_t num_graphs = 0;
  std::array<std::size_t, kModelDims> counts{};
  std::array<ad::Index, kModelDims> boundary_src{}, boundary_dst{};
  std::array<ad::Index, kModelDims> upper_dst{}, upper_nbr{}, upper_wit{};
  std::array<ad::Index, kModelDims> graph_of{};
  std::array<std::vector<std::size_t>, kModelDims> graph_sizes{};
  ad::Index targets;
  FeatureSet features;
  std::vector<int> labels;
};

inline CellBatch make_batch(std::span<const Sample* const> samples, int max_dim) {
  CellBatch b;
  b.max_dim = max_dim;
  b.num_graphs = samples.size();
  if (samples.empty()) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  if (max_dim < 0 || max_dim >= kModelDims) throw Error(ErrorCode::BadDimension, "batch max_dim must be 0, 1 or 2");
  const auto top = static_cast<std::size_t>(max_dim);
  const auto width = samples.front()->features[0].cols();
  for (std::size_t p = 0; p <= top; ++p) b.graph_sizes[p].assign(samples.size(), 0);
  std::array<std::vector<Matrix>, kModelDims> blocks;
  std::array<std::size_t, kModelDims> off{};
  for (std::size_t g = 0; g < samples.size(); ++g) {
    const auto& s = *samples[g];
    const auto& x = s.complex;
    for (std::size_t p = 0; p <= top; ++p) {
      const std::size_t n = x.count(p);
      if (static_cast<std::size_t>(s.features[p].rows()) != n ||
          (n > 0 && s.features[p].cols() != width)) {
        throw Error(ErrorCode::ShapeMismatch, "features do not match the complex in dimension " + std::to_string(p));
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto ci = static_cast<CellIndex>(i);
        const auto dst = static_cast<std::uint32_t>(off[p] + i);
        b.graph_of[p].push_back(static_cast<std::uint32_t>(g));
        if (p > 0) {
          for (CellIndex j : x.boundary(p, ci)) {
            b.boundary_src[p].push_back(static_cast<std::uint32_t>(off[p - 1] + j));
            b.boundary_dst[p].push_back(dst);
          }
        }
        if (p < top) {
          x.for_each_upper(p, ci, [&](CellIndex t, CellIndex w) {
            b.upper_dst[p].push_back(dst);
            b.upper_nbr[p].push_back(static_cast<std::uint32_t>(off[p] + t));
            b.upper_wit[p].push_back(static_cast<std::uint32_t>(off[p + 1] + w));
          });
        }
      }
      b.graph_sizes[p][g] = n;
      if (n > 0) blocks[p].push_back(s.features[p]);
    }
    if (s.target >= x.count(0)) throw Error(ErrorCode::ShapeMismatch, "target 0-cell out of range");
    b.targets.push_back(static_cast<std::uint32_t>(off[0] + s.target));
    b.labels.push_back(s.label);
    for (std::size_t p = 0; p <= top; ++p) off[p] += x.count(p);
  }
  for (std::size_t p = 0; p <= top; ++p) {
    b.counts[p] = off[p];
    Matrix m(static_cast<Eigen::Index>(off[p]), width);
    Eigen::Index row = 0;
    for (const auto& blk : blocks[p]) {
      m.middleRows(row, blk.rows()) = blk;
      row += blk.rows();
    }
    b.features[p] = std::move(m);
  }
  for (std::size_t p = top + 1; p < kModelDims; ++p) b.features[p] = Matrix(0, width);
  return b;
}

inline CellBatch make_batch(const Sample& s, int max_dim) {
  const Sample* one[] = {&s};
  return make_batch(one, max_dim);
}

/// Per-layer, per-dimension outputs of a forward pass.
struct ForwardTrace {
  std::vector<std::array<ad::Var, kModelDims>> layers;  ///< layers[0] are the inputs
  ad::Var embedding;
  ad::Var output;  ///< logits, or the embedding when out_dim == 0
};

/// CIN: stacked cellular message passing layers using boundary and upper
/// adjacencies, then a readout. Parameters are uploaded to the tape as leaves
/// so gradients can be read back after Tape::backward.
class CinModel {
 public:
  CinModel(ModelConfig config, CinParams params) : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
  }
  explicit CinModel(const ModelConfig& config) : CinModel(config, init_params(config)) {}

  const ModelConfig& config() const noexcept { return config_; }
  const CinParams& params() const noexcept { return params_; }
  CinParams& params() noexcept { return params_; }

  /// Puts every parameter on the tape. eps tensors are constants unless trainable.
  std::map<std::string, ad::Var> upload(ad::Tape& tape) const {
    std::map<std::string, ad::Var> vars;
    for (const auto& [name, m] : params_.tensors) {
      const bool is_eps = name.find(".eps_") != std::string::npos;
      vars[name] = (is_eps && !config_.train_eps) ? tape.constant(m) : tape.leaf(m);
    }
    return vars;
  }

  /// One message passing layer t applied to features h.
  std::array<ad::Var, kModelDims> layer(ad::Tape& tape, const CellBatch& b, const std::map<std::string, ad::Var>& v,
                                        int t, const std::array<ad::Var, kModelDims>& h) const {
    const auto act = config_.nonlinearity;
    auto dense = [&](ad::Var x, const std::string& name, bool activate) {
      ad::Var y = tape.add_row(tape.matmul(x, v.at(name + ".weight")), v.at(name + ".bias"));
      return activate ? tape.activation(y, act) : y;
    };
    std::array<ad::Var, kModelDims> out;
    for (int p = 0; p <= config_.max_dim; ++p) {
      const std::string pre = detail::layer_prefix(t, p);
      const std::size_t n = b.counts[p];
      if (n == 0) {
        out[p] = tape.constant(Matrix(0, config_.hidden));
        continue;
      }
      if (!config_.message_passing) {
        out[p] = dense(h[p], pre + "dense", true);
        continue;
      }
      ad::Var xb = tape.one_plus_scale(h[p], v.at(pre + "eps_boundary"));
      if (p > 0 && !b.boundary_dst[p].empty()) {
        ad::Var faces = tape.gather_rows(h[p - 1], b.boundary_src[p]);
        xb = tape.add(xb, tape.scatter_add_rows(faces, b.boundary_dst[p], n));
      }
      ad::Var mb = dense(dense(xb, pre + "boundary.0", true), pre + "boundary.1", true);

      ad::Var xu = tape.one_plus_scale(h[p], v.at(pre + "eps_upper"));
      if (p < config_.max_dim && !b.upper_dst[p].empty()) {
        // Dense layer on (h_tau || h_delta) computed as h_tau Wn + h_delta Ww.
        ad::Var proj_n = tape.matmul(h[p], v.at(pre + "message.neighbour.weight"));
        ad::Var proj_w = tape.matmul(h[p + 1], v.at(pre + "message.witness.weight"));
        ad::Var pre_act = tape.add(tape.gather_rows(proj_n, b.upper_nbr[p]), tape.gather_rows(proj_w, b.upper_wit[p]));
        ad::Var msg = tape.activation(tape.add_row(pre_act, v.at(pre + "message.bias")), act);
        xu = tape.add(xu, tape.scatter_add_rows(msg, b.upper_dst[p], n));
      }
      ad::Var mu = dense(dense(xu, pre + "upper.0", true), pre + "upper.1", true);
      out[p] = dense(tape.concat_cols(mb, mu), pre + "update", true);
    }
    for (int p = config_.max_dim + 1; p < kModelDims; ++p) out[p] = tape.constant(Matrix(0, config_.hidden));
    return out;
  }

  /// Pooled per-dimension readout summed over dimensions; empty dimensions add zero.
  ad::Var readout(ad::Tape& tape, const CellBatch& b, const std::map<std::string, ad::Var>& v,
                  const std::array<ad::Var, kModelDims>& h) const {
    ad::Var total;
    for (int p = 0; p <= config_.max_dim; ++p) {
      if (b.counts[p] == 0) continue;
      ad::Var pooled = tape.scatter_add_rows(h[p], b.graph_of[p], b.num_graphs);
      std::vector<double> present(b.num_graphs), inv_count(b.num_graphs);
      for (std::size_t g = 0; g < b.num_graphs; ++g) {
        const auto c = b.graph_sizes[p][g];
        present[g] = c > 0 ? 1.0 : 0.0;
        inv_count[g] = c > 0 ? 1.0 / static_cast<double>(c) : 0.0;
      }
      if (config_.pooling[p] == Pooling::Mean) pooled = tape.scale_rows(pooled, inv_count);
      const std::string name = "readout.dim" + std::to_string(p);
      ad::Var r = tape.activation(
          tape.add_row(tape.matmul(pooled, v.at(name + ".weight")), v.at(name + ".bias")), config_.nonlinearity);
      r = tape.scale_rows(r, present);
      total = total.valid() ? tape.add(total, r) : r;
    }
    if (!total.valid()) total = tape.constant(Matrix::Zero(static_cast<Eigen::Index>(b.num_graphs), config_.embed));
    return total;
  }

  /// Full forward pass. With `dropout_rng` set, dropout is applied before the classifier.
  ForwardTrace forward(ad::Tape& tape, const CellBatch& b, const std::map<std::string, ad::Var>& v,
                       std::mt19937_64* dropout_rng = nullptr) const {
    if (b.features[0].cols() != config_.input_width && b.counts[0] > 0) {
      throw Error(ErrorCode::ShapeMismatch, "input width " + std::to_string(b.features[0].cols()) +
                                                " does not match the model (" + std::to_string(config_.input_width) + ")");
    }
    ForwardTrace trace;
    std::array<ad::Var, kModelDims> h;
    for (int p = 0; p < kModelDims; ++p) h[p] = tape.constant(b.features[p]);
    trace.layers.push_back(h);
    for (int t = 0; t < config_.layers; ++t) {
      h = layer(tape, b, v, t, h);
      trace.layers.push_back(h);
    }
    trace.embedding = config_.head == Head::Graph ? readout(tape, b, v, h) : tape.gather_rows(h[0], b.targets);
    ad::Var z = trace.embedding;
    if (config_.out_dim > 0) {
      if (dropout_rng && config_.dropout > 0.0) {
        std::bernoulli_distribution keep(1.0 - config_.dropout);
        Matrix m(tape.value(z).rows(), tape.value(z).cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = keep(*dropout_rng) ? 1.0 / (1.0 - config_.dropout) : 0.0;
        }
        z = tape.mask(z, std::move(m));
      }
      z = tape.add_row(tape.matmul(z, v.at("classifier.weight")), v.at("classifier.bias"));
    }
    trace.output = z;
    return trace;
  }

  /// Output (logits or embedding) for a batch, without keeping the tape.
  Matrix predict(const CellBatch& b) const {
    ad::Tape tape;
    const auto vars = upload(tape);
    return tape.value(forward(tape, b, vars).output);
  }

  Matrix embed(const Sample& s) const { return predict(make_batch(s, config_.max_dim)); }

 private:
  ModelConfig config_;
  CinParams params_;
};

/// Applies layer t of the model to one complex.
inline FeatureSet cin_layer(const CinModel& model, const CellComplex& x, const FeatureSet& h, int t) {
  if (t < 0 || t >= model.config().layers) throw Error(ErrorCode::ShapeMismatch, "layer index out of range");
  Sample s{x, h, 0, 0};
  const auto b = make_batch(s, model.config().max_dim);
  ad::Tape tape;
  const auto vars = model.upload(tape);
  std::array<ad::Var, kModelDims> in;
  for (int p = 0; p < kModelDims; ++p) in[p] = tape.constant(b.features[p]);
  const auto out = model.layer(tape, b, vars, t, in);
  FeatureSet result;
  for (int p = 0; p < kModelDims; ++p) result[p] = tape.value(out[p]);
  return result;
}

/// Per-layer features of a single complex (entry 0 is the input).
inline std::vector<FeatureSet> layer_features(const CinModel& model, const Sample& s) {
  const auto b = make_batch(s, model.config().max_dim);
  ad::Tape tape;
  const auto vars = model.upload(tape);
  const auto trace = model.forward(tape, b, vars);
  std::vector<FeatureSet> out;
  for (const auto& layer : trace.layers) {
    FeatureSet f;
    for (int p = 0; p < kModelDims; ++p) f[p] = tape.value(layer[p]);
    out.push_back(std::move(f));
  }
  return out;
}

enum class Loss { MAE, CrossEntropy };

struct LossAndGrad {
  double loss = 0.0;
  CinParams grad;  ///< same names as the parameters; zero where unused
};

/// Loss of the batch and exact gradients of every parameter.
inline LossAndGrad backward(const CinModel& model, const CellBatch& b, Loss loss, const Matrix* targets = nullptr,
                            std::mt19937_64* dropout_rng = nullptr) {
  ad::Tape tape;
  const auto vars = model.upload(tape);
  const auto trace = model.forward(tape, b, vars, dropout_rng);
  ad::Var l;
  if (loss == Loss::CrossEntropy) {
    l = tape.cross_entropy(trace.output, b.labels);
  } else {
    if (!targets) throw Error(ErrorCode::ShapeMismatch, "MAE needs regression targets");
    l = tape.mae(trace.output, *targets);
  }
  tape.backward(l);
  LossAndGrad out;
  out.loss = tape.value(l)(0, 0);
  for (const auto& [name, var] : vars) {
    const Matrix& g = tape.grad(var);
    const Matrix& p = model.params().at(name);
    out.grad.tensors[name] = g.size() == p.size() ? g : Matrix::Zero(p.rows(), p.cols());
  }
  return out;
}

/// Permutes features of each dimension the same way permute_cells renames cells.
inline FeatureSet permute_features(const FeatureSet& h, const std::vector<std::vector<CellIndex>>& perms) {
  FeatureSet out;
  for (int p = 0; p < kModelDims; ++p) {
    out[p] = Matrix(h[p].rows(), h[p].cols());
    if (h[p].rows() == 0) continue;
    for (Eigen::Index i = 0; i < h[p].rows(); ++i) out[p].row(perms.at(p)[i]) = h[p].row(i);
  }
  return out;
}

/// max |P f(X,H) - f(PX, PH)| for layer t of the model.
inline double check_equivariance(const CinModel& model, const CellComplex& x, const FeatureSet& h,
                                 const std::vector<std::vector<CellIndex>>& perms, int t = 0) {
  const FeatureSet direct = permute_features(cin_layer(model, x, h, t), perms);
  const CellComplex px = permute_cells(x, perms);
  const FeatureSet permuted = cin_layer(model, px, permute_features(h, perms), t);
  double worst = 0.0;
  for (int p = 0; p < kModelDims; ++p) {
    if (direct[p].size() == 0) continue;
    worst = std::max(worst, (direct[p] - permuted[p]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace cellnet
