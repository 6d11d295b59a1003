#include <gtest/gtest.h>

#include <random>

#include "cellnet/fixtures.hpp"
#include "cellnet/gradcheck.hpp"
#include "cellnet/io.hpp"
#include "cellnet/lifting.hpp"
#include "cellnet/network.hpp"
#include "cellnet/refinement.hpp"
#include "oracles.hpp"

using namespace cellnet;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

FeatureSet random_features(const CellComplex& x, int width, std::mt19937_64& rng) {
  FeatureSet h;
  for (int p = 0; p < kModelDims; ++p) h[p] = random_matrix(static_cast<Eigen::Index>(x.count(p)), width, rng);
  return h;
}

// Cell-by-cell evaluation of one CIN layer straight from the update equations,
// using the public adjacency queries instead of batched index arrays.
FeatureSet reference_layer(const CinModel& model, const CellComplex& x, const FeatureSet& h, int t) {
  const auto& cfg = model.config();
  const auto& prm = model.params();
  auto act = [&](Eigen::RowVectorXd v) { return v.unaryExpr([&](double a) { return activate(cfg.nonlinearity, a); }); };
  auto dense = [&](const Eigen::RowVectorXd& v, const std::string& name) -> Eigen::RowVectorXd {
    return act(v * prm.at(name + ".weight") + prm.at(name + ".bias"));
  };
  FeatureSet out;
  for (int p = 0; p <= cfg.max_dim; ++p) {
    const std::string pre = "layer" + std::to_string(t) + ".dim" + std::to_string(p) + ".";
    out[p] = Matrix(static_cast<Eigen::Index>(x.count(p)), cfg.hidden);
    for (CellIndex i = 0; i < x.count(p); ++i) {
      const Eigen::RowVectorXd own = h[p].row(i);
      Eigen::RowVectorXd xb = (1.0 + prm.at(pre + "eps_boundary")(0, 0)) * own;
      for (const CellId f : boundary_of(x, {p, i})) xb += h[p - 1].row(f.index);
      Eigen::RowVectorXd xu = (1.0 + prm.at(pre + "eps_upper")(0, 0)) * own;
      if (p < cfg.max_dim) {
        for (const auto& [nbr, wit] : upper_adjacent(x, {p, i})) {
          xu += act(h[p].row(nbr.index) * prm.at(pre + "message.neighbour.weight") +
                    h[p + 1].row(wit.index) * prm.at(pre + "message.witness.weight") + prm.at(pre + "message.bias"));
        }
      }
      const Eigen::RowVectorXd mb = dense(dense(xb, pre + "boundary.0"), pre + "boundary.1");
      const Eigen::RowVectorXd mu = dense(dense(xu, pre + "upper.0"), pre + "upper.1");
      Eigen::RowVectorXd cat(mb.size() + mu.size());
      cat << mb, mu;
      out[p].row(i) = dense(cat, pre + "update");
    }
  }
  return out;
}

double max_diff(const FeatureSet& a, const FeatureSet& b, int top = kModelDims - 1) {
  double worst = 0.0;
  for (int p = 0; p <= top; ++p) {
    if (a[p].size() == 0 && b[p].size() == 0) continue;
    EXPECT_EQ(a[p].rows(), b[p].rows());
    worst = std::max(worst, (a[p] - b[p]).cwiseAbs().maxCoeff());
  }
  return worst;
}

ModelConfig small_config(int width, Activation act, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_width = width;
  cfg.hidden = 5;
  cfg.embed = 4;
  cfg.layers = 2;
  cfg.nonlinearity = act;
  cfg.seed = seed;
  return cfg;
}

void randomise_eps(CinModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& [name, m] : model.params().tensors) {
    if (name.find(".eps_") != std::string::npos) m(0, 0) = u(rng);
  }
}

}  // namespace

TEST(Network, InitFeatures) {
  const CellComplex disk = fixtures::hexagon_disk();
  const FeatureSet h = init_features(disk, VertexInit::ConstantOne, CellInit::SumOfVertices);
  EXPECT_TRUE(h[0].isOnes());
  EXPECT_TRUE((h[1].array() == 2.0).all());
  ASSERT_EQ(h[2].rows(), 1);
  EXPECT_EQ(h[2](0, 0), 6.0);
  const FeatureSet mean = init_features(disk, VertexInit::ConstantOne, CellInit::MeanOfVertices);
  EXPECT_TRUE(mean[2].isOnes());
  const FeatureSet zero = init_features(disk, VertexInit::ConstantOne, CellInit::Zero);
  EXPECT_TRUE(zero[1].isZero());
  const FeatureSet point = init_features(build_complex(1, {}), VertexInit::ConstantOne, CellInit::SumOfVertices);
  EXPECT_EQ(point[0], Matrix::Ones(1, 1));
  EXPECT_EQ(point[1].rows(), 0);

  const std::vector<int> labels = {0, 2, 1, 0, 0, 1};
  const FeatureSet onehot = init_features(disk, VertexInit::OneHotLabels, CellInit::SumOfVertices, labels);
  EXPECT_EQ(onehot[0].cols(), 3);
  EXPECT_EQ(onehot[0](1, 2), 1.0);
  EXPECT_EQ(onehot[2], (Matrix(1, 3) << 3, 2, 1).finished());
  try {
    init_features(disk, VertexInit::NodeLabels, CellInit::Zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingLabels);
  }
  EXPECT_THROW(init_features(disk, VertexInit::OneHotLabels, CellInit::Zero, std::vector<int>{0, 1}), Error);
}

TEST(Network, ParameterLayout) {
  ModelConfig cfg = small_config(3, Activation::ReLU, 1);
  cfg.out_dim = 2;
  const CinParams p = init_params(cfg);
  EXPECT_EQ(p.at("layer0.dim0.boundary.0.weight").rows(), 3);
  EXPECT_EQ(p.at("layer1.dim0.boundary.0.weight").rows(), 5);
  EXPECT_EQ(p.at("layer0.dim1.update.weight").rows(), 10);
  EXPECT_EQ(p.at("layer0.dim1.message.witness.weight").rows(), 3);
  EXPECT_EQ(p.tensors.count("layer0.dim2.message.bias"), 0u);
  EXPECT_EQ(p.at("readout.dim2.weight").cols(), 4);
  EXPECT_EQ(p.at("classifier.weight").rows(), 4);
  EXPECT_EQ(init_params(cfg).tensors, p.tensors);
  cfg.seed = 2;
  EXPECT_NE(init_params(cfg).at("layer0.dim0.update.weight"), p.at("layer0.dim0.update.weight"));
  cfg.layers = 0;
  EXPECT_THROW(init_params(cfg), Error);
}

TEST(Network, LayerMatchesReferenceEquations) {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    const CellComplex x = lift(oracle::random_graph(7, 0.5, rng), parse_lifting_spec("IC:5"));
    const Activation act = trial % 2 ? Activation::ELU : Activation::ReLU;
    CinModel model(small_config(3, act, static_cast<std::uint64_t>(trial)));
    randomise_eps(model, rng);
    const FeatureSet h = random_features(x, 3, rng);
    EXPECT_LE(max_diff(cin_layer(model, x, h, 0), reference_layer(model, x, h, 0)), 1e-12) << trial;
  }
}

TEST(Network, IsolatedVertexUsesOnlyItsOwnFeature) {
  std::mt19937_64 rng(97);
  CinModel model(small_config(2, Activation::ELU, 3));
  randomise_eps(model, rng);
  const CellComplex point = build_complex(1, {});
  FeatureSet h;
  h[0] = random_matrix(1, 2, rng);
  const auto& prm = model.params();
  auto dense = [&](const Eigen::RowVectorXd& v, const std::string& name) -> Eigen::RowVectorXd {
    return (v * prm.at(name + ".weight") + prm.at(name + ".bias")).unaryExpr([](double a) {
      return activate(Activation::ELU, a);
    });
  };
  const Eigen::RowVectorXd own = h[0].row(0);
  const Eigen::RowVectorXd mb =
      dense(dense((1 + prm.at("layer0.dim0.eps_boundary")(0, 0)) * own, "layer0.dim0.boundary.0"), "layer0.dim0.boundary.1");
  const Eigen::RowVectorXd mu =
      dense(dense((1 + prm.at("layer0.dim0.eps_upper")(0, 0)) * own, "layer0.dim0.upper.0"), "layer0.dim0.upper.1");
  Eigen::RowVectorXd cat(10);
  cat << mb, mu;
  const Eigen::RowVectorXd expected = dense(cat, "layer0.dim0.update");
  EXPECT_LE((cin_layer(model, point, h, 0)[0].row(0) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Network, SphereEdgeReceivesOneMessagePerWitness) {
  std::mt19937_64 rng(101);
  CinModel model(small_config(2, Activation::ReLU, 4));
  const CellComplex s = fixtures::sphere();
  const FeatureSet h = random_features(s, 2, rng);
  const FeatureSet out = cin_layer(model, s, h, 0);
  EXPECT_LE(max_diff(out, reference_layer(model, s, h, 0)), 1e-12);
  // Collapsing the two witnesses into one changes the upper sum and the result.
  const CellComplex single = build_complex(2, {{{0, 1}, {0, 1}}, {{0, 1}}});
  FeatureSet h1 = h;
  h1[2] = h[2].topRows(1);
  EXPECT_GT((cin_layer(model, single, h1, 0)[1].row(0) - out[1].row(0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Network, CwlColourClassesShareFeatures) {
  std::mt19937_64 rng(103);
  std::vector<CellComplex> complexes = {fixtures::hexagon_disk(), fixtures::sphere(),
                                        lift(fixtures::rook44(), parse_lifting_spec("IC:4")),
                                        lift(fixtures::decalin(), parse_lifting_spec("CL:3,IC:6"))};
  for (int i = 0; i < 6; ++i) complexes.push_back(lift(oracle::random_graph(8, 0.4, rng), parse_lifting_spec("IC:6")));
  for (std::size_t c = 0; c < complexes.size(); ++c) {
    const CellComplex& x = complexes[c];
    ModelConfig cfg = small_config(1, c % 2 ? Activation::ELU : Activation::ReLU, c);
    cfg.layers = 3;
    CinModel model(cfg);
    randomise_eps(model, rng);
    Sample s{x, init_features(x, VertexInit::ConstantOne, CellInit::SumOfVertices), 0, 0};
    const auto layers = layer_features(model, s);

    // Initial colour = (dimension, input feature row).
    std::map<std::pair<int, std::vector<double>>, std::uint64_t> ids;
    std::vector<std::uint64_t> labels;
    for (int p = 0; p <= x.dimension(); ++p) {
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(x.count(p)); ++i) {
        const Eigen::RowVectorXd row = s.features[p].row(i);
        const auto key = std::make_pair(p, std::vector<double>(row.data(), row.data() + row.size()));
        labels.push_back(ids.emplace(key, ids.size()).first->second);
      }
    }
    CwlOptions options;
    options.initial_labels = {labels};
    const auto part = cwl_refine(x, options);
    const auto off = cell_offsets(x);
    for (std::size_t t = 0; t < layers.size(); ++t) {
      const auto& colours = part.rounds[std::min(t, part.rounds.size() - 1)];
      std::map<Colour, Eigen::RowVectorXd> rep;
      for (std::size_t e = 0; e < x.total_cells(); ++e) {
        const CellId cell = cell_at(off, e);
        const Eigen::RowVectorXd row = layers[t][cell.dim].row(cell.index);
        auto [it, inserted] = rep.emplace(colours[e], row);
        if (!inserted) {
          EXPECT_LE((it->second - row).cwiseAbs().maxCoeff(), 1e-9) << "complex " << c << " layer " << t;
        }
      }
    }
  }
}

TEST(Network, LayerIsPermutationEquivariant) {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 20; ++trial) {
    const CellComplex x = lift(oracle::random_graph(8, 0.45, rng), parse_lifting_spec("IC:6"));
    CinModel model(small_config(3, trial % 2 ? Activation::ELU : Activation::ReLU, trial));
    randomise_eps(model, rng);
    const FeatureSet h = random_features(x, 3, rng);
    std::vector<std::vector<CellIndex>> perms, identity;
    for (int p = 0; p <= x.dimension(); ++p) {
      perms.push_back(oracle::random_permutation(x.count(p), rng));
      identity.push_back(std::vector<CellIndex>(x.count(p)));
      std::iota(identity.back().begin(), identity.back().end(), 0u);
    }
    EXPECT_LE(check_equivariance(model, x, h, perms), 1e-8);
    EXPECT_EQ(check_equivariance(model, x, h, identity), 0.0);
  }
}

TEST(Network, EmbeddingIsPermutationInvariant) {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 20; ++trial) {
    const CellComplex x = lift(oracle::random_graph(9, 0.4, rng), parse_lifting_spec("IC:6"));
    ModelConfig cfg = small_config(3, Activation::ELU, trial);
    cfg.pooling = {Pooling::Sum, Pooling::Mean, Pooling::Sum};
    const CinModel model(cfg);
    std::vector<std::vector<CellIndex>> perms;
    for (int p = 0; p <= x.dimension(); ++p) perms.push_back(oracle::random_permutation(x.count(p), rng));
    const FeatureSet h = random_features(x, 3, rng);
    const Matrix a = model.embed({x, h, 0, 0});
    const Matrix b = model.embed({permute_cells(x, perms), permute_features(h, perms), 0, 0});
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Network, BatchingMatchesSeparateEvaluation) {
  std::mt19937_64 rng(113);
  ModelConfig cfg = small_config(2, Activation::ReLU, 5);
  cfg.out_dim = 3;
  const CinModel model(cfg);
  std::vector<Sample> samples;
  samples.push_back({graph_complex(Graph(3, {{0, 1}})), {}, 0, 0});  // no 2-cells
  for (int i = 0; i < 3; ++i) samples.push_back({lift(oracle::random_graph(7, 0.5, rng), parse_lifting_spec("IC:5")), {}, 0, 0});
  for (auto& s : samples) s.features = random_features(s.complex, 2, rng);
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const Matrix joint = model.predict(make_batch(ptrs, cfg.max_dim));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_LE((joint.row(static_cast<Eigen::Index>(i)) - model.embed(samples[i])).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Network, EmptyDimensionsContributeZero) {
  ModelConfig cfg = small_config(1, Activation::ReLU, 6);
  const CinModel model(cfg);
  const CellComplex x = graph_complex(fixtures::hexagon());
  Sample s{x, init_features(x, VertexInit::ConstantOne, CellInit::SumOfVertices), 0, 0};
  // Readout by hand over dims 0 and 1 only.
  const auto layers = layer_features(model, s);
  Matrix expected = Matrix::Zero(1, cfg.embed);
  for (int p = 0; p <= 1; ++p) {
    const std::string name = "readout.dim" + std::to_string(p);
    const Matrix pooled = layers.back()[p].colwise().sum();
    expected += (pooled * model.params().at(name + ".weight") + model.params().at(name + ".bias")).cwiseMax(0.0);
  }
  EXPECT_LE((model.embed(s) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, PerCellBaselineIgnoresNeighbours) {
  std::mt19937_64 rng(127);
  ModelConfig cfg = small_config(2, Activation::ReLU, 7);
  cfg.message_passing = false;
  const CinModel model(cfg);
  EXPECT_EQ(model.params().tensors.count("layer0.dim0.update.weight"), 0u);
  const CellComplex x = lift(oracle::random_graph(7, 0.5, rng), parse_lifting_spec("IC:5"));
  const FeatureSet h = random_features(x, 2, rng);
  const FeatureSet out = cin_layer(model, x, h, 0);
  for (int p = 0; p <= 2; ++p) {
    if (x.count(p) == 0) continue;
    const std::string pre = "layer0.dim" + std::to_string(p) + ".dense";
    const Matrix expected =
        ((h[p] * model.params().at(pre + ".weight")).rowwise() + Eigen::RowVectorXd(model.params().at(pre + ".bias")))
            .cwiseMax(0.0);
    EXPECT_LE((out[p] - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Network, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = gradient_check(seed, 12);
    EXPECT_EQ(r.num_cells, 12u);
    EXPECT_GT(r.num_checked, 100u);
    EXPECT_LE(r.max_rel_error, 1e-5) << "seed " << seed << " worst " << r.worst.name;
  }
}

TEST(Network, GradientsVanishThroughDeadUnitsAndAtZeroLoss) {
  std::mt19937_64 rng(131);
  ModelConfig cfg = small_config(2, Activation::ReLU, 8);
  CinModel model(cfg);
  const CellComplex x = lift(oracle::random_graph(7, 0.5, rng), parse_lifting_spec("IC:5"));
  Sample s{x, random_features(x, 2, rng), 0, 0};
  const auto batch = make_batch(s, cfg.max_dim);

  // Readout unit 0 of dim 0 is dead: its weights get no gradient.
  model.params().at("readout.dim0.bias")(0, 0) = -1e6;
  const Matrix target = Matrix::Ones(1, cfg.embed) * 100.0;
  const auto dead = backward(model, batch, Loss::MAE, &target);
  EXPECT_TRUE(dead.grad.at("readout.dim0.weight").col(0).isZero());
  EXPECT_EQ(dead.grad.at("readout.dim0.bias")(0, 0), 0.0);
  bool any_live = false;
  for (const auto& [name, g] : dead.grad.tensors) any_live |= !g.isZero();
  EXPECT_TRUE(any_live);

  // MAE with the prediction as its own target has zero loss and zero gradient.
  const Matrix exact = model.predict(batch);
  const auto zero = backward(model, batch, Loss::MAE, &exact);
  EXPECT_EQ(zero.loss, 0.0);
  for (const auto& [name, g] : zero.grad.tensors) EXPECT_TRUE(g.isZero()) << name;
  EXPECT_THROW(backward(model, batch, Loss::MAE), Error);
}

TEST(Network, CheckpointRoundTrip) {
  std::mt19937_64 rng(137);
  ModelConfig cfg = small_config(2, Activation::ELU, 9);
  cfg.out_dim = 3;
  cfg.pooling = {Pooling::Mean, Pooling::Sum, Pooling::Mean};
  CinModel model(cfg);
  randomise_eps(model, rng);
  const Json j = Json::parse(checkpoint_json(model).dump());
  const CinModel loaded = model_from_checkpoint(j);
  EXPECT_EQ(loaded.params().tensors, model.params().tensors);
  EXPECT_EQ(loaded.config().pooling, cfg.pooling);
  const CellComplex x = lift(oracle::random_graph(7, 0.5, rng), parse_lifting_spec("IC:5"));
  const Sample s{x, random_features(x, 2, rng), 0, 0};
  EXPECT_EQ(loaded.embed(s), model.embed(s));
}

TEST(Network, RejectsMismatchedInputs) {
  const CinModel model(small_config(2, Activation::ReLU, 10));
  const CellComplex x = fixtures::hexagon_disk();
  Sample s{x, init_features(x, VertexInit::ConstantOne, CellInit::SumOfVertices), 0, 0};
  EXPECT_THROW(model.embed(s), Error);  // width 1 vs 2
  s.features[1] = Matrix::Ones(3, 1);
  EXPECT_THROW(make_batch(s, 2), Error);
  EXPECT_THROW(make_batch(s, 3), Error);
  std::vector<const Sample*> none;
  EXPECT_THROW(make_batch(none, 2), Error);
  ModelConfig bad = small_config(2, Activation::ReLU, 0);
  bad.dropout = 1.0;
  EXPECT_THROW(bad.validate(), Error);
}
