#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "cellnet/fixtures.hpp"
#include "cellnet/lifting.hpp"
#include "cellnet/network.hpp"
#include "cellnet/spectral.hpp"
#include "oracles.hpp"

using namespace cellnet;

namespace {

Eigen::MatrixXd dense_laplacian(const CellComplex& x, int p) {
  const auto n = static_cast<Eigen::Index>(x.count(p));
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  if (p >= 1) {
    const Eigen::MatrixXd b = boundary_matrix(x, p, true).dense().cast<double>();
    l += b.transpose() * b;
  }
  if (p + 1 <= x.dimension()) {
    const Eigen::MatrixXd b = boundary_matrix(x, p + 1, true).dense().cast<double>();
    l += b * b.transpose();
  }
  return l;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

TEST(Spectral, SphereBoundaryMatrices) {
  const CellComplex s = fixtures::sphere();
  Eigen::MatrixXi b1(2, 2), b2(2, 2);
  b1 << -1, -1, 1, 1;
  b2 << 1, 1, -1, -1;
  EXPECT_EQ(boundary_matrix(s, 1, true).dense(), b1);
  EXPECT_EQ(boundary_matrix(s, 2, true).dense(), b2);
  EXPECT_TRUE((b1 * b2).isZero());
  EXPECT_EQ(boundary_matrix(s, 2, false).dense(), Eigen::MatrixXi::Ones(2, 2));
  // L_1 = B1^T B1 + B2 B2^T = [[2,2],[2,2]] + [[2,-2],[-2,2]].
  Eigen::MatrixXd l1(2, 2);
  l1 << 4, 0, 0, 4;
  EXPECT_TRUE(Eigen::MatrixXd(hodge_laplacian(s, 1).matrix).isApprox(l1));
}

TEST(Spectral, HexagonDiskTraversal) {
  const CellComplex x = fixtures::hexagon_disk();
  // Edge rows (0,1),(0,5),(1,2),(2,3),(3,4),(4,5); traversal 0->1->...->5->0
  // runs against the intrinsic direction only on (0,5).
  Eigen::VectorXi expected(6);
  expected << 1, -1, 1, 1, 1, 1;
  EXPECT_EQ(Eigen::VectorXi(boundary_matrix(x, 2, true).dense().col(0)), expected);
  EXPECT_TRUE((boundary_matrix(x, 1, true).dense() * boundary_matrix(x, 2, true).dense()).isZero());
}

TEST(Spectral, TetrahedronSigns) {
  const CellComplex x = lift(Graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}), parse_lifting_spec("CL:4", 3));
  const auto b3 = boundary_matrix(x, 3, true);
  ASSERT_EQ(b3.entries.size(), 4u);
  // Faces in lexicographic order: {0,1,2} (opposite v3), {0,1,3}, {0,2,3}, {1,2,3} (opposite v0).
  std::vector<int> signs;
  for (const auto& t : b3.entries) signs.push_back(t.value);
  EXPECT_EQ(signs, (std::vector<int>{-1, 1, -1, 1}));
  EXPECT_TRUE((boundary_matrix(x, 2, true).dense() * b3.dense()).isZero());
}

TEST(Spectral, CompositeZeroOnRandomLifts) {
  std::mt19937_64 rng(61);
  const char* specs[] = {"IC:6", "CL:4", "C:5", "CL:3,IC:7"};
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Graph g = oracle::random_graph(6 + trial % 5, 0.45, rng);
    const CellComplex x = lift(g, parse_lifting_spec(specs[trial % 4], trial % 4 == 1 ? 3 : 2));
    for (int k = 1; k < x.dimension(); ++k) {
      const auto b = boundary_matrix(x, k, true);
      const auto c = boundary_matrix(x, k + 1, true);
      if (b.cols == 0 || c.cols == 0) continue;
      EXPECT_TRUE((b.dense() * c.dense()).isZero()) << trial << " k=" << k;
      ++checked;
      // Signed and unsigned share their support.
      EXPECT_EQ(c.dense().cwiseAbs(), boundary_matrix(x, k + 1, false).dense());
    }
  }
  EXPECT_GT(checked, 150);
  for (const auto& f : fixtures::all()) {
    const CellComplex x = lift(f.graph, parse_lifting_spec("CL:4,IC:6", 3));
    for (int k = 1; k < x.dimension(); ++k) {
      EXPECT_TRUE((boundary_matrix(x, k, true).dense() * boundary_matrix(x, k + 1, true).dense()).isZero()) << f.name;
    }
  }
}

TEST(Spectral, GraphLaplacianIsHodgeZero) {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = oracle::random_graph(9, 0.4, rng);
    const Eigen::MatrixXd l0 = hodge_laplacian(lift(g, parse_lifting_spec("IC:6")), 0).matrix;
    EXPECT_TRUE(l0.isApprox(oracle::graph_laplacian(g)) || oracle::graph_laplacian(g).isZero());
  }
  const Eigen::MatrixXd hex = hodge_laplacian(graph_complex(fixtures::hexagon()), 0).matrix;
  Eigen::MatrixXd expected = 2 * Eigen::MatrixXd::Identity(6, 6);
  for (int i = 0; i < 6; ++i) expected(i, (i + 1) % 6) = expected((i + 1) % 6, i) = -1;
  EXPECT_TRUE(hex.isApprox(expected));
  const auto edge = hodge_laplacian(graph_complex(Graph(2, {{0, 1}})), 1);
  EXPECT_DOUBLE_EQ(Eigen::MatrixXd(edge.matrix)(0, 0), 2.0);
  EXPECT_TRUE(edge.uses[0]);
  EXPECT_FALSE(edge.uses[1]);
}

TEST(Spectral, LaplaciansSymmetricPsd) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 40; ++trial) {
    const CellComplex x = lift(oracle::random_graph(9, 0.45, rng), parse_lifting_spec("CL:4,IC:6", 3));
    if (x.total_cells() > 200) continue;
    for (int p = 0; p <= x.dimension(); ++p) {
      if (x.count(p) == 0) continue;
      const Eigen::MatrixXd l = hodge_laplacian(x, p).matrix;
      EXPECT_TRUE(l.isApprox(l.transpose()));
      EXPECT_TRUE(l.isApprox(dense_laplacian(x, p)) || l.isZero());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(Spectral, PolyConvMatchesDenseOracle) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = oracle::random_graph(8, 0.5, rng);
    const CellComplex x = lift(g, parse_lifting_spec("IC:5"));
    for (int p = 0; p <= 2; ++p) {
      if (x.count(p) == 0) continue;
      const Eigen::MatrixXd h = random_matrix(static_cast<Eigen::Index>(x.count(p)), 3, rng);
      const std::vector<Eigen::MatrixXd> w = {random_matrix(3, 2, rng), random_matrix(3, 2, rng),
                                              random_matrix(3, 2, rng)};
      const Eigen::MatrixXd lap = p == 0 ? oracle::graph_laplacian(g) : dense_laplacian(x, p);
      const Eigen::MatrixXd ref = oracle::dense_poly(lap, h, w);
      EXPECT_LE((poly_conv(x, p, h, w) - ref).cwiseAbs().maxCoeff(), 1e-10);
      const Eigen::MatrixXd relu = poly_conv(x, p, h, w, Activation::ReLU);
      EXPECT_LE((relu - ref.cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Spectral, PolyConvLowDegreeCases) {
  std::mt19937_64 rng(79);
  const CellComplex hex = graph_complex(fixtures::hexagon());
  const Eigen::MatrixXd h = random_matrix(6, 2, rng);
  const Eigen::MatrixXd w0 = random_matrix(2, 2, rng);
  EXPECT_LE((poly_conv(hex, 0, h, {w0}) - h * w0).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd diffusion =
      poly_conv(hex, 0, h, {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2)});
  EXPECT_LE((diffusion - oracle::graph_laplacian(fixtures::hexagon()) * h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectral, ErrorsOnBadShapesAndDimensions) {
  const CellComplex hex = fixtures::hexagon_disk();
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ParseError;
  };
  EXPECT_EQ(code_of([&] { boundary_matrix(hex, 0, true); }), ErrorCode::BadDimension);
  EXPECT_EQ(code_of([&] { boundary_matrix(hex, 3, true); }), ErrorCode::BadDimension);
  EXPECT_EQ(code_of([&] { hodge_laplacian(hex, 3); }), ErrorCode::BadDimension);
  const Eigen::MatrixXd h = Eigen::MatrixXd::Ones(5, 2);
  EXPECT_EQ(code_of([&] { poly_conv(hex, 0, h, {Eigen::MatrixXd::Ones(2, 1)}); }), ErrorCode::ShapeMismatch);
  const Eigen::MatrixXd ok = Eigen::MatrixXd::Ones(6, 2);
  EXPECT_EQ(code_of([&] { poly_conv(hex, 0, ok, {}); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { poly_conv(hex, 0, ok, {Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(3, 1)}); }),
            ErrorCode::ShapeMismatch);
}

// A CIN layer with identity activations, eps = 0 and hand-set weights is the
// degree-one filter H W0 + L_0 H W1 on 0-cells. Edge features are the sums of
// their endpoints, so the message (-2 h_tau + h_delta) W equals (h_sigma - h_tau) W.
TEST(Spectral, LinearCinLayerReproducesDiffusion) {
  std::mt19937_64 rng(83);
  const int w = 3;
  ModelConfig cfg;
  cfg.input_width = w;
  cfg.hidden = w;
  cfg.layers = 1;
  cfg.max_dim = 1;
  cfg.nonlinearity = Activation::Identity;
  CinModel model(cfg);
  auto& params = model.params();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(w, w);
  const Eigen::MatrixXd w0 = random_matrix(w, w, rng);
  const Eigen::MatrixXd w1 = random_matrix(w, w, rng);
  for (int p = 0; p <= 1; ++p) {
    const std::string pre = "layer0.dim" + std::to_string(p) + ".";
    for (const char* block : {"boundary.0", "boundary.1", "upper.0", "upper.1"}) {
      params.at(pre + block + ".weight") = eye;
      params.at(pre + block + ".bias").setZero();
    }
    Eigen::MatrixXd update(2 * w, w);
    update << w0 - w1, w1;
    params.at(pre + "update.weight") = update;
    params.at(pre + "update.bias").setZero();
  }
  params.at("layer0.dim0.message.neighbour.weight") = -2.0 * eye;
  params.at("layer0.dim0.message.witness.weight") = eye;
  params.at("layer0.dim0.message.bias").setZero();

  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = oracle::random_graph(9, 0.4, rng);
    const CellComplex x = lift(g, parse_lifting_spec("IC:6"));
    const Eigen::MatrixXd h = random_matrix(static_cast<Eigen::Index>(x.count(0)), w, rng);
    const FeatureSet in = derive_features(x, h, CellInit::SumOfVertices);
    const FeatureSet out = cin_layer(model, x, in, 0);
    EXPECT_LE((out[0] - poly_conv(x, 0, h, {w0, w1})).cwiseAbs().maxCoeff(), 1e-10) << trial;
  }
}
