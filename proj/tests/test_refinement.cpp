#include <gtest/gtest.h>

#include <random>

#include "cellnet/fixtures.hpp"
#include "cellnet/generators.hpp"
#include "cellnet/refinement.hpp"
#include "oracles.hpp"

using namespace cellnet;

namespace {

// True when every class of `fine` lies inside one class of `coarse`.
bool refines(const std::vector<Colour>& fine, const std::vector<Colour>& coarse) {
  std::map<Colour, Colour> seen;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    auto [it, inserted] = seen.emplace(fine[i], coarse[i]);
    if (!inserted && it->second != coarse[i]) return false;
  }
  return true;
}

std::vector<TestMethod> all_methods() {
  return {TestMethod::wl(), TestMethod::three_wl(), TestMethod::cwl(parse_lifting_spec("IC:6")),
          TestMethod::cwl(parse_lifting_spec("CL:3,IC:6"), AdjacencySet::all()), TestMethod::swl(4)};
}

}  // namespace

TEST(Refinement, ParsesAdjacency) {
  EXPECT_EQ(parse_adjacency("all").to_string(), "b,co,down,up");
  EXPECT_EQ(parse_adjacency("up,b").to_string(), "b,up");
  EXPECT_EQ(parse_adjacency("down").to_string(), "down");
  EXPECT_THROW(parse_adjacency(""), Error);
  EXPECT_THROW(parse_adjacency("b,side"), Error);
  EXPECT_THROW(AdjacencySet({false, false, false, false}).validate(), Error);
}

TEST(Refinement, WlSeparatesPathFromTriangleInRoundOne) {
  const Graph p3(3, {{0, 1}, {1, 2}});
  const Graph k3(3, {{0, 1}, {1, 2}, {0, 2}});
  const auto cmp = compare(p3, k3, TestMethod::wl());
  EXPECT_EQ(cmp.verdict, Verdict::Distinguished);
  EXPECT_EQ(cmp.partitions[0].histograms[0], cmp.partitions[1].histograms[0]);
  EXPECT_NE(cmp.partitions[0].histograms[1], cmp.partitions[1].histograms[1]);
}

TEST(Refinement, WlUsesNodeLabels) {
  const Graph a(2, {{0, 1}}, std::vector<int>{0, 1});
  const Graph b(2, {{0, 1}}, std::vector<int>{0, 0});
  EXPECT_EQ(distinguish(a, b, TestMethod::wl()), Verdict::Distinguished);
}

TEST(Refinement, WlFailsOnMolecularPairAndCirculants) {
  EXPECT_EQ(distinguish(fixtures::decalin(), fixtures::bicyclopentyl(), TestMethod::wl()), Verdict::Inconclusive);
  EXPECT_EQ(distinguish(fixtures::hexagon(), fixtures::two_triangles(), TestMethod::wl()), Verdict::Inconclusive);
  const auto cmp = compare(circulant_skip(41, 2), circulant_skip(41, 9), TestMethod::wl());
  EXPECT_EQ(cmp.verdict, Verdict::Inconclusive);
  EXPECT_EQ(cmp.partitions[0].final_histogram().size(), 1u);
}

TEST(Refinement, CwlSeparatesWhereWlFails) {
  const auto ic6 = TestMethod::cwl(parse_lifting_spec("IC:6"));
  const auto cmp = compare(fixtures::decalin(), fixtures::bicyclopentyl(), ic6);
  EXPECT_EQ(cmp.verdict, Verdict::Distinguished);
  // Ring boundary sizes 6 and 5 already differ after one round.
  EXPECT_NE(cmp.partitions[0].histograms[1], cmp.partitions[1].histograms[1]);
  EXPECT_EQ(distinguish(fixtures::hexagon(), fixtures::two_triangles(), ic6), Verdict::Distinguished);
}

TEST(Refinement, ThreeWlVerdicts) {
  EXPECT_EQ(distinguish(fixtures::rook44(), fixtures::shrikhande(), TestMethod::three_wl()), Verdict::Inconclusive);
  EXPECT_EQ(distinguish(fixtures::decalin(), fixtures::bicyclopentyl(), TestMethod::three_wl()),
            Verdict::Distinguished);
  const auto cmp = compare(Graph(3, {{0, 1}, {1, 2}}), Graph(3, {{0, 1}, {1, 2}, {0, 2}}), TestMethod::three_wl());
  EXPECT_EQ(cmp.verdict, Verdict::Distinguished);
  EXPECT_NE(cmp.partitions[0].histograms[0], cmp.partitions[1].histograms[0]);
}

TEST(Refinement, ThreeWlRefusesLargeGraphs) {
  try {
    three_wl_refine(fixtures::cycle_graph(65));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
  EXPECT_NO_THROW(three_wl_refine(fixtures::cycle_graph(20), 1000, 20));
}

TEST(Refinement, CwlSeparatesStronglyRegularPair) {
  const Graph& a = fixtures::rook44();
  const Graph& b = fixtures::shrikhande();
  EXPECT_EQ(distinguish(a, b, TestMethod::cwl(parse_lifting_spec("IC:4"))), Verdict::Distinguished);
  EXPECT_EQ(distinguish(a, b, TestMethod::cwl(parse_lifting_spec("CL:4", 3))), Verdict::Distinguished);
  EXPECT_EQ(distinguish(a, b, TestMethod::wl()), Verdict::Inconclusive);
}

TEST(Refinement, SwlNeedsRings) {
  const Graph d = fixtures::decalin();
  const Graph b = fixtures::bicyclopentyl();
  EXPECT_EQ(distinguish(d, b, TestMethod::swl(3)), Verdict::Inconclusive);
  EXPECT_EQ(distinguish(d, b, TestMethod::cwl(parse_lifting_spec("CL:3,IC:6"))), Verdict::Distinguished);
  EXPECT_EQ(TestMethod::swl(3).lifting().max_dim, 3);
}

TEST(Refinement, IsomorphicInputsAreInconclusive) {
  std::mt19937_64 rng(31);
  for (const auto& method : all_methods()) {
    for (const auto& fixture : fixtures::all()) {
      const int trials = method.kind == TestKind::ThreeWL ? 5 : 50;
      for (int t = 0; t < trials; ++t) {
        const Graph h = random_relabelling(fixture.graph, rng);
        ASSERT_EQ(distinguish(fixture.graph, h, method), Verdict::Inconclusive) << method.name() << " " << fixture.name;
      }
    }
  }
}

TEST(Refinement, SoundOnSmallRandomPairs) {
  // A Distinguished verdict must never be issued for isomorphic graphs, and
  // every pair WL separates is also separated by CWL.
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t n = 5 + trial % 4;
    const std::size_t m = n + trial % 5;
    const Graph a = random_gnm(n, m, rng);
    const Graph b = trial % 3 == 0 ? random_relabelling(a, rng) : random_gnm(n, m, rng);
    const bool iso = oracle::isomorphic(a, b);
    const Verdict wl = distinguish(a, b, TestMethod::wl());
    for (const auto& method : all_methods()) {
      const Verdict v = distinguish(a, b, method);
      if (iso) EXPECT_EQ(v, Verdict::Inconclusive) << method.name();
      if (wl == Verdict::Distinguished && method.kind != TestKind::ThreeWL) {
        EXPECT_EQ(v, Verdict::Distinguished) << method.name();
      }
    }
  }
}

TEST(Refinement, SparseAdjacencyMatchesAllFourAtStability) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 6 + trial % 5;
    const Graph a = random_gnm(n, n + 2 + trial % 4, rng);
    const Graph b = random_gnm(n, n + 2 + trial % 4, rng);
    const auto spec = parse_lifting_spec(trial % 2 ? "IC:5" : "CL:3,C:5");
    const CellComplex xa = lift(a, spec);
    const CellComplex xb = lift(b, spec);
    CwlOptions sparse, all;
    all.adjacency = AdjacencySet::all();
    EXPECT_EQ(distinguish_complexes(xa, xb, sparse), distinguish_complexes(xa, xb, all)) << trial;
  }
}

TEST(Refinement, PartitionsRefineMonotonically) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const CellComplex x = lift(random_gnp(9, 0.4, rng), parse_lifting_spec("CL:3,IC:6"));
    for (const auto adj : {AdjacencySet::sparse(), AdjacencySet::all(), parse_adjacency("down")}) {
      const auto part = cwl_refine(x, adj);
      EXPECT_TRUE(part.stable);
      for (std::size_t t = 0; t + 1 < part.rounds.size(); ++t) {
        EXPECT_TRUE(refines(part.rounds[t + 1], part.rounds[t]));
      }
    }
    const auto g = random_gnp(8, 0.4, rng);
    const auto three = three_wl_refine(g);
    for (std::size_t t = 0; t + 1 < three.rounds.size(); ++t) EXPECT_TRUE(refines(three.rounds[t + 1], three.rounds[t]));
  }
}

TEST(Refinement, FirstRoundSeparatesBoundarySizes) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const CellComplex x = lift(random_gnp(9, 0.45, rng), parse_lifting_spec("CL:3,IC:7"));
    const auto part = cwl_refine(x, AdjacencySet::sparse());
    if (part.rounds.size() < 2) continue;
    const auto off = cell_offsets(x);
    for (std::size_t i = 0; i < x.total_cells(); ++i) {
      for (std::size_t j = i + 1; j < x.total_cells(); ++j) {
        const CellId a = cell_at(off, i);
        const CellId b = cell_at(off, j);
        const bool differ = a.dim != b.dim || x.boundary(a.dim, a.index).size() != x.boundary(b.dim, b.index).size();
        if (differ) EXPECT_NE(part.rounds[1][i], part.rounds[1][j]);
      }
    }
  }
}

TEST(Refinement, TrianglesNeverShareColoursWithLargerRings) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const CellComplex x = lift(random_gnp(10, 0.35, rng), parse_lifting_spec("CL:3,IC:6"));
    const auto part = cwl_refine(x, AdjacencySet::sparse(), 3);
    const auto off = cell_offsets(x);
    const auto& colours = part.final_colours();
    std::map<Colour, std::size_t> size_of;
    for (CellIndex i = 0; i < x.count(2); ++i) {
      const auto [it, inserted] = size_of.emplace(colours[off[2] + i], x.boundary(2, i).size());
      if (!inserted) EXPECT_EQ(it->second == 3, x.boundary(2, i).size() == 3);
    }
  }
}

TEST(Refinement, TrivialComplexesStabiliseImmediately) {
  const CellComplex point = build_complex(1, {});
  const auto part = cwl_refine(point);
  EXPECT_TRUE(part.stable);
  EXPECT_EQ(part.converged_at, 0u);
  EXPECT_EQ(part.rounds.size(), 1u);
  const auto capped = cwl_refine(lift(fixtures::rook44(), parse_lifting_spec("IC:4")), AdjacencySet::sparse(), 1);
  EXPECT_FALSE(capped.stable);
  EXPECT_EQ(capped.rounds.size(), 2u);
}

TEST(Refinement, InitialLabelsSeedColours) {
  const CellComplex x = graph_complex(Graph(2, {{0, 1}}));
  CwlOptions options;
  options.initial_labels = {{0, 1, 2}};
  const auto part = cwl_refine(x, options);
  EXPECT_EQ(part.histograms[0].size(), 3u);
  options.initial_labels = {{0, 1}};
  EXPECT_THROW(cwl_refine(x, options), Error);
}
