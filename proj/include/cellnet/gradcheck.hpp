#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cellnet/generators.hpp"
#include "cellnet/lifting.hpp"
#include "cellnet/network.hpp"

namespace cellnet {

/// A lifted random graph (IC:5) with exactly `cells` cells and at least one
/// 2-cell, retried with fresh graphs until one fits.
inline CellComplex random_complex_with_cells(std::size_t cells, std::mt19937_64& rng) {
  const LiftingSpec spec{{{Substructure::InducedCycle, 5}}, 2};
  std::uniform_int_distribution<std::size_t> nodes(3, std::max<std::size_t>(3, cells / 2));
  std::uniform_real_distribution<double> density(0.3, 0.8);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Graph g = random_gnp(nodes(rng), density(rng), rng);
    CellComplex x = lift(g, spec);
    if (x.total_cells() == cells && x.count(2) > 0) return x;
  }
  throw Error(ErrorCode::BadSpec, "no random complex with " + std::to_string(cells) + " cells found");
}

struct GradcheckEntry {
  std::string name;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradcheckResult {
  std::size_t num_cells = 0;
  std::size_t num_checked = 0;
  double loss = 0.0;
  double max_rel_error = 0.0;
  GradcheckEntry worst;
};

/// |g - fd| / max(|g|, |fd|, floor)
inline double relative_error(double g, double fd, double floor = 1e-4) {
  return std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), floor});
}

/// Compares backward() with central differences for every scalar parameter.
inline GradcheckResult gradient_check(CinModel model, const CellBatch& batch, double step = 1e-6) {
  GradcheckResult r;
  const auto analytic = backward(model, batch, Loss::CrossEntropy);
  r.loss = analytic.loss;
  auto loss_at = [&]() {
    ad::Tape tape;
    const auto vars = model.upload(tape);
    const auto trace = model.forward(tape, batch, vars);
    return tape.value(tape.cross_entropy(trace.output, batch.labels))(0, 0);
  };
  for (const auto& [name, g] : analytic.grad.tensors) {
    if (name.find(".eps_") != std::string::npos && !model.config().train_eps) continue;
    Matrix& w = model.params().at(name);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double saved = w(i, j);
        w(i, j) = saved + step;
        const double up = loss_at();
        w(i, j) = saved - step;
        const double down = loss_at();
        w(i, j) = saved;
        const double fd = (up - down) / (2.0 * step);
        const double err = relative_error(g(i, j), fd);
        ++r.num_checked;
        if (err >= r.max_rel_error) {
          r.max_rel_error = err;
          r.worst = {name, i, j, g(i, j), fd, err};
        }
      }
    }
  }
  return r;
}

/// Seeded gradient check on a random 12-cell complex: a small ELU model with
/// trainable eps, mean pooling on 1-cells and a 3-way classifier, evaluated on
/// a batch of the complex under two random feature sets.
inline GradcheckResult gradient_check(std::uint64_t seed, std::size_t cells = 12) {
  std::mt19937_64 rng(seed);
  const CellComplex x = random_complex_with_cells(cells, rng);
  ModelConfig cfg;
  cfg.input_width = 3;
  cfg.layers = 2;
  cfg.hidden = 4;
  cfg.embed = 3;
  cfg.out_dim = 3;
  cfg.nonlinearity = Activation::ELU;
  cfg.pooling = {Pooling::Sum, Pooling::Mean, Pooling::Sum};
  cfg.train_eps = true;
  cfg.seed = seed;
  CinModel model(cfg);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& [name, m] : model.params().tensors) {
    if (name.find(".eps_") != std::string::npos) m(0, 0) = 0.1 * normal(rng);
  }
  std::vector<Sample> samples(2);
  for (int s = 0; s < 2; ++s) {
    samples[s].complex = x;
    for (int p = 0; p < kModelDims; ++p) {
      samples[s].features[p] = Matrix(static_cast<Eigen::Index>(x.count(p)), cfg.input_width);
      for (Eigen::Index i = 0; i < samples[s].features[p].size(); ++i) samples[s].features[p](i) = normal(rng);
    }
    samples[s].label = s;
  }
  const Sample* ptrs[] = {&samples[0], &samples[1]};
  auto r = gradient_check(std::move(model), make_batch(ptrs, cfg.max_dim));
  r.num_cells = x.total_cells();
  return r;
}

}  // namespace cellnet
