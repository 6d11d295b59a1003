#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cellnet/error.hpp"
#include "cellnet/network.hpp"
#include "cellnet/parallel.hpp"

namespace cellnet {

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

struct TrainOptions {
  std::size_t jobs = 1;
  /// Stop once validation accuracy reaches this value (values > 1 disable it).
  double target_val_accuracy = 2.0;
  bool verbose = false;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainMetrics {
  std::vector<EpochRecord> history;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::string stop_reason;
};

/// Adam with bias correction.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(CinParams& params, const CinParams& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    for (auto& [name, w] : params.tensors) {
      auto git = grad.tensors.find(name);
      if (git == grad.tensors.end()) continue;
      const Matrix& g = git->second;
      auto& [m, v] = state_[name];
      if (m.size() == 0) {
        m = Matrix::Zero(w.rows(), w.cols());
        v = Matrix::Zero(w.rows(), w.cols());
      }
      m = b1_ * m + (1.0 - b1_) * g;
      v = b2_ * v + (1.0 - b2_) * g.cwiseProduct(g);
      w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    }
  }

 private:
  double b1_, b2_, eps_;
  int t_ = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> state_;
};

/// Multiplies the learning rate by `factor` after more than `patience` epochs
/// without a relative improvement of the monitored loss.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, double factor, int patience, double threshold = 1e-4)
      : lr_(lr), factor_(factor), patience_(patience), threshold_(threshold) {}

  double lr() const noexcept { return lr_; }

  void observe(double loss) {
    if (loss < best_ * (1.0 - threshold_)) {
      best_ = loss;
      bad_ = 0;
      return;
    }
    if (++bad_ > patience_) {
      lr_ *= factor_;
      bad_ = 0;
    }
  }

 private:
  double lr_, factor_;
  int patience_;
  double threshold_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

namespace detail {

inline std::vector<const Sample*> pointers(const std::vector<Sample>& samples, std::size_t begin, std::size_t end,
                                           const std::vector<std::size_t>* order = nullptr) {
  std::vector<const Sample*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&samples[order ? (*order)[i] : i]);
  return out;
}

}  // namespace detail

/// Mean cross-entropy and accuracy of the model on a sample set.
inline std::pair<double, double> evaluate(const CinModel& model, const std::vector<Sample>& samples,
                                          std::size_t batch_size = 256) {
  if (samples.empty()) return {0.0, 0.0};
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < samples.size(); b += batch_size) {
    const auto ptrs = detail::pointers(samples, b, std::min(samples.size(), b + batch_size));
    const auto batch = make_batch(ptrs, model.config().max_dim);
    const Matrix logits = model.predict(batch);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double m = logits.row(i).maxCoeff();
      const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
      const int y = batch.labels[static_cast<std::size_t>(i)];
      loss += lse - logits(i, y);
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      if (arg == y) ++correct;
    }
  }
  const auto n = static_cast<double>(samples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

/// Trains a classifier with cross-entropy. Each mini-batch is split into
/// `jobs` contiguous chunks whose gradients are summed in chunk order, so
/// results do not depend on thread scheduling.
inline TrainMetrics train(CinModel& model, const Dataset& data, const TrainOptions& options = {}) {
  const ModelConfig& cfg = model.config();
  if (data.train.empty()) throw Error(ErrorCode::ShapeMismatch, "training set is empty");
  if (cfg.out_dim < 2) throw Error(ErrorCode::BadSpec, "training needs a classifier with at least 2 outputs");
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam adam;
  PlateauSchedule schedule(cfg.lr, cfg.lr_decay, cfg.patience);
  TrainMetrics metrics;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  const std::size_t jobs = options.jobs == 0 ? default_jobs() : options.jobs;

  metrics.stop_reason = "max_epochs";
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += batch_size) {
      const std::size_t end = std::min(order.size(), b + batch_size);
      const std::size_t count = end - b;
      const std::size_t chunks = std::min(jobs, count);
      // Dropout masks are drawn per chunk from seeds taken in a fixed order.
      std::vector<std::uint64_t> seeds(chunks);
      for (auto& s : seeds) s = rng();
      auto results = parallel_map(chunks, jobs, [&](std::size_t c) {
        const std::size_t lo = b + count * c / chunks;
        const std::size_t hi = b + count * (c + 1) / chunks;
        const auto batch = make_batch(detail::pointers(data.train, lo, hi, &order), cfg.max_dim);
        std::mt19937_64 drop(seeds[c]);
        auto r = backward(model, batch, Loss::CrossEntropy, nullptr, &drop);
        r.loss *= static_cast<double>(hi - lo);
        for (auto& [name, g] : r.grad.tensors) g *= static_cast<double>(hi - lo);
        return r;
      });
      LossAndGrad total = std::move(results[0]);
      for (std::size_t c = 1; c < results.size(); ++c) {
        total.loss += results[c].loss;
        for (auto& [name, g] : total.grad.tensors) g += results[c].grad.tensors.at(name);
      }
      if (!std::isfinite(total.loss)) {
        throw Error(ErrorCode::Diverged, "non-finite training loss at epoch " + std::to_string(epoch));
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (auto& [name, g] : total.grad.tensors) g *= inv;
      adam.step(model.params(), total.grad, schedule.lr());
      epoch_loss += total.loss;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = schedule.lr();
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    const auto& monitor = data.val.empty() ? data.train : data.val;
    std::tie(rec.val_loss, rec.val_accuracy) = evaluate(model, monitor);
    if (!std::isfinite(rec.val_loss)) {
      throw Error(ErrorCode::Diverged, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    metrics.history.push_back(rec);
    if (rec.val_accuracy >= options.target_val_accuracy) {
      metrics.stop_reason = "target_accuracy";
      break;
    }
    schedule.observe(rec.val_loss);
    if (schedule.lr() < cfg.min_lr) {
      metrics.stop_reason = "min_lr";
      break;
    }
  }
  metrics.train_accuracy = evaluate(model, data.train).second;
  metrics.val_accuracy = data.val.empty() ? metrics.train_accuracy : evaluate(model, data.val).second;
  metrics.test_accuracy = data.test.empty() ? 0.0 : evaluate(model, data.test).second;
  return metrics;
}

}  // namespace cellnet
