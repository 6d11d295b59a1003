#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cellnet/activation.hpp"
#include "cellnet/error.hpp"

namespace cellnet::ad {

using Matrix = Eigen::MatrixXd;
using Index = std::vector<std::uint32_t>;

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const noexcept { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode tape over dense matrices, limited to the operations the CIN
/// model needs. Nodes are appended in evaluation order, so backward() walks
/// them in reverse without a topological sort.
class Tape {
 public:
  Var constant(Matrix value) { return push(std::move(value), false, nullptr); }

  /// Leaf whose gradient is read back after backward().
  Var leaf(Matrix value) { return push(std::move(value), true, nullptr); }

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b) {
    Matrix out = value(a) * value(b);
    return push(std::move(out), any(a, b), [a, b](Tape& t, const Matrix& g) {
      if (t.needs_grad(a)) t.acc(a) += g * t.value(b).transpose();
      if (t.needs_grad(b)) t.acc(b) += t.value(a).transpose() * g;
    });
  }

  Var add(Var a, Var b) {
    check_same(a, b, "add");
    Matrix out = value(a) + value(b);
    return push(std::move(out), any(a, b), [a, b](Tape& t, const Matrix& g) {
      if (t.needs_grad(a)) t.acc(a) += g;
      if (t.needs_grad(b)) t.acc(b) += g;
    });
  }

  /// a + row broadcast of the 1 x n matrix `bias`.
  Var add_row(Var a, Var bias) {
    if (value(bias).rows() != 1 || value(bias).cols() != value(a).cols()) {
      throw Error(ErrorCode::ShapeMismatch, "bias width does not match");
    }
    Matrix out = value(a).rowwise() + value(bias).row(0);
    return push(std::move(out), any(a, bias), [a, bias](Tape& t, const Matrix& g) {
      if (t.needs_grad(a)) t.acc(a) += g;
      if (t.needs_grad(bias)) t.acc(bias) += g.colwise().sum();
    });
  }

  /// (1 + eps) * a for a 1 x 1 `eps`.
  Var one_plus_scale(Var a, Var eps) {
    const double s = 1.0 + value(eps)(0, 0);
    Matrix out = s * value(a);
    return push(std::move(out), any(a, eps), [a, eps, s](Tape& t, const Matrix& g) {
      if (t.needs_grad(a)) t.acc(a) += s * g;
      if (t.needs_grad(eps)) t.acc(eps)(0, 0) += (g.array() * t.value(a).array()).sum();
    });
  }

  Var activation(Var a, Activation kind) {
    if (kind == Activation::Identity) return a;
    Matrix out = value(a).unaryExpr([kind](double v) { return activate(kind, v); });
    return push(std::move(out), any(a), [a, kind](Tape& t, const Matrix& g) {
      const Matrix& x = t.value(a);
      t.acc(a) += g.binaryExpr(x, [kind](double gv, double xv) { return gv * activate_grad(kind, xv); });
    });
  }

  Var concat_cols(Var a, Var b) {
    if (value(a).rows() != value(b).rows()) throw Error(ErrorCode::ShapeMismatch, "concat row mismatch");
    const auto ca = value(a).cols();
    const auto cb = value(b).cols();
    Matrix out(value(a).rows(), ca + cb);
    out << value(a), value(b);
    return push(std::move(out), any(a, b), [a, b, ca, cb](Tape& t, const Matrix& g) {
      if (t.needs_grad(a)) t.acc(a) += g.leftCols(ca);
      if (t.needs_grad(b)) t.acc(b) += g.rightCols(cb);
    });
  }

  /// out[i] = a[rows[i]]
  Var gather_rows(Var a, const Index& rows) {
    const Matrix& src = value(a);
    Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
    return push(std::move(out), any(a), [a, rows](Tape& t, const Matrix& g) {
      Matrix& acc = t.acc(a);
      for (std::size_t i = 0; i < rows.size(); ++i) acc.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
    });
  }

  /// out[rows[i]] += a[i], out has n rows; summation follows the order of `rows`.
  Var scatter_add_rows(Var a, const Index& rows, std::size_t n) {
    const Matrix& src = value(a);
    if (static_cast<std::size_t>(src.rows()) != rows.size()) throw Error(ErrorCode::ShapeMismatch, "scatter index");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(rows[i]) += src.row(static_cast<Eigen::Index>(i));
    return push(std::move(out), any(a), [a, rows](Tape& t, const Matrix& g) {
      Matrix& acc = t.acc(a);
      for (std::size_t i = 0; i < rows.size(); ++i) acc.row(static_cast<Eigen::Index>(i)) += g.row(rows[i]);
    });
  }

  /// Row i multiplied by factors[i].
  Var scale_rows(Var a, const std::vector<double>& factors) {
    const Matrix& src = value(a);
    if (static_cast<std::size_t>(src.rows()) != factors.size()) throw Error(ErrorCode::ShapeMismatch, "row factors");
    const Eigen::Map<const Eigen::VectorXd> f(factors.data(), static_cast<Eigen::Index>(factors.size()));
    Matrix out = f.asDiagonal() * src;
    return push(std::move(out), any(a), [a, factors](Tape& t, const Matrix& g) {
      const Eigen::Map<const Eigen::VectorXd> fv(factors.data(), static_cast<Eigen::Index>(factors.size()));
      t.acc(a) += fv.asDiagonal() * g;
    });
  }

  /// Elementwise product with a constant mask (dropout).
  Var mask(Var a, Matrix m) {
    Matrix out = value(a).cwiseProduct(m);
    return push(std::move(out), any(a), [a, m = std::move(m)](Tape& t, const Matrix& g) {
      t.acc(a) += g.cwiseProduct(m);
    });
  }

  /// Mean softmax cross-entropy of the rows of `logits` against class labels.
  Var cross_entropy(Var logits, std::vector<int> labels) {
    const Matrix& z = value(logits);
    if (static_cast<std::size_t>(z.rows()) != labels.size()) throw Error(ErrorCode::ShapeMismatch, "label count");
    Matrix probs(z.rows(), z.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double m = z.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (z.row(i).array() - m).exp();
      const double s = e.sum();
      probs.row(i) = e / s;
      loss += -(z(i, labels[static_cast<std::size_t>(i)]) - m - std::log(s));
    }
    const double n = static_cast<double>(z.rows());
    Matrix out(1, 1);
    out(0, 0) = loss / n;
    return push(std::move(out), any(logits),
                [logits, labels = std::move(labels), probs = std::move(probs), n](Tape& t, const Matrix& g) {
                  Matrix d = probs;
                  for (std::size_t i = 0; i < labels.size(); ++i) d(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
                  t.acc(logits) += (g(0, 0) / n) * d;
                });
  }

  /// Mean absolute error over all entries.
  Var mae(Var pred, Matrix target) {
    const Matrix& y = value(pred);
    if (y.rows() != target.rows() || y.cols() != target.cols()) throw Error(ErrorCode::ShapeMismatch, "MAE target");
    const double n = static_cast<double>(y.size());
    Matrix out(1, 1);
    out(0, 0) = (y - target).cwiseAbs().sum() / n;
    return push(std::move(out), any(pred), [pred, target = std::move(target), n](Tape& t, const Matrix& g) {
      const Matrix diff = t.value(pred) - target;
      t.acc(pred) += (g(0, 0) / n) * diff.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
    });
  }

  /// Propagates d(root)/d(node) for every node; root must be 1 x 1.
  void backward(Var root) {
    if (value(root).size() != 1) throw Error(ErrorCode::ShapeMismatch, "backward needs a scalar root");
    for (auto& node : nodes_) node.grad.resize(0, 0);
    acc(root)(0, 0) += 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.needs_grad || !node.backward || node.grad.size() == 0) continue;
      node.backward(*this, node.grad);
    }
  }

 private:
  using Backward = std::function<void(Tape&, const Matrix&)>;

  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
  };

  Var push(Matrix value, bool needs_grad, Backward backward) {
    nodes_.push_back({std::move(value), Matrix(), needs_grad, std::move(backward)});
    return Var{nodes_.size() - 1};
  }

  bool any(Var a) const { return needs_grad(a); }
  bool any(Var a, Var b) const { return needs_grad(a) || needs_grad(b); }

  Matrix& acc(Var v) {
    Node& node = nodes_[v.id];
    if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    return node.grad;
  }

  void check_same(Var a, Var b, const char* op) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": operand shapes differ");
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace cellnet::ad
