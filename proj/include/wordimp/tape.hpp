#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wordimp::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a matrix-valued node on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  int index() const { return idx_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int idx) : tape_(tape), idx_(idx) {}

  Tape* tape_ = nullptr;
  int idx_ = -1;
};

/// Append-only tape of matrix operations with reverse-mode differentiation.
/// Nodes are created in topological order, so a single reverse sweep from the
/// seeded output propagates adjoints to every leaf.
class Tape {
 public:
  Var input(Matrix v) { return make(std::move(v), {}); }

  Var matmul(Var a, Var b) {
    Matrix v = val(a) * val(b);
    return make(std::move(v), [this, a, b](const Matrix& g) {
      grad_of(a) += g * val(b).transpose();
      grad_of(b) += val(a).transpose() * g;
    });
  }

  /// a * b^T without materializing the transpose as a node.
  Var matmul_nt(Var a, Var b) {
    Matrix v = val(a) * val(b).transpose();
    return make(std::move(v), [this, a, b](const Matrix& g) {
      grad_of(a) += g * val(b);
      grad_of(b) += g.transpose() * val(a);
    });
  }

  Var add(Var a, Var b) {
    Matrix v = val(a) + val(b);
    return make(std::move(v), [this, a, b](const Matrix& g) {
      grad_of(a) += g;
      grad_of(b) += g;
    });
  }

  /// Adds a 1xC row vector to every row of a.
  Var add_rowvec(Var a, Var b) {
    Matrix v = val(a).rowwise() + val(b).row(0);
    return make(std::move(v), [this, a, b](const Matrix& g) {
      grad_of(a) += g;
      grad_of(b).row(0) += g.colwise().sum();
    });
  }

  Var cwise_mul_const(Var a, Matrix c) {
    Matrix v = val(a).cwiseProduct(c);
    return make(std::move(v), [this, a, c = std::move(c)](const Matrix& g) {
      grad_of(a) += g.cwiseProduct(c);
    });
  }

  Var add_const(Var a, const Matrix& c) {
    Matrix v = val(a) + c;
    return make(std::move(v), [this, a](const Matrix& g) { grad_of(a) += g; });
  }

  Var scale(Var a, double s) {
    Matrix v = val(a) * s;
    return make(std::move(v),
                [this, a, s](const Matrix& g) { grad_of(a) += g * s; });
  }

  Var tanh(Var a) {
    Matrix v = val(a).array().tanh().matrix();
    int idx = nodes_.size();
    return make(std::move(v), [this, a, idx](const Matrix& g) {
      const Matrix& y = nodes_[idx].value;
      grad_of(a).array() += g.array() * (1.0 - y.array().square());
    });
  }

  Var softmax_rows(Var a) {
    const Matrix& x = val(a);
    Matrix v(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      Eigen::ArrayXd e = (x.row(r).array() - x.row(r).maxCoeff()).exp();
      v.row(r) = (e / e.sum()).matrix();
    }
    int idx = nodes_.size();
    return make(std::move(v), [this, a, idx](const Matrix& g) {
      const Matrix& y = nodes_[idx].value;
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        double dot = g.row(r).dot(y.row(r));
        grad_of(a).row(r).array() +=
            y.row(r).array() * (g.row(r).array() - dot);
      }
    });
  }

  Var gather_rows(Var a, std::vector<int> rows) {
    const Matrix& x = val(a);
    Matrix v(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (size_t i = 0; i < rows.size(); ++i) v.row(i) = x.row(rows[i]);
    return make(std::move(v),
                [this, a, rows = std::move(rows)](const Matrix& g) {
                  for (size_t i = 0; i < rows.size(); ++i)
                    grad_of(a).row(rows[i]) += g.row(i);
                });
  }

  Var vconcat(Var a, Var b) {
    const Matrix& x = val(a);
    const Matrix& y = val(b);
    Matrix v(x.rows() + y.rows(), x.cols());
    v.topRows(x.rows()) = x;
    v.bottomRows(y.rows()) = y;
    return make(std::move(v), [this, a, b](const Matrix& g) {
      grad_of(a) += g.topRows(val(a).rows());
      grad_of(b) += g.bottomRows(val(b).rows());
    });
  }

  /// Gathers scalar entries (r, c) into a Kx1 column.
  Var pick(Var a, std::vector<std::pair<int, int>> cells) {
    const Matrix& x = val(a);
    Matrix v(static_cast<Eigen::Index>(cells.size()), 1);
    for (size_t i = 0; i < cells.size(); ++i)
      v(i, 0) = x(cells[i].first, cells[i].second);
    return make(std::move(v),
                [this, a, cells = std::move(cells)](const Matrix& g) {
                  for (size_t i = 0; i < cells.size(); ++i)
                    grad_of(a)(cells[i].first, cells[i].second) += g(i, 0);
                });
  }

  Var log(Var a) {
    Matrix v = val(a).array().log().matrix();
    return make(std::move(v), [this, a](const Matrix& g) {
      grad_of(a).array() += g.array() / val(a).array();
    });
  }

  Var sum(Var a) {
    Matrix v(1, 1);
    v(0, 0) = val(a).sum();
    return make(std::move(v), [this, a](const Matrix& g) {
      grad_of(a).array() += g(0, 0);
    });
  }

  Var neg(Var a) { return scale(a, -1.0); }

  void zero_grad() {
    for (auto& n : nodes_) n.grad.setZero();
  }

  /// Reverse sweep seeding d(out(r,c)) = 1.
  void backward(Var out, int r = 0, int c = 0) {
    if (out.tape_ != this) throw std::invalid_argument("Var from another tape");
    nodes_[out.idx_].grad(r, c) += 1.0;
    for (int i = out.idx_; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(nodes_[i].grad);
  }

  const Matrix& value(Var v) const { return nodes_.at(v.idx_).value; }
  const Matrix& grad(Var v) const { return nodes_.at(v.idx_).grad; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(const Matrix&)> back;
  };

  Var make(Matrix v, std::function<void(const Matrix&)> back) {
    Node n;
    n.grad = Matrix::Zero(v.rows(), v.cols());
    n.value = std::move(v);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  const Matrix& val(Var v) const { return nodes_[v.idx_].value; }
  Matrix& grad_of(Var v) { return nodes_[v.idx_].grad; }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }
inline const Matrix& Var::grad() const { return tape_->grad(*this); }

}  // namespace wordimp::ad
