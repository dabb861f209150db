#include "hjprox/tape.hpp"

#include <cmath>

#include "hjprox/errors.hpp"

namespace hjprox::tape {

double softplus(double x, double beta) {
  const double u = beta * x;
  return (std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)))) / beta;
}

double sigmoid(double x, double beta) {
  const double u = beta * x;
  const double e = std::exp(-std::abs(u));
  return u >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

Matrix softplus(const Matrix& x, double beta) {
  const Eigen::ArrayXXd u = beta * x.array();
  // log(1 + e) with e <= 1 is within half an ulp of 1 of log1p(e), and
  // unlike log1p it vectorises
  return ((u.max(0.0) + (1.0 + (-u.abs()).exp()).log()) / beta).matrix();
}

Matrix sigmoid(const Matrix& x, double beta) {
  // the clamp keeps exp finite; sigmoid is already 0 or 1 to working
  // precision well before it
  return (1.0 + (-(beta * x.array()).max(-700.0).min(700.0)).exp()).inverse().matrix();
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node n{Op::Leaf, std::move(value)};
  n.needs = requires_grad;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b, bool ta, bool tb) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  Matrix v;
  if (!ta && !tb) v.noalias() = A * B;
  else if (ta && !tb) v.noalias() = A.transpose() * B;
  else if (!ta && tb) v.noalias() = A * B.transpose();
  else v.noalias() = A.transpose() * B.transpose();
  Node n{Op::MatMul, std::move(v), a.id, b.id};
  n.ta = ta;
  n.tb = tb;
  n.needs = node(a).needs || node(b).needs;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n{Op::Add, value(a) + value(b), a.id, b.id};
  n.needs = node(a).needs || node(b).needs;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n{Op::Sub, value(a) - value(b), a.id, b.id};
  n.needs = node(a).needs || node(b).needs;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  Node n{Op::Mul, value(a).cwiseProduct(value(b)), a.id, b.id};
  n.needs = node(a).needs || node(b).needs;
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  Node n{Op::Scale, c * value(a), a.id};
  n.c = c;
  n.needs = node(a).needs;
  return push(std::move(n));
}

Var Tape::add_bias(Var x, Var b) {
  if (value(b).cols() != 1 || value(b).rows() != value(x).rows()) throw InvalidArgument("add_bias: shape mismatch");
  Node n{Op::AddBias, value(x).colwise() + value(b).col(0), x.id, b.id};
  n.needs = node(x).needs || node(b).needs;
  return push(std::move(n));
}

Var Tape::row_sum(Var x) {
  Node n{Op::RowSum, value(x).rowwise().sum(), x.id};
  n.needs = node(x).needs;
  return push(std::move(n));
}

Var Tape::col_sum(Var x) {
  Node n{Op::ColSum, value(x).colwise().sum(), x.id};
  n.needs = node(x).needs;
  return push(std::move(n));
}

Var Tape::broadcast_cols(Var v, Eigen::Index cols) {
  Node n{Op::BroadcastCols, value(v).col(0).replicate(1, cols), v.id};
  n.needs = node(v).needs;
  return push(std::move(n));
}

Var Tape::broadcast_rows(Var v, Eigen::Index rows) {
  Node n{Op::BroadcastRows, value(v).row(0).replicate(rows, 1), v.id};
  n.needs = node(v).needs;
  return push(std::move(n));
}

Var Tape::sum_all(Var x) {
  Node n{Op::SumAll, Matrix::Constant(1, 1, value(x).sum()), x.id};
  n.needs = node(x).needs;
  return push(std::move(n));
}

Var Tape::fill(Var s, Eigen::Index rows, Eigen::Index cols) {
  Node n{Op::Fill, Matrix::Constant(rows, cols, value(s)(0, 0)), s.id};
  n.needs = node(s).needs;
  return push(std::move(n));
}

Var Tape::softplus(Var x, double beta) {
  Node n{Op::Softplus, tape::softplus(value(x), beta), x.id};
  n.c = beta;
  n.needs = node(x).needs;
  return push(std::move(n));
}

Var Tape::sigmoid(Var x, double beta) {
  Node n{Op::Sigmoid, tape::sigmoid(value(x), beta), x.id};
  n.c = beta;
  n.needs = node(x).needs;
  return push(std::move(n));
}

Var Tape::abs(Var x) {
  Node n{Op::Abs, value(x).cwiseAbs(), x.id};
  n.needs = node(x).needs;
  return push(std::move(n));
}

std::vector<Matrix> Tape::grad(Var root, const std::vector<Var>& wrt) {
  if (value(root).size() != 1) throw InvalidArgument("tape: gradient root must be a scalar");
  std::vector<Matrix> adj(static_cast<std::size_t>(root.id) + 1);
  std::vector<bool> has(adj.size(), false);
  auto acc = [&](int id, Matrix g) {
    if (id < 0 || !nodes_[static_cast<std::size_t>(id)].needs) return;
    auto& slot = adj[static_cast<std::size_t>(id)];
    if (has[static_cast<std::size_t>(id)]) slot += g;
    else slot = std::move(g);
    has[static_cast<std::size_t>(id)] = true;
  };
  adj[static_cast<std::size_t>(root.id)] = Matrix::Ones(1, 1);
  has[static_cast<std::size_t>(root.id)] = true;

  for (int i = root.id; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!has[ui] || !nodes_[ui].needs) continue;
    const Node& n = nodes_[ui];
    const Matrix& G = adj[ui];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const Matrix& A = nodes_[static_cast<std::size_t>(n.a)].value;
        const Matrix& B = nodes_[static_cast<std::size_t>(n.b)].value;
        if (nodes_[static_cast<std::size_t>(n.a)].needs) {
          if (!n.ta) acc(n.a, n.tb ? Matrix(G * B) : Matrix(G * B.transpose()));
          else acc(n.a, n.tb ? Matrix(B.transpose() * G.transpose()) : Matrix(B * G.transpose()));
        }
        if (nodes_[static_cast<std::size_t>(n.b)].needs) {
          if (!n.tb) acc(n.b, n.ta ? Matrix(A * G) : Matrix(A.transpose() * G));
          else acc(n.b, n.ta ? Matrix(G.transpose() * A.transpose()) : Matrix(G.transpose() * A));
        }
        break;
      }
      case Op::Add:
        acc(n.a, G);
        acc(n.b, G);
        break;
      case Op::Sub:
        acc(n.a, G);
        acc(n.b, -G);
        break;
      case Op::Mul:
        acc(n.a, G.cwiseProduct(nodes_[static_cast<std::size_t>(n.b)].value));
        acc(n.b, G.cwiseProduct(nodes_[static_cast<std::size_t>(n.a)].value));
        break;
      case Op::Scale:
        acc(n.a, n.c * G);
        break;
      case Op::AddBias:
        acc(n.a, G);
        acc(n.b, G.rowwise().sum());
        break;
      case Op::RowSum:
        acc(n.a, G.col(0).replicate(1, nodes_[static_cast<std::size_t>(n.a)].value.cols()));
        break;
      case Op::ColSum:
        acc(n.a, G.row(0).replicate(nodes_[static_cast<std::size_t>(n.a)].value.rows(), 1));
        break;
      case Op::BroadcastCols:
        acc(n.a, G.rowwise().sum());
        break;
      case Op::BroadcastRows:
        acc(n.a, G.colwise().sum());
        break;
      case Op::SumAll: {
        const Matrix& X = nodes_[static_cast<std::size_t>(n.a)].value;
        acc(n.a, Matrix::Constant(X.rows(), X.cols(), G(0, 0)));
        break;
      }
      case Op::Fill:
        acc(n.a, Matrix::Constant(1, 1, G.sum()));
        break;
      case Op::Softplus:
        acc(n.a, G.cwiseProduct(tape::sigmoid(nodes_[static_cast<std::size_t>(n.a)].value, n.c)));
        break;
      case Op::Sigmoid: {
        const Eigen::ArrayXXd s = n.value.array();
        acc(n.a, (G.array() * n.c * s * (1.0 - s)).matrix());
        break;
      }
      case Op::Abs:
        acc(n.a, G.cwiseProduct(nodes_[static_cast<std::size_t>(n.a)].value.unaryExpr(
                     [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); })));
        break;
    }
  }
  std::vector<Matrix> out;
  for (Var w : wrt) {
    const auto uw = static_cast<std::size_t>(w.id);
    if (uw < adj.size() && has[uw]) out.push_back(adj[uw]);
    else out.push_back(Matrix::Zero(value(w).rows(), value(w).cols()));
  }
  return out;
}

std::vector<Var> Tape::grad_graph(Var root, const std::vector<Var>& wrt) {
  if (value(root).size() != 1) throw InvalidArgument("tape: gradient root must be a scalar");
  std::vector<Var> adj(static_cast<std::size_t>(root.id) + 1);
  auto acc = [&](int id, Var g) {
    if (id < 0 || !nodes_[static_cast<std::size_t>(id)].needs) return;
    Var& slot = adj[static_cast<std::size_t>(id)];
    slot = slot.id < 0 ? g : add(slot, g);
  };
  adj[static_cast<std::size_t>(root.id)] = constant(Matrix::Ones(1, 1));

  for (int i = root.id; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    if (adj[ui].id < 0 || !nodes_[ui].needs) continue;
    // copy: pushing new nodes may reallocate
    const Op op = nodes_[ui].op;
    const Var a{nodes_[ui].a}, b{nodes_[ui].b};
    const double c = nodes_[ui].c;
    const bool ta = nodes_[ui].ta, tb = nodes_[ui].tb;
    const Var G = adj[ui];
    auto needs = [&](Var v) { return v.id >= 0 && nodes_[static_cast<std::size_t>(v.id)].needs; };
    switch (op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (needs(a)) acc(a.id, !ta ? matmul(G, b, false, !tb) : matmul(b, G, tb, true));
        if (needs(b)) acc(b.id, !tb ? matmul(a, G, !ta, false) : matmul(G, a, true, ta));
        break;
      case Op::Add:
        acc(a.id, G);
        acc(b.id, G);
        break;
      case Op::Sub:
        acc(a.id, G);
        if (needs(b)) acc(b.id, scale(G, -1.0));
        break;
      case Op::Mul:
        if (needs(a)) acc(a.id, mul(G, b));
        if (needs(b)) acc(b.id, mul(G, a));
        break;
      case Op::Scale:
        acc(a.id, scale(G, c));
        break;
      case Op::AddBias:
        acc(a.id, G);
        if (needs(b)) acc(b.id, row_sum(G));
        break;
      case Op::RowSum:
        acc(a.id, broadcast_cols(G, value(a).cols()));
        break;
      case Op::ColSum:
        acc(a.id, broadcast_rows(G, value(a).rows()));
        break;
      case Op::BroadcastCols:
        acc(a.id, row_sum(G));
        break;
      case Op::BroadcastRows:
        acc(a.id, col_sum(G));
        break;
      case Op::SumAll:
        acc(a.id, fill(G, value(a).rows(), value(a).cols()));
        break;
      case Op::Fill:
        acc(a.id, sum_all(G));
        break;
      case Op::Softplus:
        acc(a.id, mul(G, sigmoid(a, c)));
        break;
      case Op::Sigmoid:
      case Op::Abs:
        throw Unsupported("tape: recorded adjoint through sigmoid/abs is not supported");
    }
  }
  std::vector<Var> out;
  for (Var w : wrt) {
    const auto uw = static_cast<std::size_t>(w.id);
    if (uw < adj.size() && adj[uw].id >= 0) out.push_back(adj[uw]);
    else out.push_back(constant(Matrix::Zero(value(w).rows(), value(w).cols())));
  }
  return out;
}

}  // namespace hjprox::tape
