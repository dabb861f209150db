#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace hjprox::tape {

using Matrix = Eigen::MatrixXd;

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

/// Matrix-valued reverse-mode tape. Nodes are appended in evaluation order,
/// so index order is a topological order. backward() can either accumulate
/// plain adjoint matrices or, with create_graph, record the adjoint
/// computation on the tape itself so it can be differentiated again.
class Tape {
 public:
  Var leaf(Matrix value, bool requires_grad);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  /// op(a) * op(b) where op transposes when the flag is set.
  Var matmul(Var a, Var b, bool ta = false, bool tb = false);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  ///< elementwise
  Var scale(Var a, double c);
  /// x + b 1^T for a column vector b.
  Var add_bias(Var x, Var b);
  /// Sums over columns: (r x c) -> (r x 1).
  Var row_sum(Var x);
  /// Sums over rows: (r x c) -> (1 x c).
  Var col_sum(Var x);
  /// (r x 1) -> (r x cols).
  Var broadcast_cols(Var v, Eigen::Index cols);
  /// (1 x c) -> (rows x c).
  Var broadcast_rows(Var v, Eigen::Index rows);
  Var sum_all(Var x);
  /// (1 x 1) -> (rows x cols).
  Var fill(Var s, Eigen::Index rows, Eigen::Index cols);
  /// log(1 + exp(beta x)) / beta.
  Var softplus(Var x, double beta);
  /// 1 / (1 + exp(-beta x)), the derivative of softplus.
  Var sigmoid(Var x, double beta);
  Var abs(Var x);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  std::size_t size() const { return nodes_.size(); }

  /// Adjoints of a scalar root with respect to the given leaves (zero
  /// matrices for leaves the root does not depend on).
  std::vector<Matrix> grad(Var root, const std::vector<Var>& wrt);
  /// Same, but the adjoints are new nodes on this tape.
  std::vector<Var> grad_graph(Var root, const std::vector<Var>& wrt);

 private:
  enum class Op { Leaf, MatMul, Add, Sub, Mul, Scale, AddBias, RowSum, ColSum, BroadcastCols, BroadcastRows,
                  SumAll, Fill, Softplus, Sigmoid, Abs };
  struct Node {
    Op op;
    Matrix value;
    int a = -1;
    int b = -1;
    double c = 0.0;
    bool ta = false;
    bool tb = false;
    bool needs = false;
  };
  Var push(Node n);
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

  std::vector<Node> nodes_;
};

/// Numerically stable scalar softplus and its derivative.
double softplus(double x, double beta);
double sigmoid(double x, double beta);
/// Array versions used by the inference path.
Matrix softplus(const Matrix& x, double beta);
Matrix sigmoid(const Matrix& x, double beta);

}  // namespace hjprox::tape
