#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "cdap/matrix.hpp"

namespace cdap {

// Handle into a Tape. Only valid for the tape that created it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are recorded in evaluation order, which is a
// topological order by construction, so backward() is a single reverse sweep.
// One tape carries one forward/backward flow; call reset() to start the next.
class Tape {
 public:
  // Leaves. A parameter leaf accumulates its gradient into *grad_sink during
  // backward(); grad_sink must stay alive until then and match the value shape.
  Var constant(Matrix value);
  Var parameter(const Matrix& value, Matrix* grad_sink);

  // Primitives. Each checks operand shapes and is exactly differentiable.
  Var matmul(Var a, Var b);             // a*b
  Var matmul_nt(Var a, Var b);          // a*b^T
  Var add(Var a, Var b);                // elementwise
  Var sub(Var a, Var b);                // elementwise
  Var scale(Var a, double c);           // c*a
  Var add_row_broadcast(Var a, Var bias);  // bias is 1xC, added to every row
  Var concat_cols(const std::vector<Var>& parts);
  Var stack_rows(const std::vector<Var>& parts);
  Var gather_rows(Var a, std::vector<int> idx);
  Var row_softmax(Var a);
  Var scaled_softmax(Var a, double temperature);  // row_softmax(a / T)
  Var rowwise_dot(Var a, Var b);                  // Nx1 of per-row dot products
  Var scale_rows(Var a, Var col);                 // row i of a times col(i,0)
  // -dist(q row i, m row j) for all pairs; squared or plain euclidean
  Var neg_euclidean(Var q, Var m, bool squared = true);
  // paired rows: Nx1 with -dist(a row i, b row i)
  Var rowwise_neg_euclidean(Var a, Var b, bool squared = true);
  // Row-wise layer norm with affine gain/bias (both 1xC). normalize=false skips
  // the mean/variance step and applies only the affine map.
  Var layer_norm(Var x, Var gain, Var bias, bool normalize = true);
  Var relu(Var a);
  Var log(Var a);                     // elementwise, clamped away from 0
  Var kl_div(Var p, Var q);           // scalar sum of KL(p_row || q_row)
  Var pick(Var a, int r, int c);      // scalar a(r,c)
  Var pick_per_row(Var a, std::vector<int> cols);  // Nx1 of a(i, cols[i])
  Var sum(Var a);                     // scalar sum of all entries

  // Seeds d(loss)=1 and sweeps the tape once. loss must be scalar and all
  // gradients of recorded parameter leaves are accumulated into their sinks.
  void backward(Var loss);

  const Matrix& value(Var v) const { return node_at(v).value; }
  const Matrix& grad(Var v) const;

  void reset();
  int size() const { return int(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Matrix* grad_sink = nullptr;
    std::function<void(Tape&, int)> backprop;
  };

  Var push(Matrix value, bool requires_grad);
  Node& node_at(Var v);
  const Node& node_at(Var v) const;
  // Returns the gradient buffer of an input, or nullptr if it does not need one.
  Matrix* grad_buf(int id);
  bool needs_grad(Var v) const { return node_at(v).requires_grad; }

  // deque keeps value()/grad() references valid while the graph grows
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace cdap
