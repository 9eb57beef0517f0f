#include "cdap/tape.hpp"

#include <algorithm>
#include <cmath>

#include "cdap/kernels.hpp"

namespace cdap {

namespace {

constexpr double kLogFloor = 1e-300;
constexpr double kNormEps = 1e-5;
constexpr double kDistFloor = 1e-12;

void axpy(Matrix& dst, const Matrix& src) {
  for (size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad) {
  Node n;
  if (requires_grad) n.grad = Matrix(value.rows(), value.cols());
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{int(nodes_.size()) - 1};
}

Tape::Node& Tape::node_at(Var v) {
  if (!v.valid() || v.id >= int(nodes_.size())) throw ContractError("Tape: invalid Var");
  return nodes_[v.id];
}

const Tape::Node& Tape::node_at(Var v) const {
  if (!v.valid() || v.id >= int(nodes_.size())) throw ContractError("Tape: invalid Var");
  return nodes_[v.id];
}

Matrix* Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  return n.requires_grad ? &n.grad : nullptr;
}

const Matrix& Tape::grad(Var v) const {
  const Node& n = node_at(v);
  if (!n.requires_grad) throw ContractError("Tape::grad: node does not track gradients");
  return n.grad;
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Var Tape::parameter(const Matrix& value, Matrix* grad_sink) {
  if (grad_sink == nullptr) throw ContractError("Tape::parameter: null gradient sink");
  if (!grad_sink->same_shape(value))
    throw ShapeError("Tape::parameter: sink " + grad_sink->shape_str() + " vs value " +
                     value.shape_str());
  Var v = push(value, true);
  nodes_[v.id].grad_sink = grad_sink;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  Matrix out;
  kernels::matmul(value(a), value(b), out);
  Var r = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, b](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id)) {
        Matrix tmp;
        kernels::matmul_nt(g, t.value(b), tmp);
        axpy(*da, tmp);
      }
      if (Matrix* db = t.grad_buf(b.id)) {
        Matrix tmp;
        kernels::matmul_tn(t.value(a), g, tmp);
        axpy(*db, tmp);
      }
    };
  }
  return r;
}

Var Tape::matmul_nt(Var a, Var b) {
  Matrix out;
  kernels::matmul_nt(value(a), value(b), out);
  Var r = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, b](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id)) {
        Matrix tmp;
        kernels::matmul(g, t.value(b), tmp);
        axpy(*da, tmp);
      }
      if (Matrix* db = t.grad_buf(b.id)) {
        Matrix tmp;
        kernels::matmul_tn(g, t.value(a), tmp);
        axpy(*db, tmp);
      }
    };
  }
  return r;
}

Var Tape::add(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv))
    throw ShapeError("add: a=" + av.shape_str() + " b=" + bv.shape_str());
  Matrix out = av;
  axpy(out, bv);
  Var r = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, b](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id)) axpy(*da, g);
      if (Matrix* db = t.grad_buf(b.id)) axpy(*db, g);
    };
  }
  return r;
}

Var Tape::sub(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv))
    throw ShapeError("sub: a=" + av.shape_str() + " b=" + bv.shape_str());
  Matrix out = av;
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] -= bv.data()[i];
  Var r = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, b](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id)) axpy(*da, g);
      if (Matrix* db = t.grad_buf(b.id))
        for (size_t i = 0; i < db->size(); ++i) db->data()[i] -= g.data()[i];
    };
  }
  return r;
}

Var Tape::scale(Var a, double c) {
  Matrix out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, c](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id))
        for (size_t i = 0; i < da->size(); ++i) da->data()[i] += c * g.data()[i];
    };
  }
  return r;
}

Var Tape::add_row_broadcast(Var a, Var bias) {
  const Matrix& av = value(a);
  const Matrix& bv = value(bias);
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw ShapeError("add_row_broadcast: a=" + av.shape_str() + " bias=" + bv.shape_str());
  Matrix out = av;
  for (int i = 0; i < out.rows(); ++i) {
    double* row = out.row_ptr(i);
    for (int j = 0; j < out.cols(); ++j) row[j] += bv(0, j);
  }
  Var r = push(std::move(out), needs_grad(a) || needs_grad(bias));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, bias](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id)) axpy(*da, g);
      if (Matrix* db = t.grad_buf(bias.id)) {
        for (int i = 0; i < g.rows(); ++i) {
          const double* row = g.row_ptr(i);
          for (int j = 0; j < g.cols(); ++j) (*db)(0, j) += row[j];
        }
      }
    };
  }
  return r;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  int rows = value(parts[0]).rows();
  int cols = 0;
  bool rg = false;
  for (Var p : parts) {
    const Matrix& v = value(p);
    if (v.rows() != rows)
      throw ShapeError("concat_cols: row mismatch " + v.shape_str());
    cols += v.cols();
    rg = rg || needs_grad(p);
  }
  Matrix out(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Matrix& v = value(p);
    for (int i = 0; i < rows; ++i)
      std::copy(v.row_ptr(i), v.row_ptr(i) + v.cols(), out.row_ptr(i) + off);
    off += v.cols();
  }
  Var r = push(std::move(out), rg);
  if (rg) {
    nodes_[r.id].backprop = [parts](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      int off = 0;
      for (Var p : parts) {
        int pc = t.value(p).cols();
        if (Matrix* dp = t.grad_buf(p.id)) {
          for (int i = 0; i < g.rows(); ++i) {
            const double* grow = g.row_ptr(i) + off;
            double* drow = dp->row_ptr(i);
            for (int j = 0; j < pc; ++j) drow[j] += grow[j];
          }
        }
        off += pc;
      }
    };
  }
  return r;
}

Var Tape::stack_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("stack_rows: no parts");
  int cols = value(parts[0]).cols();
  int rows = 0;
  bool rg = false;
  for (Var p : parts) {
    const Matrix& v = value(p);
    if (v.cols() != cols)
      throw ShapeError("stack_rows: column mismatch " + v.shape_str());
    rows += v.rows();
    rg = rg || needs_grad(p);
  }
  Matrix out(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Matrix& v = value(p);
    std::copy(v.data(), v.data() + v.size(), out.row_ptr(off));
    off += v.rows();
  }
  Var r = push(std::move(out), rg);
  if (rg) {
    nodes_[r.id].backprop = [parts](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      int off = 0;
      for (Var p : parts) {
        int pr = t.value(p).rows();
        if (Matrix* dp = t.grad_buf(p.id)) {
          const double* gp = g.row_ptr(off);
          for (size_t i = 0; i < dp->size(); ++i) dp->data()[i] += gp[i];
        }
        off += pr;
      }
    };
  }
  return r;
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  const Matrix& av = value(a);
  for (int i : idx)
    if (i < 0 || i >= av.rows()) throw ContractError("gather_rows: index out of range");
  Matrix out(int(idx.size()), av.cols());
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy(av.row_ptr(idx[i]), av.row_ptr(idx[i]) + av.cols(), out.row_ptr(int(i)));
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, idx = std::move(idx)](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id)) {
        for (size_t i = 0; i < idx.size(); ++i) {
          const double* grow = g.row_ptr(int(i));
          double* drow = da->row_ptr(idx[i]);
          for (int j = 0; j < g.cols(); ++j) drow[j] += grow[j];
        }
      }
    };
  }
  return r;
}

Var Tape::row_softmax(Var a) {
  Matrix out;
  kernels::row_softmax(value(a), out);
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& y = t.nodes_[out_id].value;
      if (Matrix* da = t.grad_buf(a.id)) {
        for (int i = 0; i < y.rows(); ++i) {
          const double* yr = y.row_ptr(i);
          const double* gr = g.row_ptr(i);
          double dot = 0.0;
          for (int j = 0; j < y.cols(); ++j) dot += yr[j] * gr[j];
          double* dr = da->row_ptr(i);
          for (int j = 0; j < y.cols(); ++j) dr[j] += yr[j] * (gr[j] - dot);
        }
      }
    };
  }
  return r;
}

Var Tape::scaled_softmax(Var a, double temperature) {
  if (!(temperature > 0.0)) throw ContractError("scaled_softmax: temperature must be > 0");
  return row_softmax(scale(a, 1.0 / temperature));
}

Var Tape::rowwise_dot(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv))
    throw ShapeError("rowwise_dot: a=" + av.shape_str() + " b=" + bv.shape_str());
  Matrix out(av.rows(), 1);
  for (int i = 0; i < av.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < av.cols(); ++j) acc += av(i, j) * bv(i, j);
    out(i, 0) = acc;
  }
  Var r = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, b](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& av = t.value(a);
      const Matrix& bv = t.value(b);
      Matrix* da = t.grad_buf(a.id);
      Matrix* db = t.grad_buf(b.id);
      for (int i = 0; i < av.rows(); ++i) {
        double gi = g(i, 0);
        for (int j = 0; j < av.cols(); ++j) {
          if (da) (*da)(i, j) += gi * bv(i, j);
          if (db) (*db)(i, j) += gi * av(i, j);
        }
      }
    };
  }
  return r;
}

Var Tape::scale_rows(Var a, Var col) {
  const Matrix& av = value(a);
  const Matrix& cv = value(col);
  if (cv.cols() != 1 || cv.rows() != av.rows())
    throw ShapeError("scale_rows: a=" + av.shape_str() + " col=" + cv.shape_str());
  Matrix out = av;
  for (int i = 0; i < out.rows(); ++i) {
    double c = cv(i, 0);
    double* row = out.row_ptr(i);
    for (int j = 0; j < out.cols(); ++j) row[j] *= c;
  }
  Var r = push(std::move(out), needs_grad(a) || needs_grad(col));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, col](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& av = t.value(a);
      const Matrix& cv = t.value(col);
      Matrix* da = t.grad_buf(a.id);
      Matrix* dc = t.grad_buf(col.id);
      for (int i = 0; i < av.rows(); ++i) {
        double c = cv(i, 0);
        double acc = 0.0;
        for (int j = 0; j < av.cols(); ++j) {
          if (da) (*da)(i, j) += g(i, j) * c;
          acc += g(i, j) * av(i, j);
        }
        if (dc) (*dc)(i, 0) += acc;
      }
    };
  }
  return r;
}

Var Tape::neg_euclidean(Var q, Var m, bool squared) {
  Matrix out;
  kernels::pairwise_neg_dist(value(q), value(m), squared, out);
  Var r = push(std::move(out), needs_grad(q) || needs_grad(m));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [q, m, squared](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& val = t.nodes_[out_id].value;
      const Matrix& qv = t.value(q);
      const Matrix& mv = t.value(m);
      Matrix* dq = t.grad_buf(q.id);
      Matrix* dm = t.grad_buf(m.id);
      int d = qv.cols();
      for (int i = 0; i < qv.rows(); ++i) {
        for (int j = 0; j < mv.rows(); ++j) {
          double gij = g(i, j);
          if (gij == 0.0) continue;
          // d(-||q-m||^2)/dq = -2(q-m); d(-||q-m||)/dq = -(q-m)/||q-m||
          double coef = squared ? -2.0 * gij : -gij / std::max(-val(i, j), kDistFloor);
          for (int k = 0; k < d; ++k) {
            double diff = qv(i, k) - mv(j, k);
            if (dq) (*dq)(i, k) += coef * diff;
            if (dm) (*dm)(j, k) -= coef * diff;
          }
        }
      }
    };
  }
  return r;
}

Var Tape::rowwise_neg_euclidean(Var a, Var b, bool squared) {
  Matrix out;
  kernels::rowwise_neg_dist(value(a), value(b), squared, out);
  Var r = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, b, squared](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& val = t.nodes_[out_id].value;
      const Matrix& av = t.value(a);
      const Matrix& bv = t.value(b);
      Matrix* da = t.grad_buf(a.id);
      Matrix* db = t.grad_buf(b.id);
      for (int i = 0; i < av.rows(); ++i) {
        double gi = g(i, 0);
        if (gi == 0.0) continue;
        double coef = squared ? -2.0 * gi : -gi / std::max(-val(i, 0), kDistFloor);
        for (int k = 0; k < av.cols(); ++k) {
          double diff = av(i, k) - bv(i, k);
          if (da) (*da)(i, k) += coef * diff;
          if (db) (*db)(i, k) -= coef * diff;
        }
      }
    };
  }
  return r;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, bool normalize) {
  const Matrix& xv = value(x);
  const Matrix& gv = value(gain);
  const Matrix& bv = value(bias);
  if (gv.rows() != 1 || gv.cols() != xv.cols() || bv.rows() != 1 || bv.cols() != xv.cols())
    throw ShapeError("layer_norm: x=" + xv.shape_str() + " gain=" + gv.shape_str() +
                     " bias=" + bv.shape_str());
  int cols = xv.cols();
  Matrix out(xv.rows(), cols);
  for (int i = 0; i < xv.rows(); ++i) {
    const double* xr = xv.row_ptr(i);
    double* orow = out.row_ptr(i);
    if (normalize) {
      double mean = 0.0;
      for (int j = 0; j < cols; ++j) mean += xr[j];
      mean /= cols;
      double var = 0.0;
      for (int j = 0; j < cols; ++j) var += (xr[j] - mean) * (xr[j] - mean);
      var /= cols;
      double inv = 1.0 / std::sqrt(var + kNormEps);
      for (int j = 0; j < cols; ++j) orow[j] = gv(0, j) * (xr[j] - mean) * inv + bv(0, j);
    } else {
      for (int j = 0; j < cols; ++j) orow[j] = gv(0, j) * xr[j] + bv(0, j);
    }
  }
  Var r = push(std::move(out), needs_grad(x) || needs_grad(gain) || needs_grad(bias));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [x, gain, bias, normalize](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& xv = t.value(x);
      const Matrix& gv = t.value(gain);
      Matrix* dx = t.grad_buf(x.id);
      Matrix* dg = t.grad_buf(gain.id);
      Matrix* db = t.grad_buf(bias.id);
      int cols = xv.cols();
      std::vector<double> xhat(cols), dxhat(cols);
      for (int i = 0; i < xv.rows(); ++i) {
        const double* xr = xv.row_ptr(i);
        const double* gr = g.row_ptr(i);
        if (!normalize) {
          for (int j = 0; j < cols; ++j) {
            if (dx) (*dx)(i, j) += gr[j] * gv(0, j);
            if (dg) (*dg)(0, j) += gr[j] * xr[j];
            if (db) (*db)(0, j) += gr[j];
          }
          continue;
        }
        double mean = 0.0;
        for (int j = 0; j < cols; ++j) mean += xr[j];
        mean /= cols;
        double var = 0.0;
        for (int j = 0; j < cols; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= cols;
        double inv = 1.0 / std::sqrt(var + kNormEps);
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < cols; ++j) {
          xhat[j] = (xr[j] - mean) * inv;
          dxhat[j] = gr[j] * gv(0, j);
          m1 += dxhat[j];
          m2 += dxhat[j] * xhat[j];
        }
        m1 /= cols;
        m2 /= cols;
        for (int j = 0; j < cols; ++j) {
          if (dx) (*dx)(i, j) += inv * (dxhat[j] - m1 - xhat[j] * m2);
          if (dg) (*dg)(0, j) += gr[j] * xhat[j];
          if (db) (*db)(0, j) += gr[j];
        }
      }
    };
  }
  return r;
}

Var Tape::relu(Var a) {
  Matrix out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0, out.data()[i]);
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& av = t.value(a);
      if (Matrix* da = t.grad_buf(a.id))
        for (size_t i = 0; i < da->size(); ++i)
          if (av.data()[i] > 0.0) da->data()[i] += g.data()[i];
    };
  }
  return r;
}

Var Tape::log(Var a) {
  Matrix out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::log(std::max(out.data()[i], kLogFloor));
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      const Matrix& av = t.value(a);
      if (Matrix* da = t.grad_buf(a.id))
        for (size_t i = 0; i < da->size(); ++i)
          da->data()[i] += g.data()[i] / std::max(av.data()[i], kLogFloor);
    };
  }
  return r;
}

Var Tape::kl_div(Var p, Var q) {
  const Matrix& pv = value(p);
  const Matrix& qv = value(q);
  if (!pv.same_shape(qv))
    throw ShapeError("kl_div: p=" + pv.shape_str() + " q=" + qv.shape_str());
  double acc = 0.0;
  for (size_t i = 0; i < pv.size(); ++i) {
    double pi = pv.data()[i];
    if (pi <= 0.0) continue;
    acc += pi * (std::log(std::max(pi, kLogFloor)) - std::log(std::max(qv.data()[i], kLogFloor)));
  }
  Matrix out(1, 1);
  out(0, 0) = acc;
  Var r = push(std::move(out), needs_grad(p) || needs_grad(q));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [p, q](Tape& t, int out_id) {
      double g = t.nodes_[out_id].grad(0, 0);
      const Matrix& pv = t.value(p);
      const Matrix& qv = t.value(q);
      Matrix* dp = t.grad_buf(p.id);
      Matrix* dq = t.grad_buf(q.id);
      for (size_t i = 0; i < pv.size(); ++i) {
        double pi = std::max(pv.data()[i], kLogFloor);
        double qi = std::max(qv.data()[i], kLogFloor);
        if (dp) dp->data()[i] += g * (std::log(pi) - std::log(qi) + 1.0);
        if (dq) dq->data()[i] -= g * pv.data()[i] / qi;
      }
    };
  }
  return r;
}

Var Tape::pick(Var a, int row, int col) {
  const Matrix& av = value(a);
  if (row < 0 || row >= av.rows() || col < 0 || col >= av.cols())
    throw ContractError("pick: index out of range for " + av.shape_str());
  Matrix out(1, 1);
  out(0, 0) = av(row, col);
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, row, col](Tape& t, int out_id) {
      if (Matrix* da = t.grad_buf(a.id)) (*da)(row, col) += t.nodes_[out_id].grad(0, 0);
    };
  }
  return r;
}

Var Tape::pick_per_row(Var a, std::vector<int> cols) {
  const Matrix& av = value(a);
  if (int(cols.size()) != av.rows())
    throw ShapeError("pick_per_row: " + std::to_string(cols.size()) + " indices for " +
                     av.shape_str());
  for (int c : cols)
    if (c < 0 || c >= av.cols()) throw ContractError("pick_per_row: column out of range");
  Matrix out(av.rows(), 1);
  for (int i = 0; i < av.rows(); ++i) out(i, 0) = av(i, cols[i]);
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a, cols = std::move(cols)](Tape& t, int out_id) {
      const Matrix& g = t.nodes_[out_id].grad;
      if (Matrix* da = t.grad_buf(a.id))
        for (size_t i = 0; i < cols.size(); ++i) (*da)(int(i), cols[i]) += g(int(i), 0);
    };
  }
  return r;
}

Var Tape::sum(Var a) {
  const Matrix& av = value(a);
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
  Matrix out(1, 1);
  out(0, 0) = acc;
  Var r = push(std::move(out), needs_grad(a));
  if (nodes_[r.id].requires_grad) {
    nodes_[r.id].backprop = [a](Tape& t, int out_id) {
      double g = t.nodes_[out_id].grad(0, 0);
      if (Matrix* da = t.grad_buf(a.id))
        for (size_t i = 0; i < da->size(); ++i) da->data()[i] += g;
    };
  }
  return r;
}

void Tape::backward(Var loss) {
  const Node& ln = node_at(loss);
  if (!ln.value.is_scalar())
    throw ContractError("backward: loss must be scalar, got " + ln.value.shape_str());
  if (backward_done_) throw ContractError("backward: tape already swept");
  backward_done_ = true;
  if (!ln.requires_grad) return;  // nothing trainable participated
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.backprop) n.backprop(*this, i);
    if (n.grad_sink) axpy(*n.grad_sink, n.grad);
  }
}

}  // namespace cdap
