#include "cdap/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace cdap::kernels {

namespace {

void check_matmul(const Matrix& a, const Matrix& b, int ak, int bk, const char* op) {
  int a_inner = ak;
  int b_inner = bk;
  if (a_inner != b_inner) {
    throw ShapeError(std::string(op) + ": inner dimensions differ, a=" + a.shape_str() +
                     " b=" + b.shape_str());
  }
}

inline double neg_dist(const double* x, const double* y, int d, bool squared) {
  double acc = 0.0;
  for (int k = 0; k < d; ++k) {
    double diff = x[k] - y[k];
    acc += diff * diff;
  }
  if (squared) return -acc;
  return -std::sqrt(acc);
}

inline void softmax_row(const double* in, double* out, int n) {
  double mx = in[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, in[j]);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    out[j] = std::exp(in[j] - mx);
    sum += out[j];
  }
  for (int j = 0; j < n; ++j) out[j] /= sum;
}

// Parallelising tiny matrices costs more than it saves.
inline bool worth_threads(long long work) { return work >= 1 << 16; }

}  // namespace

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, a.cols(), b.rows(), "matmul");
  out = Matrix(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      const double* brow = b.row_ptr(k);
      double* orow = out.row_ptr(i);
      for (int j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, a.cols(), b.cols(), "matmul_nt");
  out = Matrix(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      const double* arow = a.row_ptr(i);
      const double* brow = b.row_ptr(j);
      for (int k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, a.rows(), b.rows(), "matmul_tn");
  out = Matrix(a.cols(), b.cols());
  for (int i = 0; i < a.cols(); ++i)
    for (int k = 0; k < a.rows(); ++k) {
      double aki = a(k, i);
      const double* brow = b.row_ptr(k);
      double* orow = out.row_ptr(i);
      for (int j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
}

void row_softmax(const Matrix& in, Matrix& out) {
  if (in.cols() == 0) throw ShapeError("row_softmax: empty rows " + in.shape_str());
  out = Matrix(in.rows(), in.cols());
  for (int i = 0; i < in.rows(); ++i) softmax_row(in.row_ptr(i), out.row_ptr(i), in.cols());
}

void pairwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out) {
  check_matmul(a, b, a.cols(), b.cols(), "pairwise_neg_dist");
  out = Matrix(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j)
      out(i, j) = neg_dist(a.row_ptr(i), b.row_ptr(j), a.cols(), squared);
}

void rowwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out) {
  if (!a.same_shape(b))
    throw ShapeError("rowwise_neg_dist: a=" + a.shape_str() + " b=" + b.shape_str());
  out = Matrix(a.rows(), 1);
  for (int i = 0; i < a.rows(); ++i)
    out(i, 0) = neg_dist(a.row_ptr(i), b.row_ptr(i), a.cols(), squared);
}

}  // namespace serial

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, a.cols(), b.rows(), "matmul");
  out = Matrix(a.rows(), b.cols());
  long long work = (long long)a.rows() * a.cols() * b.cols();
#pragma omp parallel for schedule(static) if (worth_threads(work))
  for (int i = 0; i < a.rows(); ++i) {
    double* orow = out.row_ptr(i);
    for (int k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, a.cols(), b.cols(), "matmul_nt");
  out = Matrix(a.rows(), b.rows());
  long long work = (long long)a.rows() * a.cols() * b.rows();
#pragma omp parallel for schedule(static) if (worth_threads(work))
  for (int i = 0; i < a.rows(); ++i) {
    const double* arow = a.row_ptr(i);
    for (int j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      const double* brow = b.row_ptr(j);
      for (int k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, a.rows(), b.rows(), "matmul_tn");
  out = Matrix(a.cols(), b.cols());
  long long work = (long long)a.cols() * a.rows() * b.cols();
  // Parallel over output rows i; the k loop stays inside each thread.
#pragma omp parallel for schedule(static) if (worth_threads(work))
  for (int i = 0; i < a.cols(); ++i) {
    double* orow = out.row_ptr(i);
    for (int k = 0; k < a.rows(); ++k) {
      double aki = a(k, i);
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
}

void row_softmax(const Matrix& in, Matrix& out) {
  if (in.cols() == 0) throw ShapeError("row_softmax: empty rows " + in.shape_str());
  out = Matrix(in.rows(), in.cols());
  long long work = (long long)in.rows() * in.cols();
#pragma omp parallel for schedule(static) if (worth_threads(work))
  for (int i = 0; i < in.rows(); ++i) softmax_row(in.row_ptr(i), out.row_ptr(i), in.cols());
}

void pairwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out) {
  check_matmul(a, b, a.cols(), b.cols(), "pairwise_neg_dist");
  out = Matrix(a.rows(), b.rows());
  long long work = (long long)a.rows() * b.rows() * a.cols();
#pragma omp parallel for schedule(static) if (worth_threads(work))
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j)
      out(i, j) = neg_dist(a.row_ptr(i), b.row_ptr(j), a.cols(), squared);
}

void rowwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out) {
  if (!a.same_shape(b))
    throw ShapeError("rowwise_neg_dist: a=" + a.shape_str() + " b=" + b.shape_str());
  out = Matrix(a.rows(), 1);
#pragma omp parallel for schedule(static) if (worth_threads((long long)a.rows() * a.cols()))
  for (int i = 0; i < a.rows(); ++i)
    out(i, 0) = neg_dist(a.row_ptr(i), b.row_ptr(i), a.cols(), squared);
}

}  // namespace cdap::kernels
