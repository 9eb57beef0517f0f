#pragma once

#include "cdap/matrix.hpp"

// Dense kernels behind the tape primitives. The default entry points are
// OpenMP-parallel over output rows; each output element is still produced by
// one serial inner loop, so results are bitwise identical for any thread
// count. kernels::serial holds the plain triple-loop reference used by the
// unit tests and the benchmark.
namespace cdap::kernels {

namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);     // a*b
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);  // a*b^T
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);  // a^T*b
void row_softmax(const Matrix& in, Matrix& out);
// out(i,j) = -dist(a row i, b row j); squared or plain euclidean
void pairwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out);
// out(i,0) = -dist(a row i, b row i)
void rowwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out);
}  // namespace serial

void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void row_softmax(const Matrix& in, Matrix& out);
void pairwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out);
void rowwise_neg_dist(const Matrix& a, const Matrix& b, bool squared, Matrix& out);

}  // namespace cdap::kernels
