#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "cdap/error.hpp"

namespace cdap {

// Dense row-major matrix of doubles. Row vectors are 1xD, column vectors Dx1,
// scalars 1x1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw ShapeError("Matrix: negative dimension");
  }
  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = int(init.size());
    cols_ = rows_ > 0 ? int(init.begin()->size()) : 0;
    data_.reserve(size_t(rows_) * cols_);
    for (const auto& row : init) {
      if (int(row.size()) != cols_) throw ShapeError("Matrix: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
  static Matrix full(int rows, int cols, double v) {
    Matrix m(rows, cols);
    for (auto& x : m.data_) x = v;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  std::string shape_str() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
  }

  double& operator()(int r, int c) { return data_[size_t(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[size_t(r) * cols_ + c]; }
  double* row_ptr(int r) { return data_.data() + size_t(r) * cols_; }
  const double* row_ptr(int r) const { return data_.data() + size_t(r) * cols_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double scalar() const {
    if (!is_scalar()) throw ShapeError("Matrix::scalar on " + shape_str());
    return data_[0];
  }

  void fill(double v) {
    for (auto& x : data_) x = v;
  }

  bool all_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace cdap
