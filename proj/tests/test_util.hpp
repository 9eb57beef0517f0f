#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "cdap/matrix.hpp"
#include "cdap/params.hpp"
#include "cdap/rng.hpp"

// Test-side reference computations, kept independent of the tape and the
// OpenMP kernels.
namespace oracle {

inline cdap::Matrix matmul(const cdap::Matrix& a, const cdap::Matrix& b) {
  cdap::Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

// phi(query, bank): attention-weighted sum of bank rows.
inline std::vector<double> phi(const std::vector<double>& query, const cdap::Matrix& bank) {
  std::vector<double> logits(bank.rows());
  for (int i = 0; i < bank.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < bank.cols(); ++j) acc += bank(i, j) * query[j];
    logits[i] = acc;
  }
  std::vector<double> weights = softmax(logits);
  std::vector<double> out(bank.cols(), 0.0);
  for (int i = 0; i < bank.rows(); ++i)
    for (int j = 0; j < bank.cols(); ++j) out[j] += weights[i] * bank(i, j);
  return out;
}

}  // namespace oracle

namespace testutil {

inline cdap::Matrix random_matrix(int rows, int cols, cdap::Rng& rng, double scale = 1.0) {
  cdap::Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

// Loss evaluation hook: builds a fresh graph over the store's parameters and
// returns the loss value; when backward is set it also populates the store's
// gradient slots.
using LossEval = std::function<double(cdap::ParameterStore&, bool backward)>;

struct FdResult {
  double max_rel_err = 0.0;
  std::string worst_param;
};

// Central finite differences over every entry of every parameter.
inline FdResult max_fd_error(cdap::ParameterStore& store, const LossEval& eval,
                             double eps = 1e-5) {
  store.zero_grads();
  eval(store, true);
  std::vector<cdap::Matrix> analytic;
  for (const auto& p : store.params()) analytic.push_back(p.grad);
  store.zero_grads();

  FdResult result;
  for (size_t pi = 0; pi < store.params().size(); ++pi) {
    cdap::Param& p = store.params()[pi];
    for (size_t i = 0; i < p.value.size(); ++i) {
      double saved = p.value.data()[i];
      p.value.data()[i] = saved + eps;
      double up = eval(store, false);
      p.value.data()[i] = saved - eps;
      double down = eval(store, false);
      p.value.data()[i] = saved;
      double fd = (up - down) / (2.0 * eps);
      double g = analytic[pi].data()[i];
      double rel = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-2});
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = p.name;
      }
    }
  }
  return result;
}

}  // namespace testutil
