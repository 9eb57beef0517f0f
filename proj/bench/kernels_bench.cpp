// Serial reference vs OpenMP kernels. Run with --benchmark_filter=... to
// narrow down; sizes cover the span-bank shapes the model sees and a few
// larger ones where threading pays off.

#include <benchmark/benchmark.h>

#include "cdap/kernels.hpp"
#include "cdap/rng.hpp"

namespace {

using cdap::Matrix;

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  cdap::Rng rng(seed);
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

void bm_matmul_serial(benchmark::State& state) {
  int n = int(state.range(0));
  Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2), out;
  for (auto _ : state) {
    cdap::kernels::serial::matmul(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_matmul_omp(benchmark::State& state) {
  int n = int(state.range(0));
  Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2), out;
  for (auto _ : state) {
    cdap::kernels::matmul(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_pairwise_dist_serial(benchmark::State& state) {
  int n = int(state.range(0));
  Matrix a = random_matrix(n, 32, 3), b = random_matrix(n, 32, 4), out;
  for (auto _ : state) {
    cdap::kernels::serial::pairwise_neg_dist(a, b, true, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_pairwise_dist_omp(benchmark::State& state) {
  int n = int(state.range(0));
  Matrix a = random_matrix(n, 32, 3), b = random_matrix(n, 32, 4), out;
  for (auto _ : state) {
    cdap::kernels::pairwise_neg_dist(a, b, true, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_row_softmax_serial(benchmark::State& state) {
  int n = int(state.range(0));
  Matrix a = random_matrix(n, 256, 5), out;
  for (auto _ : state) {
    cdap::kernels::serial::row_softmax(a, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_row_softmax_omp(benchmark::State& state) {
  int n = int(state.range(0));
  Matrix a = random_matrix(n, 256, 5), out;
  for (auto _ : state) {
    cdap::kernels::row_softmax(a, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(bm_matmul_serial)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_omp)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_pairwise_dist_serial)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_pairwise_dist_omp)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_row_softmax_serial)->Arg(256)->Arg(4096);
BENCHMARK(bm_row_softmax_omp)->Arg(256)->Arg(4096);

BENCHMARK_MAIN();
