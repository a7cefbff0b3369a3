// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to vary the
// worker count; both variants produce identical results.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "metarule/kernels.hpp"
#include "metarule/rng.hpp"
#include "metarule/sparse.hpp"

using namespace metarule;

namespace {

SparseMatrix make_matrix(std::size_t n, std::size_t m, std::size_t per_row, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = 0; e < per_row; ++e) t.push_back({i, static_cast<std::size_t>(rng.below(m)), 1.0});
  return SparseMatrix::from_triplets(n, m, std::move(t));
}

const SparseMatrix& matrix() {
  static const SparseMatrix X = make_matrix(4000, 5000, 40, 1);
  return X;
}

template <bool Parallel>
void BM_spmm(benchmark::State& state) {
  const auto& X = matrix();
  const auto k = static_cast<std::size_t>(state.range(0));
  std::vector<double> B(X.cols() * k, 0.5), out(X.rows() * k);
  for (auto _ : state) {
    if constexpr (Parallel) kernels::parallel::spmm_rows(X, B.data(), k, out.data());
    else kernels::serial::spmm_rows(X, B.data(), k, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_project(benchmark::State& state) {
  const auto& X = matrix();
  const std::size_t k = 50;
  std::vector<Index> a(X.cols());
  for (std::size_t f = 0; f < a.size(); ++f) a[f] = static_cast<Index>(f % k);
  std::vector<double> out(X.rows() * k);
  for (auto _ : state) {
    if constexpr (Parallel) kernels::parallel::project_rows(X, a, k, out.data());
    else kernels::serial::project_rows(X, a, k, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_scan_splits(benchmark::State& state) {
  const auto& X = matrix();
  static const SparseMatrix cols = X.transpose();
  std::vector<Label> y(X.rows());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<Label>(mix64(i) & 1u);
  std::vector<char> in(X.rows(), 1);
  ClassCounts counts{0, 0};
  for (auto l : y) ++counts[l];
  NodeView node{cols, y, in, counts, 1};
  std::vector<Index> features(X.cols());
  std::iota(features.begin(), features.end(), Index{0});
  std::vector<SplitCandidate> out(features.size());
  for (auto _ : state) {
    if constexpr (Parallel) kernels::parallel::scan_splits(node, features, out);
    else kernels::serial::scan_splits(node, features, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_spmm<false>)->Arg(10)->Arg(100);
BENCHMARK(BM_spmm<true>)->Arg(10)->Arg(100);
BENCHMARK(BM_project<false>);
BENCHMARK(BM_project<true>);
BENCHMARK(BM_scan_splits<false>);
BENCHMARK(BM_scan_splits<true>);

BENCHMARK_MAIN();
