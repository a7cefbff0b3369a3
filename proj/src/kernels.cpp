#include "metarule/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace metarule::kernels {

namespace {

using Signed = std::int64_t;

inline void spmm_row(const SparseMatrix& X, std::size_t i, const double* B, std::size_t k, double* out) {
  double* dst = out + i * k;
  std::fill(dst, dst + k, 0.0);
  const auto r = X.row(i);
  for (std::size_t p = 0; p < r.size(); ++p) {
    const double v = r.values[p];
    const double* src = B + static_cast<std::size_t>(r.cols[p]) * k;
    for (std::size_t c = 0; c < k; ++c) dst[c] += v * src[c];
  }
}

inline double spmv_row(const SparseMatrix& X, std::size_t i, std::span<const double> w) {
  const auto r = X.row(i);
  double s = 0.0;
  for (std::size_t p = 0; p < r.size(); ++p) s += r.values[p] * w[r.cols[p]];
  return s;
}

inline void project_row(const SparseMatrix& X, std::size_t i, std::span<const Index> a, std::size_t k, double* out) {
  double* dst = out + i * k;
  std::fill(dst, dst + k, 0.0);
  const auto r = X.row(i);
  for (std::size_t p = 0; p < r.size(); ++p) dst[a[r.cols[p]]] += r.values[p];
}

inline double row_dot(const double* a, const double* b, std::size_t k) {
  double s = 0.0;
  for (std::size_t c = 0; c < k; ++c) s += a[c] * b[c];
  return s;
}

}  // namespace

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void spmm_rows(const SparseMatrix& X, const double* B, std::size_t k, double* out) {
  for (std::size_t i = 0; i < X.rows(); ++i) spmm_row(X, i, B, k, out);
}

void spmv(const SparseMatrix& X, std::span<const double> w, std::span<double> out) {
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = spmv_row(X, i, w);
}

void project_rows(const SparseMatrix& X, std::span<const Index> assignment, std::size_t k, double* out) {
  for (std::size_t i = 0; i < X.rows(); ++i) project_row(X, i, assignment, k, out);
}

void multiplicative_update(std::span<double> factor, std::span<const double> numer, std::span<const double> denom,
                           double eps) {
  for (std::size_t e = 0; e < factor.size(); ++e) factor[e] *= numer[e] / (denom[e] + eps);
}

double rowwise_inner(const double* a, const double* b, std::size_t rows, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < rows; ++i) s += row_dot(a + i * k, b + i * k, k);
  return s;
}

void scan_splits(const NodeView& node, std::span<const Index> features, std::span<SplitCandidate> out) {
  std::vector<SplitEntry> scratch;
  for (std::size_t f = 0; f < features.size(); ++f) out[f] = best_split_for_feature(node, features[f], scratch);
}

}  // namespace serial

namespace parallel {

void spmm_rows(const SparseMatrix& X, const double* B, std::size_t k, double* out) {
  const auto n = static_cast<Signed>(X.rows());
#pragma omp parallel for schedule(static)
  for (Signed i = 0; i < n; ++i) spmm_row(X, static_cast<std::size_t>(i), B, k, out);
}

void spmv(const SparseMatrix& X, std::span<const double> w, std::span<double> out) {
  const auto n = static_cast<Signed>(X.rows());
#pragma omp parallel for schedule(static)
  for (Signed i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = spmv_row(X, static_cast<std::size_t>(i), w);
}

void project_rows(const SparseMatrix& X, std::span<const Index> assignment, std::size_t k, double* out) {
  const auto n = static_cast<Signed>(X.rows());
#pragma omp parallel for schedule(static)
  for (Signed i = 0; i < n; ++i) project_row(X, static_cast<std::size_t>(i), assignment, k, out);
}

void multiplicative_update(std::span<double> factor, std::span<const double> numer, std::span<const double> denom,
                           double eps) {
  const auto n = static_cast<Signed>(factor.size());
  double* f = factor.data();
  const double* nu = numer.data();
  const double* de = denom.data();
#pragma omp parallel for simd schedule(static)
  for (Signed e = 0; e < n; ++e) f[e] *= nu[e] / (de[e] + eps);
}

double rowwise_inner(const double* a, const double* b, std::size_t rows, std::size_t k) {
  // per-row partials, then a fixed-order serial sum
  std::vector<double> partial(rows);
  const auto n = static_cast<Signed>(rows);
#pragma omp parallel for schedule(static)
  for (Signed i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    partial[r] = row_dot(a + r * k, b + r * k, k);
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void scan_splits(const NodeView& node, std::span<const Index> features, std::span<SplitCandidate> out) {
  const auto n = static_cast<Signed>(features.size());
#pragma omp parallel
  {
    std::vector<SplitEntry> scratch;
#pragma omp for schedule(dynamic, 64)
    for (Signed f = 0; f < n; ++f)
      out[static_cast<std::size_t>(f)] = best_split_for_feature(node, features[static_cast<std::size_t>(f)], scratch);
  }
}

}  // namespace parallel

}  // namespace metarule::kernels
