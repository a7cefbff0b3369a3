#pragma once

#include <cstddef>
#include <span>

#include "metarule/sparse.hpp"
#include "metarule/split.hpp"

// Data-parallel inner loops. kernels::parallel is what the library calls;
// kernels::serial is the plain reference kept for tests and benchmarks.
// Every parallel kernel partitions its output and never reduces floating
// point values across threads, so both variants agree bit for bit for any
// thread count.
namespace metarule::kernels {

namespace serial {

// out[i*k + c] = sum_f X[i,f] * B[f*k + c]; B holds k contiguous values per column of X.
void spmm_rows(const SparseMatrix& X, const double* B, std::size_t k, double* out);
// out[i] = sum_f X[i,f] * w[f]
void spmv(const SparseMatrix& X, std::span<const double> w, std::span<double> out);
// out[i*k + a[f]] += X[i,f]; out (n*k values) is overwritten.
void project_rows(const SparseMatrix& X, std::span<const Index> assignment, std::size_t k, double* out);
// factor *= numer / (denom + eps)
void multiplicative_update(std::span<double> factor, std::span<const double> numer,
                           std::span<const double> denom, double eps);
// Sum over rows of per-row dot products of two row-major (rows x k) blocks.
double rowwise_inner(const double* a, const double* b, std::size_t rows, std::size_t k);
// Best split per candidate feature of one CART node; out.size() == features.size().
void scan_splits(const NodeView& node, std::span<const Index> features, std::span<SplitCandidate> out);

}  // namespace serial

namespace parallel {

// out[i*k + c] = sum_f X[i,f] * B[f*k + c]; B holds k contiguous values per column of X.
void spmm_rows(const SparseMatrix& X, const double* B, std::size_t k, double* out);
// out[i] = sum_f X[i,f] * w[f]
void spmv(const SparseMatrix& X, std::span<const double> w, std::span<double> out);
// out[i*k + a[f]] += X[i,f]; out (n*k values) is overwritten.
void project_rows(const SparseMatrix& X, std::span<const Index> assignment, std::size_t k, double* out);
// factor *= numer / (denom + eps)
void multiplicative_update(std::span<double> factor, std::span<const double> numer,
                           std::span<const double> denom, double eps);
// Sum over rows of per-row dot products of two row-major (rows x k) blocks.
double rowwise_inner(const double* a, const double* b, std::size_t rows, std::size_t k);
// Best split per candidate feature of one CART node; out.size() == features.size().
void scan_splits(const NodeView& node, std::span<const Index> features, std::span<SplitCandidate> out);

}  // namespace parallel

// Worker threads available to the parallel kernels (1 without OpenMP).
int max_threads() noexcept;

}  // namespace metarule::kernels
