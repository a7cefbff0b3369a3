#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metarule/dense.hpp"
#include "metarule/sparse.hpp"

namespace metarule {

enum class FactorMethod { NMF, SVD };

std::string to_string(FactorMethod m);
FactorMethod factor_method_from_string(const std::string& s);

struct FitMeta {
  std::size_t iterations = 0;
  double reconstruction_error = 0.0;  // Frobenius norm of X - L R
  std::uint64_t seed = 0;
  std::vector<double> objective_trace;  // NMF: squared error, initial point first
  std::vector<double> singular_values;  // SVD: descending
};

// X (n x m) ~ L (n x k) R (k x m).
struct FactorModel {
  FactorMethod method = FactorMethod::NMF;
  std::size_t k = 0;
  RowMatrix L;
  ColMatrix R;
  FitMeta meta;
};

struct NmfOptions {
  std::size_t max_iter = 200;
  // Stop once the relative objective decrease of an iteration falls below tol.
  double tol = 1e-4;
};

// Lee-Seung multiplicative updates for the Frobenius objective, from a
// seeded uniform (0,1] init scaled by sqrt(mean(X)/k).
FactorModel fit_nmf(const SparseMatrix& X, std::size_t k, std::uint64_t seed, const NmfOptions& opts = {});

struct SvdOptions {
  std::size_t oversample = 10;
  std::size_t power_iterations = 6;
};

// Truncated SVD by randomized subspace iteration. L = U_k S_k, R = V_k^T;
// each right singular vector is flipped so its largest-magnitude entry is
// positive.
FactorModel fit_svd(const SparseMatrix& X, std::size_t k, std::uint64_t seed, const SvdOptions& opts = {});

}  // namespace metarule
