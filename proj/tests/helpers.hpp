#pragma once

#include <vector>

#include "metarule/rng.hpp"
#include "metarule/sparse.hpp"

namespace testing {

inline metarule::SparseMatrix dense(std::size_t n, std::size_t m, const std::vector<double>& v) {
  return metarule::SparseMatrix::from_dense(n, m, v);
}

// Random sparse matrix with entries in {1..max_value} at the given density.
inline metarule::SparseMatrix random_sparse(std::size_t n, std::size_t m, double density, std::uint64_t seed,
                                            int max_value = 1) {
  metarule::Rng rng(seed);
  std::vector<double> v(n * m, 0.0);
  for (auto& x : v)
    if (rng.uniform() < density) x = 1.0 + static_cast<double>(rng.below(static_cast<std::uint64_t>(max_value)));
  return metarule::SparseMatrix::from_dense(n, m, v);
}

inline std::vector<metarule::Label> random_labels(std::size_t n, std::uint64_t seed, double p = 0.5) {
  metarule::Rng rng(seed);
  std::vector<metarule::Label> y(n);
  for (auto& l : y) l = rng.uniform() < p ? 1 : 0;
  return y;
}

}  // namespace testing
