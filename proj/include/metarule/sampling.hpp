#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metarule/sparse.hpp"

namespace metarule {

// Train/validation/test partition. Index arrays are sorted ascending.
struct SplitPlan {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
  double alpha = 0.8;
  double beta = 0.8;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

struct FoldPlan {
  std::size_t n_folds = 0;
  std::vector<std::size_t> fold_assignments;
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  // Everything outside `fold`, ascending.
  std::vector<std::size_t> rest_indices(std::size_t fold) const;
};

struct BootstrapSample {
  std::vector<std::size_t> indices;
  std::uint64_t seed = 0;
};

// Stratified by label. Test gets floor((1-alpha) n), validation
// floor(alpha (1-beta) n); remainders go to training.
SplitPlan split_train_val_test(std::span<const Label> y, double alpha, double beta, std::uint64_t seed);
inline SplitPlan split_train_val_test(const Dataset& d, double alpha, double beta, std::uint64_t seed) {
  return split_train_val_test(d.y, alpha, beta, seed);
}

// Splits `pool` (indices into y) into a training part and a holdout part of
// floor((1-train_fraction) |pool|) instances, stratified. Returns {train, holdout}.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_holdout(
    std::span<const Label> y, std::span<const std::size_t> pool, double train_fraction, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr);

FoldPlan make_folds(std::span<const Label> y, std::size_t n_folds, std::uint64_t seed);
inline FoldPlan make_folds(const Dataset& d, std::size_t n_folds, std::uint64_t seed) {
  return make_folds(d.y, n_folds, seed);
}

BootstrapSample bootstrap_sample(std::size_t train_size, std::uint64_t seed);

}  // namespace metarule
