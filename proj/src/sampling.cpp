#include "metarule/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "metarule/error.hpp"
#include "metarule/rng.hpp"

namespace metarule {

namespace {

// floor(x) robust to representation error such as 0.2*100 = 19.999...
std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + 1e-9)); }

// Largest-remainder apportionment of `total` over groups proportional to
// `sizes`. Ties in remainders go to the lower group index.
std::vector<std::size_t> apportion(std::span<const std::size_t> sizes, std::size_t total) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> quota(sizes.size(), 0);
  if (n == 0) return quota;
  std::vector<std::pair<std::size_t, std::size_t>> rem;  // (remainder numerator, group)
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    quota[g] = sizes[g] * total / n;
    assigned += quota[g];
    rem.emplace_back(sizes[g] * total % n, g);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < rem.size(); ++r) {
    if (quota[rem[r].second] < sizes[rem[r].second]) {
      ++quota[rem[r].second];
      ++assigned;
    }
  }
  return quota;
}

// Stratified draw of consecutive blocks of the given sizes from `pool`.
// Block 0 receives everything left over.
std::vector<std::vector<std::size_t>> stratified_blocks(std::span<const Label> y,
                                                        std::span<const std::size_t> pool,
                                                        std::span<const std::size_t> block_sizes,
                                                        std::uint64_t seed,
                                                        std::vector<std::string>* warnings) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (auto i : pool) by_class[y[i]].push_back(i);
  Rng rng(seed);
  for (auto& c : by_class) rng.shuffle(c.begin(), c.end());

  const std::array<std::size_t, 2> class_sizes{by_class[0].size(), by_class[1].size()};
  std::vector<std::vector<std::size_t>> blocks(block_sizes.size());
  std::array<std::size_t, 2> cursor{0, 0};
  for (std::size_t b = 1; b < block_sizes.size(); ++b) {
    std::array<std::size_t, 2> remaining{class_sizes[0] - cursor[0], class_sizes[1] - cursor[1]};
    const auto q = apportion(remaining, block_sizes[b]);
    for (std::size_t c = 0; c < 2; ++c) {
      blocks[b].insert(blocks[b].end(), by_class[c].begin() + cursor[c], by_class[c].begin() + cursor[c] + q[c]);
      cursor[c] += q[c];
    }
  }
  for (std::size_t c = 0; c < 2; ++c) blocks[0].insert(blocks[0].end(), by_class[c].begin() + cursor[c], by_class[c].end());
  for (auto& b : blocks) std::sort(b.begin(), b.end());

  if (warnings) {
    for (std::size_t c = 0; c < 2; ++c) {
      if (class_sizes[c] == 0) continue;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].empty()) continue;
        const bool present = std::any_of(blocks[b].begin(), blocks[b].end(), [&](auto i) { return y[i] == c; });
        if (!present)
          warnings->push_back("class " + std::to_string(c) + " absent from partition " + std::to_string(b) +
                              " (too few instances to stratify)");
      }
    }
  }
  return blocks;
}

}  // namespace

SplitPlan split_train_val_test(std::span<const Label> y, double alpha, double beta, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("beta must lie in (0,1]");
  const auto n = y.size();
  const auto n_test = floor_count((1.0 - alpha) * static_cast<double>(n));
  const auto n_val = floor_count(alpha * (1.0 - beta) * static_cast<double>(n));

  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  SplitPlan plan;
  plan.alpha = alpha;
  plan.beta = beta;
  plan.seed = seed;
  const std::size_t sizes[] = {0, n_val, n_test};
  auto blocks = stratified_blocks(y, pool, sizes, seed, &plan.warnings);
  plan.train_idx = std::move(blocks[0]);
  plan.val_idx = std::move(blocks[1]);
  plan.test_idx = std::move(blocks[2]);
  return plan;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_holdout(
    std::span<const Label> y, std::span<const std::size_t> pool, double train_fraction, std::uint64_t seed,
    std::vector<std::string>* warnings) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw DomainError("train fraction must lie in (0,1]");
  const auto n_holdout = floor_count((1.0 - train_fraction) * static_cast<double>(pool.size()));
  const std::size_t sizes[] = {0, n_holdout};
  auto blocks = stratified_blocks(y, pool, sizes, seed, warnings);
  return {std::move(blocks[0]), std::move(blocks[1])};
}

FoldPlan make_folds(std::span<const Label> y, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw DomainError("need at least 2 folds");
  if (n_folds > y.size()) throw DomainError("more folds than instances");

  // Shuffle each class, lay the classes end to end and deal positions
  // round-robin: fold sizes and per-fold class counts then differ by <= 1.
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] ? 1 : 0].push_back(i);
  Rng rng(seed);
  for (auto& c : by_class) rng.shuffle(c.begin(), c.end());

  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.fold_assignments.assign(y.size(), 0);
  std::size_t pos = 0;
  for (const auto& c : by_class)
    for (auto i : c) plan.fold_assignments[i] = pos++ % n_folds;
  return plan;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_assignments.size(); ++i)
    if (fold_assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::rest_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_assignments.size(); ++i)
    if (fold_assignments[i] != fold) out.push_back(i);
  return out;
}

BootstrapSample bootstrap_sample(std::size_t train_size, std::uint64_t seed) {
  if (train_size == 0) throw DomainError("bootstrap needs a nonempty source");
  BootstrapSample s;
  s.seed = seed;
  s.indices.resize(train_size);
  Rng rng(seed);
  for (auto& i : s.indices) i = static_cast<std::size_t>(rng.below(train_size));
  return s;
}

}  // namespace metarule
