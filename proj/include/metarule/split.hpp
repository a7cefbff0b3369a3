#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "metarule/sparse.hpp"

namespace metarule {

using ClassCounts = std::array<std::size_t, 2>;

inline double gini_of(std::size_t c0, std::size_t c1) noexcept {
  const double n = static_cast<double>(c0 + c1);
  return 2.0 * static_cast<double>(c0) * static_cast<double>(c1) / (n * n);
}

// Size-weighted child impurity, kept as an exact fraction so that split
// comparisons and tie-breaking do not depend on rounding:
//   N * weighted_gini / 2 = (l0 l1 nr + r0 r1 nl) / (nl nr).
struct ChildImpurity {
  unsigned __int128 num = 0;
  unsigned __int128 den = 1;

  static ChildImpurity of(ClassCounts parent, ClassCounts left) noexcept {
    const unsigned __int128 l0 = left[0], l1 = left[1];
    const unsigned __int128 r0 = parent[0] - left[0], r1 = parent[1] - left[1];
    const unsigned __int128 nl = l0 + l1, nr = r0 + r1;
    return {l0 * l1 * nr + r0 * r1 * nl, nl * nr};
  }
  // The parent node on the same scale: n0 n1 / N.
  static ChildImpurity parent(ClassCounts parent) noexcept {
    return {static_cast<unsigned __int128>(parent[0]) * parent[1],
            static_cast<unsigned __int128>(parent[0]) + parent[1]};
  }
  friend bool operator<(const ChildImpurity& a, const ChildImpurity& b) noexcept {
    return a.num * b.den < b.num * a.den;
  }
  friend bool operator==(const ChildImpurity& a, const ChildImpurity& b) noexcept {
    return a.num * b.den == b.num * a.den;
  }
};

// Parent impurity minus the size-weighted impurity of the two children.
inline double gini_reduction(ClassCounts parent, ClassCounts left) noexcept {
  const std::size_t n = parent[0] + parent[1];
  const std::size_t nl = left[0] + left[1];
  const std::size_t nr = n - nl;
  const std::size_t r0 = parent[0] - left[0], r1 = parent[1] - left[1];
  const double weighted = (2.0 * static_cast<double>(left[0]) * static_cast<double>(left[1]) / static_cast<double>(nl) +
                           2.0 * static_cast<double>(r0) * static_cast<double>(r1) / static_cast<double>(nr)) /
                          static_cast<double>(n);
  return gini_of(parent[0], parent[1]) - weighted;
}

struct SplitCandidate {
  Index feature = 0;
  double threshold = 0.0;
  double reduction = 0.0;
  ChildImpurity impurity;
  bool valid = false;
};

// Strictly better: lower child impurity, then lower feature, then lower threshold.
inline bool better_split(const SplitCandidate& a, const SplitCandidate& b) noexcept {
  if (!a.valid) return false;
  if (!b.valid) return true;
  if (a.impurity < b.impurity) return true;
  if (b.impurity < a.impurity) return false;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

// One node of a CART fit, seen through the column-major copy of the data.
// `columns` holds the transposed matrix: row f lists (instance, value) for
// the stored entries of feature f; absent entries are zeros.
struct NodeView {
  const SparseMatrix& columns;
  std::span<const Label> labels;
  std::span<const char> in_node;
  ClassCounts counts;
  std::size_t min_leaf = 1;
};

struct SplitEntry {
  double value;
  ClassCounts counts;
};

// Best threshold of one feature: midpoints between consecutive distinct
// values, invalid when no threshold strictly lowers impurity.
SplitCandidate best_split_for_feature(const NodeView& node, Index feature, std::vector<SplitEntry>& scratch);

SplitCandidate select_best(std::span<const SplitCandidate> per_feature);

}  // namespace metarule
