#include "metarule/split.hpp"

#include <algorithm>

namespace metarule {

SplitCandidate best_split_for_feature(const NodeView& node, Index feature, std::vector<SplitEntry>& scratch) {
  SplitCandidate best;
  best.feature = feature;
  scratch.clear();

  ClassCounts present{0, 0};
  const auto col = node.columns.row(feature);
  for (std::size_t p = 0; p < col.size(); ++p) {
    const auto i = col.cols[p];
    if (!node.in_node[i]) continue;
    const auto l = node.labels[i];
    ++present[l];
    scratch.push_back({col.values[p], l == 0 ? ClassCounts{1, 0} : ClassCounts{0, 1}});
  }
  const ClassCounts zeros{node.counts[0] - present[0], node.counts[1] - present[1]};
  if (zeros[0] + zeros[1] > 0) scratch.push_back({0.0, zeros});
  if (scratch.size() < 2) return best;

  std::sort(scratch.begin(), scratch.end(), [](const SplitEntry& a, const SplitEntry& b) { return a.value < b.value; });
  // merge runs of equal values
  std::size_t w = 0;
  for (std::size_t r = 1; r < scratch.size(); ++r) {
    if (scratch[r].value == scratch[w].value) {
      scratch[w].counts[0] += scratch[r].counts[0];
      scratch[w].counts[1] += scratch[r].counts[1];
    } else {
      scratch[++w] = scratch[r];
    }
  }
  scratch.resize(w + 1);

  const std::size_t n = node.counts[0] + node.counts[1];
  const auto parent = ChildImpurity::parent(node.counts);
  ClassCounts left{0, 0};
  for (std::size_t r = 0; r + 1 < scratch.size(); ++r) {
    left[0] += scratch[r].counts[0];
    left[1] += scratch[r].counts[1];
    const std::size_t nl = left[0] + left[1];
    if (nl < node.min_leaf || n - nl < node.min_leaf) continue;
    const auto imp = ChildImpurity::of(node.counts, left);
    if (!(imp < parent) || (best.valid && !(imp < best.impurity))) continue;
    const double lo = scratch[r].value, hi = scratch[r + 1].value;
    double mid = lo + (hi - lo) / 2.0;
    if (mid >= hi) mid = lo;
    best.threshold = mid;
    best.impurity = imp;
    best.reduction = gini_reduction(node.counts, left);
    best.valid = true;
  }
  return best;
}

SplitCandidate select_best(std::span<const SplitCandidate> per_feature) {
  SplitCandidate best;
  for (const auto& c : per_feature)
    if (better_split(c, best)) best = c;
  return best;
}

}  // namespace metarule
