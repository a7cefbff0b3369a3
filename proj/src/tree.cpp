#include "metarule/tree.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "metarule/error.hpp"
#include "metarule/kernels.hpp"

namespace metarule {

std::string to_string(RepresentationKind k) {
  switch (k) {
    case RepresentationKind::FG: return "FG";
    case RepresentationKind::DDMF: return "DDMF";
    case RepresentationKind::DomainMF: return "DomainMF";
  }
  return "FG";
}

TreeInput::TreeInput(SparseMatrix rows) : rows_(std::move(rows)), cols_(rows_.transpose()) {}

TreeInput::TreeInput(const RowMatrix& dense)
    : TreeInput(SparseMatrix::from_dense(static_cast<std::size_t>(dense.rows()), static_cast<std::size_t>(dense.cols()),
                                         std::span<const double>(dense.data(), static_cast<std::size_t>(dense.size())))) {}

std::size_t DecisionTree::depth() const noexcept {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::tie_leaves() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf() && n.majority_tie; }));
}

double gini(ClassCounts counts) {
  if (counts[0] + counts[1] == 0) throw DomainError("gini of an empty node");
  return gini_of(counts[0], counts[1]);
}

namespace {

ClassCounts count_labels(std::span<const Label> labels, std::span<const std::size_t> rows) {
  ClassCounts c{0, 0};
  for (auto i : rows) ++c[labels[i]];
  return c;
}

SplitCandidate scan(const TreeInput& X, std::span<const Label> labels, std::span<const Index> features,
                    std::span<const char> in_node, ClassCounts counts, std::size_t min_leaf, bool parallel) {
  NodeView node{X.by_column(), labels, in_node, counts, min_leaf};
  std::vector<SplitCandidate> per_feature(features.size());
  if (parallel) kernels::parallel::scan_splits(node, features, per_feature);
  else kernels::serial::scan_splits(node, features, per_feature);
  return select_best(per_feature);
}

class CartBuilder {
 public:
  CartBuilder(const TreeInput& X, std::span<const Label> y, const CartOptions& opts)
      : X_(X), y_(y), opts_(opts), in_node_(X.rows(), 0), features_(X.features()) {
    std::iota(features_.begin(), features_.end(), Index{0});
  }

  void grow(DecisionTree& tree, std::vector<std::size_t> rows, std::size_t depth) {
    const auto id = tree.nodes.size();
    tree.nodes.emplace_back();
    const auto counts = count_labels(y_, rows);
    {
      auto& node = tree.nodes[id];
      node.counts = counts;
      node.depth = depth;
      node.label = counts[1] > counts[0] ? 1 : 0;
      node.majority_tie = counts[0] == counts[1];
    }
    const bool pure = counts[0] == 0 || counts[1] == 0;
    if (depth >= opts_.max_depth || pure || rows.size() < 2 * opts_.min_leaf) return;

    for (auto i : rows) in_node_[i] = 1;
    const auto best = scan(X_, y_, features_, in_node_, counts, opts_.min_leaf, opts_.parallel);
    for (auto i : rows) in_node_[i] = 0;
    if (!best.valid) return;

    std::vector<std::size_t> left, right;
    for (auto i : rows) (X_.value(i, best.feature) <= best.threshold ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[id].feature = best.feature;
    tree.nodes[id].threshold = best.threshold;
    tree.nodes[id].left = tree.nodes.size();
    grow(tree, std::move(left), depth + 1);
    tree.nodes[id].right = tree.nodes.size();
    grow(tree, std::move(right), depth + 1);
  }

 private:
  const TreeInput& X_;
  std::span<const Label> y_;
  const CartOptions& opts_;
  std::vector<char> in_node_;
  std::vector<Index> features_;
};

template <class ValueAt>
Label route(const DecisionTree& tree, ValueAt&& value_at) {
  std::size_t id = 0;
  while (!tree.nodes[id].is_leaf()) {
    const auto& n = tree.nodes[id];
    id = value_at(static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[id].label;
}

void check_dimension(const DecisionTree& tree, std::size_t cols) {
  if (cols != tree.feature_dimension)
    throw DomainError("tree expects " + std::to_string(tree.feature_dimension) + " features, got " +
                      std::to_string(cols));
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::optional<SplitCandidate> best_split(const TreeInput& X, std::span<const Label> labels,
                                         std::span<const Index> candidate_features,
                                         std::span<const std::size_t> rows, std::size_t min_leaf, bool parallel) {
  if (labels.size() != X.rows()) throw DomainError("label count does not match row count");
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(X.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  if (rows.size() < 2) return std::nullopt;
  for (auto f : candidate_features)
    if (f >= X.features()) throw DomainError("candidate feature out of range");
  std::vector<char> in_node(X.rows(), 0);
  for (auto i : rows) in_node[i] = 1;
  const auto best = scan(X, labels, candidate_features, in_node, count_labels(labels, rows), min_leaf, parallel);
  if (!best.valid) return std::nullopt;
  return best;
}

DecisionTree fit_cart(const TreeInput& X, std::span<const Label> y_hat, const CartOptions& opts,
                      RepresentationKind kind) {
  if (X.rows() == 0) throw DomainError("cannot fit a tree on empty data");
  if (y_hat.size() != X.rows()) throw DomainError("label count does not match row count");
  if (opts.max_depth < 1) throw DomainError("max_depth must be at least 1");
  if (opts.min_leaf < 1) throw DomainError("min_leaf must be at least 1");
  for (auto l : y_hat)
    if (l > 1) throw DomainError("labels must be 0 or 1");

  DecisionTree tree;
  tree.max_depth = opts.max_depth;
  tree.kind = kind;
  tree.feature_dimension = X.features();
  std::vector<std::size_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  CartBuilder(X, y_hat, opts).grow(tree, std::move(rows), 0);
  return tree;
}

std::vector<Label> predict(const DecisionTree& tree, const TreeInput& X) { return predict(tree, X.by_row()); }

std::vector<Label> predict(const DecisionTree& tree, const SparseMatrix& X) {
  check_dimension(tree, X.cols());
  std::vector<Label> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = route(tree, [&](std::size_t f) { return X.at(i, f); });
  return out;
}

std::vector<Label> predict(const DecisionTree& tree, const RowMatrix& X) {
  check_dimension(tree, static_cast<std::size_t>(X.cols()));
  std::vector<Label> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out[static_cast<std::size_t>(i)] = route(tree, [&](std::size_t f) { return X(i, static_cast<Eigen::Index>(f)); });
  return out;
}

std::size_t RuleSet::max_antecedents() const noexcept {
  std::size_t m = 0;
  for (const auto& r : rules) m = std::max(m, r.antecedents.size());
  return m;
}

RuleSet extract_rules(const DecisionTree& tree) {
  RuleSet out;
  out.kind = tree.kind;
  if (tree.nodes.empty()) return out;

  std::vector<Antecedent> path;
  auto visit = [&](auto&& self, std::size_t id) -> void {
    const auto& n = tree.nodes[id];
    if (n.is_leaf()) {
      Rule r;
      // merge per (feature, relation): tightest bound wins
      for (const auto& a : path) {
        auto it = std::find_if(r.antecedents.begin(), r.antecedents.end(), [&](const Antecedent& b) {
          return b.feature == a.feature && b.relation == a.relation;
        });
        if (it == r.antecedents.end()) r.antecedents.push_back(a);
        else if (a.relation == Relation::LessEqual) it->threshold = std::min(it->threshold, a.threshold);
        else it->threshold = std::max(it->threshold, a.threshold);
      }
      r.label = n.label;
      r.coverage = n.counts[0] + n.counts[1];
      r.purity = r.coverage ? static_cast<double>(n.counts[n.label]) / static_cast<double>(r.coverage) : 0.0;
      out.rules.push_back(std::move(r));
      return;
    }
    const auto f = static_cast<Index>(n.feature);
    path.push_back({f, Relation::LessEqual, n.threshold});
    self(self, n.left);
    path.back() = {f, Relation::Greater, n.threshold};
    self(self, n.right);
    path.pop_back();
  };
  visit(visit, 0);
  return out;
}

std::vector<Label> predict_rules(const RuleSet& rules, const TreeInput& X) {
  std::vector<Label> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    std::size_t matched = 0;
    for (const auto& r : rules.rules) {
      const bool ok = std::all_of(r.antecedents.begin(), r.antecedents.end(),
                                  [&](const Antecedent& a) { return a.holds(X.value(i, a.feature)); });
      if (ok) {
        out[i] = r.label;
        ++matched;
      }
    }
    if (matched != 1) throw NumericalError("instance " + std::to_string(i) + " matched " + std::to_string(matched) + " rules");
  }
  return out;
}

std::vector<Index> feature_set(const DecisionTree& tree) {
  std::vector<Index> out;
  for (const auto& n : tree.nodes)
    if (!n.is_leaf()) out.push_back(static_cast<Index>(n.feature));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<RankedFeature> impurity_reduction_ranking(const TreeInput& X, std::span<const Label> y_hat,
                                                      std::size_t top_n) {
  if (y_hat.size() != X.rows()) throw DomainError("label count does not match row count");
  std::vector<Index> features(X.features());
  std::iota(features.begin(), features.end(), Index{0});
  std::vector<char> in_node(X.rows(), 1);
  std::vector<std::size_t> all(X.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  NodeView node{X.by_column(), y_hat, in_node, count_labels(y_hat, all), 1};
  std::vector<SplitCandidate> per_feature(features.size());
  kernels::parallel::scan_splits(node, features, per_feature);

  // invalid candidates rank as zero reduction, after every valid one
  std::stable_sort(per_feature.begin(), per_feature.end(), [](const SplitCandidate& a, const SplitCandidate& b) {
    if (a.valid != b.valid) return a.valid;
    if (!a.valid) return false;
    return a.impurity < b.impurity;
  });
  std::vector<RankedFeature> out;
  for (std::size_t r = 0; r < per_feature.size() && r < top_n; ++r)
    out.push_back({per_feature[r].feature, per_feature[r].valid ? per_feature[r].reduction : 0.0});
  return out;
}

std::string format_rules(const RuleSet& rules, const std::vector<std::string>& names) {
  std::string out;
  for (const auto& r : rules.rules) {
    out += "IF ";
    if (r.antecedents.empty()) out += "TRUE";
    for (std::size_t a = 0; a < r.antecedents.size(); ++a) {
      const auto& ant = r.antecedents[a];
      if (a) out += " AND ";
      out += ant.feature < names.size() ? names[ant.feature] : "x" + std::to_string(ant.feature);
      out += ant.relation == Relation::LessEqual ? " ≤ " : " > ";
      out += format_number(ant.threshold);
    }
    out += " THEN class=" + std::to_string(r.label) + " [coverage=" + std::to_string(r.coverage) +
           ", purity=" + format_number(r.purity) + "]\n";
  }
  return out;
}

nlohmann::json rules_to_json(const RuleSet& rules, const std::vector<std::string>& names,
                             const std::vector<std::vector<std::string>>* annotations) {
  nlohmann::json out;
  out["representation"] = to_string(rules.kind);
  out["n_rules"] = rules.rules.size();
  out["max_antecedents"] = rules.max_antecedents();
  auto& arr = out["rules"] = nlohmann::json::array();
  for (const auto& r : rules.rules) {
    nlohmann::json jr;
    auto& conds = jr["conditions"] = nlohmann::json::array();
    for (const auto& a : r.antecedents) {
      nlohmann::json c;
      c["feature"] = a.feature < names.size() ? names[a.feature] : "x" + std::to_string(a.feature);
      c["index"] = a.feature;
      c["op"] = a.relation == Relation::LessEqual ? "<=" : ">";
      c["threshold"] = a.threshold;
      if (annotations && a.feature < annotations->size()) c["top_features"] = (*annotations)[a.feature];
      conds.push_back(std::move(c));
    }
    jr["class"] = r.label;
    jr["coverage"] = r.coverage;
    jr["purity"] = r.purity;
    arr.push_back(std::move(jr));
  }
  return out;
}

}  // namespace metarule
