#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metarule/dense.hpp"
#include "metarule/sparse.hpp"
#include "metarule/split.hpp"

namespace metarule {

enum class RepresentationKind { FG, DDMF, DomainMF };

std::string to_string(RepresentationKind k);

// Feature matrix for tree induction: row-major for routing instances,
// column-major (stored transposed) for scanning split candidates. Sparse
// fine-grained data and dense metafeature matrices both land here; absent
// entries are zeros.
class TreeInput {
 public:
  explicit TreeInput(SparseMatrix rows);
  explicit TreeInput(const RowMatrix& dense);

  std::size_t rows() const noexcept { return rows_.rows(); }
  std::size_t features() const noexcept { return rows_.cols(); }
  const SparseMatrix& by_row() const noexcept { return rows_; }
  const SparseMatrix& by_column() const noexcept { return cols_; }
  double value(std::size_t i, std::size_t f) const noexcept { return rows_.at(i, f); }

 private:
  SparseMatrix rows_;
  SparseMatrix cols_;
};

struct TreeNode {
  // -1 for leaves
  std::int64_t feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  Label label = 0;
  ClassCounts counts{0, 0};
  bool majority_tie = false;
  std::size_t depth = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

// Nodes are stored in preorder; nodes[0] is the root. Values <= threshold
// go left.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::size_t max_depth = 0;
  RepresentationKind kind = RepresentationKind::FG;
  std::size_t feature_dimension = 0;

  std::size_t depth() const noexcept;
  std::size_t leaf_count() const noexcept;
  std::size_t internal_count() const noexcept { return nodes.size() - leaf_count(); }
  std::size_t tie_leaves() const noexcept;
};

struct CartOptions {
  std::size_t max_depth = 5;
  std::size_t min_leaf = 1;
  bool parallel = true;  // kernels::parallel or kernels::serial split scans
};

// 2p(1-p); throws DomainError for an empty node.
double gini(ClassCounts counts);

// Best split over `candidate_features` among the instances in `rows` (all
// instances when empty); nullopt when no split lowers impurity.
std::optional<SplitCandidate> best_split(const TreeInput& X, std::span<const Label> labels,
                                         std::span<const Index> candidate_features,
                                         std::span<const std::size_t> rows = {}, std::size_t min_leaf = 1,
                                         bool parallel = true);

// Greedy CART with the Gini criterion, fit to black-box labels.
DecisionTree fit_cart(const TreeInput& X, std::span<const Label> y_hat, const CartOptions& opts = {},
                      RepresentationKind kind = RepresentationKind::FG);

std::vector<Label> predict(const DecisionTree& tree, const TreeInput& X);
std::vector<Label> predict(const DecisionTree& tree, const SparseMatrix& X);
std::vector<Label> predict(const DecisionTree& tree, const RowMatrix& X);

enum class Relation { LessEqual, Greater };

struct Antecedent {
  Index feature = 0;
  Relation relation = Relation::LessEqual;
  double threshold = 0.0;

  bool holds(double v) const noexcept { return relation == Relation::LessEqual ? v <= threshold : v > threshold; }
};

struct Rule {
  std::vector<Antecedent> antecedents;
  Label label = 0;
  std::size_t coverage = 0;
  double purity = 0.0;
};

struct RuleSet {
  std::vector<Rule> rules;
  RepresentationKind kind = RepresentationKind::FG;

  std::size_t max_antecedents() const noexcept;
};

// One rule per leaf. Repeated conditions on a feature along a path are
// merged into the tightest bound per direction.
RuleSet extract_rules(const DecisionTree& tree);

// Label of the (unique) rule each instance satisfies.
std::vector<Label> predict_rules(const RuleSet& rules, const TreeInput& X);

// Distinct features used at internal nodes, ascending.
std::vector<Index> feature_set(const DecisionTree& tree);

struct RankedFeature {
  Index feature;
  double reduction;
};

// Best single-split Gini reduction of every feature at the root, strongest
// first (ties to the lower index); top_n entries.
std::vector<RankedFeature> impurity_reduction_ranking(const TreeInput& X, std::span<const Label> y_hat,
                                                      std::size_t top_n);

// `IF name <= t AND ... THEN class=c [coverage=n, purity=p]`, one per line.
std::string format_rules(const RuleSet& rules, const std::vector<std::string>& feature_names);

// Structured export. `annotations[f]`, when given, is attached to every
// condition on feature f (DDMF rules carry their top descriptor features).
nlohmann::json rules_to_json(const RuleSet& rules, const std::vector<std::string>& feature_names,
                             const std::vector<std::vector<std::string>>* annotations = nullptr);

}  // namespace metarule
