#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "metarule/error.hpp"
#include "metarule/harness.hpp"
#include "metarule/tree.hpp"
#include "split_oracle.hpp"

using namespace metarule;

namespace {

TreeInput input_of(const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return TreeInput(SparseMatrix::from_dense(rows.size(), rows.empty() ? 0 : rows[0].size(), flat));
}

std::vector<Index> all_features(std::size_t m) {
  std::vector<Index> f(m);
  for (std::size_t i = 0; i < m; ++i) f[i] = static_cast<Index>(i);
  return f;
}

}  // namespace

TEST_SUITE("tree") {
  TEST_CASE("gini") {
    CHECK(gini({2, 2}) == 0.5);
    CHECK(gini({4, 0}) == 0.0);
    CHECK(gini({3, 1}) == doctest::Approx(0.375));
    CHECK_THROWS_AS(gini({0, 0}), DomainError);
  }

  TEST_CASE("best_split hand example") {
    const auto X = input_of({{0}, {0}, {1}, {1}});
    const std::vector<Label> y{0, 0, 1, 1};
    const auto s = best_split(X, y, all_features(1));
    REQUIRE(s);
    CHECK(s->feature == 0);
    CHECK(s->threshold == 0.5);
    CHECK(s->reduction == doctest::Approx(0.5));
    const auto constant = input_of({{1}, {1}, {1}, {1}});
    CHECK_FALSE(best_split(constant, y, all_features(1)));
  }

  TEST_CASE("best_split matches brute force on random small data") {
    Rng rng(17);
    for (int trial = 0; trial < 3000; ++trial) {
      const std::size_t n = 2 + rng.below(7), m = 1 + rng.below(4);
      std::vector<std::vector<double>> rows(n, std::vector<double>(m));
      std::vector<int> yi(n);
      std::vector<Label> y(n);
      const bool binary = trial % 2 == 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : rows[i]) v = binary ? static_cast<double>(rng.below(2)) : static_cast<double>(rng.below(4)) * 0.5;
        yi[i] = static_cast<int>(rng.below(2));
        y[i] = static_cast<Label>(yi[i]);
      }
      const std::size_t min_leaf = 1 + (trial % 3 == 0 ? rng.below(2) : 0);
      const auto X = input_of(rows);
      const auto got = best_split(X, y, all_features(m), {}, min_leaf, trial % 4 == 0);
      const auto want = oracle::best_split(rows, yi, min_leaf);
      REQUIRE(got.has_value() == want.has_value());
      if (got) {
        CHECK(got->feature == want->feature);
        CHECK(got->threshold == want->threshold);
        CHECK(got->reduction == doctest::Approx(want->reduction).epsilon(1e-12));
      }
      const auto rank = impurity_reduction_ranking(X, y, m);
      const auto rank_want = oracle::ranking(rows, yi);
      REQUIRE(rank.size() == rank_want.size());
      for (std::size_t r = 0; r < rank.size(); ++r) {
        CHECK(rank[r].feature == rank_want[r].first);
        CHECK(rank[r].reduction == doctest::Approx(rank_want[r].second).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("pure labels give a single leaf") {
    const auto X = TreeInput(testing::random_sparse(10, 4, 0.5, 3));
    const std::vector<Label> y(10, 1);
    const auto tree = fit_cart(X, y);
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].label == 1);
    CHECK(feature_set(tree).empty());
    for (auto p : predict(tree, X)) CHECK(p == 1);
    const auto rules = extract_rules(tree);
    REQUIRE(rules.rules.size() == 1);
    CHECK(format_rules(rules, {}).rfind("IF TRUE THEN class=1", 0) == 0);
  }

  TEST_CASE("depth-1 root follows the impurity ranking") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const TreeInput X(testing::random_sparse(40, 6, 0.4, s, 3));
      const auto y = testing::random_labels(40, s + 50);
      CartOptions o;
      o.max_depth = 1;
      const auto tree = fit_cart(X, y, o);
      const auto rank = impurity_reduction_ranking(X, y, 1);
      if (tree.nodes.size() == 1) {
        CHECK(rank.front().reduction == 0.0);
        continue;
      }
      CHECK(static_cast<Index>(tree.nodes[0].feature) == rank.front().feature);
      const auto rules = extract_rules(tree);
      CHECK(rules.rules.size() == 2);
      for (const auto& r : rules.rules) CHECK(r.antecedents.size() == 1);
      CHECK(feature_set(tree) == std::vector<Index>{rank.front().feature});
    }
  }

  TEST_CASE("unrestricted tree memorizes distinct rows") {
    Rng rng(5);
    std::vector<std::vector<double>> rows;
    std::vector<Label> y;
    for (std::size_t i = 0; i < 32; ++i) {
      rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
      y.push_back(static_cast<Label>(rng.below(2)));
    }
    const auto X = input_of(rows);
    CartOptions o;
    o.max_depth = 64;
    const auto tree = fit_cart(X, y, o);
    CHECK(fidelity(y, predict(tree, X)) == 1.0);
  }

  TEST_CASE("complexity bounds at depth 5") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const TreeInput X(testing::random_sparse(300, 30, 0.3, s, 4));
      const auto y = testing::random_labels(300, s + 9);
      const auto tree = fit_cart(X, y);
      CHECK(tree.depth() <= 5);
      const auto rules = extract_rules(tree);
      CHECK(rules.rules.size() <= 32);
      CHECK(rules.max_antecedents() <= 5);
      CHECK(rules.rules.size() == tree.leaf_count());
      CHECK(feature_set(tree).size() <= tree.internal_count());
      std::size_t covered = 0;
      for (const auto& r : rules.rules) covered += r.coverage;
      CHECK(covered == 300);
    }
  }

  TEST_CASE("rules and tree predict identically") {
    const TreeInput train(testing::random_sparse(200, 12, 0.3, 7, 5));
    const auto y = testing::random_labels(200, 8);
    const auto tree = fit_cart(train, y);
    const TreeInput fresh(testing::random_sparse(100, 12, 0.3, 99, 5));
    CHECK(predict_rules(extract_rules(tree), fresh) == predict(tree, fresh));
    // leaves predict their majority on training data
    const auto p = predict(tree, train);
    for (const auto& r : extract_rules(tree).rules) CHECK(r.purity >= 0.5);
    CHECK(p.size() == 200);
  }

  TEST_CASE("bounds along a path are merged") {
    // x0 <= 5 then x0 <= 2 on the same branch
    std::vector<std::vector<double>> rows;
    std::vector<Label> y;
    for (int v = 0; v < 8; ++v) {
      rows.push_back({static_cast<double>(v)});
      y.push_back(v <= 2 ? 0 : (v <= 5 ? 1 : 0));
    }
    CartOptions o;
    o.max_depth = 3;
    const auto tree = fit_cart(input_of(rows), y, o);
    const auto rules = extract_rules(tree);
    for (const auto& r : rules.rules) {
      std::size_t le = 0, gt = 0;
      for (const auto& a : r.antecedents) (a.relation == Relation::LessEqual ? le : gt)++;
      CHECK(le <= 1);
      CHECK(gt <= 1);
    }
    CHECK(fidelity(y, predict(tree, input_of(rows))) == 1.0);
  }

  TEST_CASE("truncation equals a shallower fit") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const TreeInput X(testing::random_sparse(150, 10, 0.3, s, 3));
      const auto y = testing::random_labels(150, s + 1);
      const auto full = fit_cart(X, y);
      for (std::size_t d = 1; d <= 5; ++d) {
        CartOptions o;
        o.max_depth = d;
        const auto direct = fit_cart(X, y, o);
        const auto cut = truncate_tree(full, d);
        REQUIRE(cut.nodes.size() == direct.nodes.size());
        for (std::size_t i = 0; i < cut.nodes.size(); ++i) {
          CHECK(cut.nodes[i].feature == direct.nodes[i].feature);
          CHECK(cut.nodes[i].threshold == direct.nodes[i].threshold);
          CHECK(cut.nodes[i].label == direct.nodes[i].label);
          CHECK(cut.nodes[i].left == direct.nodes[i].left);
          CHECK(cut.nodes[i].counts == direct.nodes[i].counts);
        }
      }
    }
  }

  TEST_CASE("serial and parallel fits agree") {
    const TreeInput X(testing::random_sparse(300, 40, 0.2, 3, 4));
    const auto y = testing::random_labels(300, 4);
    CartOptions a, b;
    b.parallel = false;
    const auto ta = fit_cart(X, y, a), tb = fit_cart(X, y, b);
    REQUIRE(ta.nodes.size() == tb.nodes.size());
    for (std::size_t i = 0; i < ta.nodes.size(); ++i) {
      CHECK(ta.nodes[i].feature == tb.nodes[i].feature);
      CHECK(ta.nodes[i].threshold == tb.nodes[i].threshold);
    }
  }

  TEST_CASE("dense and sparse inputs agree") {
    RowMatrix D(30, 4);
    Rng rng(2);
    for (Eigen::Index i = 0; i < D.size(); ++i) D.data()[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    const auto y = testing::random_labels(30, 3);
    const auto t = fit_cart(TreeInput(D), y);
    CHECK(predict(t, D) == predict(t, TreeInput(D)));
  }

  TEST_CASE("rule export") {
    const auto X = input_of({{0, 1}, {0, 0}, {1, 1}, {1, 0}});
    const std::vector<Label> y{0, 0, 1, 1};
    const auto tree = fit_cart(X, y);
    const auto rules = extract_rules(tree);
    const std::vector<std::string> names{"alpha", "beta"};
    const auto text = format_rules(rules, names);
    CHECK(text.find("IF alpha ≤ 0.5 THEN class=0 [coverage=2, purity=1]") != std::string::npos);
    CHECK(text.find("IF alpha > 0.5 THEN class=1") != std::string::npos);
    const std::vector<std::vector<std::string>> ann{{"x", "y"}, {}};
    const auto j = rules_to_json(rules, names, &ann);
    CHECK(j["rules"].size() == 2);
    CHECK(j["rules"][0]["conditions"][0]["feature"] == "alpha");
    CHECK(j["rules"][0]["conditions"][0]["top_features"][1] == "y");
  }

  TEST_CASE("majority ties go to class 0 and are flagged") {
    const auto X = input_of({{1}, {1}});
    const std::vector<Label> y{0, 1};
    const auto tree = fit_cart(X, y);
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].label == 0);
    CHECK(tree.tie_leaves() == 1);
  }
}
