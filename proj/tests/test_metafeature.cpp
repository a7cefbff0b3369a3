#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "metarule/error.hpp"
#include "metarule/metafeature.hpp"

using namespace metarule;

namespace {

// Rows of block b draw their entries from the features of block b only.
SparseMatrix planted_blocks(std::size_t rows_per_block, std::size_t features_per_block, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet> t;
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t r = 0; r < rows_per_block; ++r)
      for (std::size_t f = 0; f < features_per_block; ++f)
        if (rng.uniform() < 0.6) t.push_back({b * rows_per_block + r, b * features_per_block + f, 1.0});
  return SparseMatrix::from_triplets(3 * rows_per_block, 3 * features_per_block, t);
}

double best_agreement(const std::vector<Index>& a, std::size_t per_block) {
  std::array<Index, 3> perm{0, 1, 2};
  double best = 0.0;
  do {
    std::size_t hit = 0;
    for (std::size_t f = 0; f < a.size(); ++f) hit += a[f] == perm[f / per_block];
    best = std::max(best, static_cast<double>(hit) / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_SUITE("metafeature") {
  TEST_CASE("binarize_R") {
    ColMatrix R(2, 2);
    R << 0.2, 0.7, 0.9, 0.1;
    const auto a = binarize_R(R);
    CHECK(a.assignment == std::vector<Index>{1, 0});
    ColMatrix one(1, 3);
    one << 0.1, 0.0, 5.0;
    CHECK(binarize_R(one).assignment == std::vector<Index>{0, 0, 0});
    ColMatrix tie(3, 1);
    tie << 0.5, 0.5, 0.5;
    CHECK(binarize_R(tie).assignment == std::vector<Index>{0});
  }

  TEST_CASE("project_and_normalize hand example") {
    BinaryAssignment a{{0, 0, 1, 2}, 3};
    const auto X = testing::dense(2, 4, {1, 1, 1, 1, 0, 0, 0, 0});
    const auto mf = project_and_normalize(X, a);
    CHECK(mf.values(0, 0) == 0.5);
    CHECK(mf.values(0, 1) == 0.25);
    CHECK(mf.values(0, 2) == 0.25);
    CHECK(mf.values.row(1).isZero());
    CHECK(mf.empty_rows == 1);
    CHECK(mf.source_active_counts == std::vector<std::size_t>{4, 0});
    const auto raw = project_and_normalize(X, a, Normalization::None);
    CHECK(raw.values(0, 0) == 2.0);
    const auto bin = project_and_normalize(X, a, Normalization::Binary);
    CHECK(bin.values(0, 0) == 1.0);
  }

  TEST_CASE("projection conserves row mass") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto X = testing::random_sparse(15, 25, 0.2, s, 3);
      Rng rng(s);
      BinaryAssignment a;
      a.k = 4;
      for (int f = 0; f < 25; ++f) a.assignment.push_back(static_cast<Index>(rng.below(4)));
      const auto raw = project_and_normalize(X, a, Normalization::None);
      for (std::size_t i = 0; i < 15; ++i) {
        double src = 0.0;
        for (double v : X.row(i).values) src += v;
        CHECK(raw.values.row(static_cast<Eigen::Index>(i)).sum() == doctest::Approx(src).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("planted blocks are recovered by NMF") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto X = planted_blocks(20, 10, seed);
      const auto space = build_ddmf(X, 3, FactorMethod::NMF, seed);
      CHECK(best_agreement(space.assignment.assignment, 10) >= 0.95);
      // top features of each metafeature come from a single planted group
      for (std::size_t j = 0; j < 3; ++j) {
        const auto top = space.top_features(j, 5);
        for (auto f : top.features) CHECK(f / 10 == top.features.front() / 10);
      }
    }
  }

  TEST_CASE("space applies its training fit") {
    const auto X = planted_blocks(10, 8, 3);
    const auto space = build_ddmf(X, 3, FactorMethod::NMF, 1);
    const auto a = space.transform(X);
    const auto b = project_and_normalize(X, space.assignment, space.normalization);
    CHECK(a.values == b.values);
    const auto other = planted_blocks(5, 8, 4);
    const auto before = space.assignment.assignment;
    (void)space.transform(other);
    CHECK(space.assignment.assignment == before);
  }

  TEST_CASE("descriptors") {
    ColMatrix R(2, 4);
    R << 0.9, 0.1, 0.5, 0.3,  //
        0.0, 0.8, 0.1, 0.2;
    FactorModel m;
    m.k = 2;
    m.R = R;
    const auto space = space_from_factors(m);
    const auto d0 = space.top_features(0, 20);
    CHECK(d0.features == std::vector<Index>{0, 2, 3});
    CHECK(std::is_sorted(d0.weights.rbegin(), d0.weights.rend()));
    CHECK(space.top_features(1, 1).features == std::vector<Index>{1});
  }

  TEST_CASE("domain metafeatures") {
    const std::vector<std::string> names{"a", "b", "c", "d"};
    const DomainMap map{{"b", "drama"}, {"a", "comedy"}, {"c", "drama"}};
    const auto space = build_domain_mf(map, names);
    CHECK(space.k() == 3);
    CHECK(space.names == std::vector<std::string>{"drama", "comedy", "other"});
    CHECK(space.assignment.assignment == std::vector<Index>{1, 0, 0, 2});
    const auto empty = build_domain_mf({}, names);
    CHECK(empty.k() == 1);
    CHECK(empty.names.front() == "other");
    CHECK_THROWS(build_domain_mf({{"a", "x"}, {"a", "y"}}, names));
    CHECK_THROWS(build_domain_mf({{"zzz", "x"}}, names));

    DomainMap genres;
    std::vector<std::string> movies;
    for (int i = 0; i < 90; ++i) {
      movies.push_back("m" + std::to_string(i));
      genres.emplace_back(movies.back(), "genre" + std::to_string(i % 18));
    }
    CHECK(build_domain_mf(genres, movies).k() == 18);
  }

  TEST_CASE("domain map text round trip") {
    const DomainMap map{{"item 1", "g1"}, {"item2", "g 2"}};
    std::stringstream io;
    write_domain_map(io, map);
    CHECK(read_domain_map(io) == map);
  }

  TEST_CASE("descriptor matching") {
    Descriptor a, b;
    for (Index i = 0; i < 20; ++i) a.features.push_back(i);
    for (Index i = 10; i < 30; ++i) b.features.push_back(i);
    CHECK(descriptor_jaccard(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK_FALSE(match_metafeatures(a, b));
    CHECK(match_metafeatures(a, a));
    Descriptor c;
    c.features = {100, 101};
    CHECK_FALSE(match_metafeatures(a, c));
    CHECK_THROWS(match_metafeatures(a, Descriptor{}));
  }

  TEST_CASE("space serialization round trip") {
    const auto X = planted_blocks(6, 5, 2);
    const auto space = build_ddmf(X, 3, FactorMethod::SVD, 4);
    std::stringstream io;
    write_space(io, space);
    const auto back = read_space(io);
    CHECK(back.assignment.assignment == space.assignment.assignment);
    CHECK(back.k() == space.k());
    CHECK(back.method == space.method);
    CHECK(back.seed == space.seed);
    CHECK(back.names == space.names);
    REQUIRE(back.descriptors.size() == space.descriptors.size());
    for (std::size_t j = 0; j < back.descriptors.size(); ++j) {
      CHECK(back.descriptors[j].features == space.descriptors[j].features);
      CHECK(back.descriptors[j].weights == space.descriptors[j].weights);
    }
  }

  TEST_CASE("normalization names") {
    CHECK(normalization_from_string("active") == Normalization::ActiveCount);
    CHECK(normalization_from_string("none") == Normalization::None);
    CHECK(normalization_from_string("binary") == Normalization::Binary);
    CHECK_THROWS(normalization_from_string("l2"));
  }
}
