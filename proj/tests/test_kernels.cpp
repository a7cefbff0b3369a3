#include <doctest.h>

#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "metarule/kernels.hpp"

using namespace metarule;
namespace ks = metarule::kernels::serial;
namespace kp = metarule::kernels::parallel;

TEST_SUITE("kernels") {
  TEST_CASE("spmm and spmv agree bitwise") {
    const auto X = testing::random_sparse(120, 80, 0.1, 1, 5);
    Rng rng(2);
    const std::size_t k = 7;
    std::vector<double> B(80 * k);
    for (auto& b : B) b = rng.uniform();
    std::vector<double> a(120 * k), c(120 * k);
    ks::spmm_rows(X, B.data(), k, a.data());
    kp::spmm_rows(X, B.data(), k, c.data());
    CHECK(a == c);
    // against a dense oracle
    const auto d = X.to_dense();
    for (std::size_t i = 0; i < 120; i += 17)
      for (std::size_t col = 0; col < k; ++col) {
        double s = 0.0;
        for (std::size_t f = 0; f < 80; ++f) s += d[i * 80 + f] * B[f * k + col];
        CHECK(a[i * k + col] == doctest::Approx(s).epsilon(1e-12));
      }
    std::vector<double> w(80), u(120), v(120);
    for (auto& x : w) x = rng.uniform() - 0.5;
    ks::spmv(X, w, u);
    kp::spmv(X, w, v);
    CHECK(u == v);
  }

  TEST_CASE("projection agrees") {
    const auto X = testing::random_sparse(60, 50, 0.2, 3, 3);
    std::vector<Index> assign(50);
    for (std::size_t f = 0; f < 50; ++f) assign[f] = static_cast<Index>(f % 6);
    std::vector<double> a(60 * 6, -1.0), b(60 * 6, -2.0);
    ks::project_rows(X, assign, 6, a.data());
    kp::project_rows(X, assign, 6, b.data());
    CHECK(a == b);
  }

  TEST_CASE("multiplicative update and inner products agree") {
    Rng rng(4);
    std::vector<double> f1(500), n(500), d(500);
    for (std::size_t i = 0; i < 500; ++i) {
      f1[i] = rng.uniform();
      n[i] = rng.uniform();
      d[i] = rng.uniform();
    }
    auto f2 = f1;
    ks::multiplicative_update(f1, n, d, 1e-16);
    kp::multiplicative_update(f2, n, d, 1e-16);
    CHECK(f1 == f2);
    CHECK(ks::rowwise_inner(n.data(), d.data(), 100, 5) == kp::rowwise_inner(n.data(), d.data(), 100, 5));
  }

  TEST_CASE("split scans agree") {
    const auto X = testing::random_sparse(200, 300, 0.05, 5, 4);
    const auto cols = X.transpose();
    const auto y = testing::random_labels(200, 6);
    std::vector<char> in(200);
    ClassCounts counts{0, 0};
    for (std::size_t i = 0; i < 200; ++i) {
      in[i] = i % 3 != 0;
      if (in[i]) ++counts[y[i]];
    }
    NodeView node{cols, y, in, counts, 2};
    std::vector<Index> features(300);
    std::iota(features.begin(), features.end(), Index{0});
    std::vector<SplitCandidate> a(300), b(300);
    ks::scan_splits(node, features, a);
    kp::scan_splits(node, features, b);
    for (std::size_t f = 0; f < 300; ++f) {
      CHECK(a[f].valid == b[f].valid);
      CHECK(a[f].threshold == b[f].threshold);
      CHECK(a[f].reduction == b[f].reduction);
    }
    CHECK(kernels::max_threads() >= 1);
  }
}
