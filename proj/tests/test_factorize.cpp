#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>

#include "helpers.hpp"
#include "metarule/error.hpp"
#include "metarule/factorize.hpp"

using namespace metarule;

namespace {

double residual(const SparseMatrix& X, const RowMatrix& L, const ColMatrix& R) {
  const auto d = X.to_dense();
  const ColMatrix LR = L * R;
  double s = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) {
      const double e = d[i * X.cols() + j] - LR(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      s += e * e;
    }
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("factorize") {
  TEST_CASE("NMF rank one") {
    const auto X = testing::dense(2, 2, {2, 4, 1, 2});
    NmfOptions opts;
    opts.max_iter = 2000;
    opts.tol = 0.0;
    const auto f = fit_nmf(X, 1, 3, opts);
    CHECK(f.meta.reconstruction_error < 1e-6);
    CHECK(residual(X, f.L, f.R) < 1e-6);
    CHECK((f.L.array() >= 0).all());
    CHECK((f.R.array() >= 0).all());
  }

  TEST_CASE("NMF trace non-increasing") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto X = testing::random_sparse(30, 40, 0.3, seed, 5);
      NmfOptions opts;
      opts.tol = 0.0;
      const auto f = fit_nmf(X, 5, seed, opts);
      CHECK(f.meta.objective_trace.size() == 201);
      for (std::size_t i = 1; i < f.meta.objective_trace.size(); ++i)
        CHECK(f.meta.objective_trace[i] <= f.meta.objective_trace[i - 1] + 1e-10);
      CHECK(f.meta.reconstruction_error == doctest::Approx(residual(X, f.L, f.R)).epsilon(1e-9));
    }
  }

  TEST_CASE("NMF full rank fits closely") {
    const auto X = testing::dense(4, 3, {1, 2, 0, 0, 1, 3, 2, 0, 1, 1, 1, 1});
    NmfOptions opts;
    opts.max_iter = 20000;
    opts.tol = 0.0;
    const auto f = fit_nmf(X, 3, 5, opts);
    CHECK(f.meta.reconstruction_error / std::sqrt(X.squared_norm()) < 1e-3);
  }

  TEST_CASE("NMF preconditions") {
    const auto neg = testing::dense(2, 2, {1, -1, 0, 1});
    CHECK_THROWS_AS(fit_nmf(neg, 1, 1), DomainError);
    const auto X = testing::dense(2, 2, {1, 1, 0, 1});
    CHECK_THROWS(fit_nmf(X, 0, 1));
    CHECK_THROWS(fit_nmf(X, 3, 1));
  }

  TEST_CASE("NMF deterministic per seed") {
    const auto X = testing::random_sparse(20, 30, 0.3, 1);
    const auto a = fit_nmf(X, 4, 9);
    const auto b = fit_nmf(X, 4, 9);
    CHECK(a.L == b.L);
    CHECK(a.R == b.R);
  }

  TEST_CASE("SVD of the identity") {
    const auto I = testing::dense(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const auto f = fit_svd(I, 3, 1);
    REQUIRE(f.meta.singular_values.size() == 3);
    for (double s : f.meta.singular_values) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(residual(I, f.L, f.R) < 1e-12);
  }

  TEST_CASE("SVD rank two exact") {
    // outer products of two vector pairs
    std::vector<double> v(6 * 5);
    const double a[6] = {1, 2, 0, 1, 3, 1}, b[5] = {1, 0, 2, 1, 1};
    const double c[6] = {0, 1, 1, 2, 0, 1}, d[5] = {2, 1, 0, 0, 1};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 5; ++j) v[i * 5 + j] = a[i] * b[j] + c[i] * d[j];
    const auto X = testing::dense(6, 5, v);
    const auto f = fit_svd(X, 2, 4);
    CHECK(residual(X, f.L, f.R) < 1e-8);
  }

  TEST_CASE("SVD beats random rank-k competitors") {
    const auto X = testing::random_sparse(10, 8, 0.5, 21, 4);
    const auto f = fit_svd(X, 3, 2);
    const double best = residual(X, f.L, f.R);
    Rng rng(77);
    for (int t = 0; t < 100; ++t) {
      RowMatrix L(10, 3);
      ColMatrix R(3, 8);
      for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = 2.0 * rng.uniform() - 1.0;
      for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = 2.0 * rng.uniform() - 1.0;
      CHECK(best <= residual(X, L, R) + 1e-12);
    }
    // also against the exact truncated SVD
    Eigen::MatrixXd D(10, 8);
    const auto dv = X.to_dense();
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 8; ++j) D(i, j) = dv[static_cast<std::size_t>(i * 8 + j)];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
    double tail = 0.0;
    for (int i = 3; i < svd.singularValues().size(); ++i) tail += svd.singularValues()(i) * svd.singularValues()(i);
    CHECK(best == doctest::Approx(std::sqrt(tail)).epsilon(1e-8));
    for (int i = 0; i < 3; ++i) CHECK(f.meta.singular_values[static_cast<std::size_t>(i)] ==
                                      doctest::Approx(svd.singularValues()(i)).epsilon(1e-8));
  }

  TEST_CASE("SVD sign convention") {
    const auto X = testing::random_sparse(12, 9, 0.4, 5, 3);
    const auto f = fit_svd(X, 3, 8);
    for (Eigen::Index r = 0; r < f.R.rows(); ++r) {
      Eigen::Index arg = 0;
      f.R.row(r).cwiseAbs().maxCoeff(&arg);
      CHECK(f.R(r, arg) > 0.0);
    }
  }

  TEST_CASE("method names") {
    CHECK(factor_method_from_string("nmf") == FactorMethod::NMF);
    CHECK(factor_method_from_string("SVD") == FactorMethod::SVD);
    CHECK(to_string(FactorMethod::NMF) == "NMF");
    CHECK_THROWS(factor_method_from_string("pca"));
  }
}
