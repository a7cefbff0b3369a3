#include "metarule/factorize.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "metarule/error.hpp"
#include "metarule/kernels.hpp"
#include "metarule/rng.hpp"

namespace metarule {

std::string to_string(FactorMethod m) { return m == FactorMethod::NMF ? "NMF" : "SVD"; }

FactorMethod factor_method_from_string(const std::string& s) {
  if (s == "NMF" || s == "nmf") return FactorMethod::NMF;
  if (s == "SVD" || s == "svd") return FactorMethod::SVD;
  throw DomainError("unknown factorization method '" + s + "'");
}

namespace {

void check_rank(const SparseMatrix& X, std::size_t k) {
  const auto limit = std::min(X.rows(), X.cols());
  if (k < 1 || k > limit)
    throw DomainError("k=" + std::to_string(k) + " outside [1, " + std::to_string(limit) + "]");
}

constexpr double kMuEpsilon = 1e-16;

}  // namespace

FactorModel fit_nmf(const SparseMatrix& X, std::size_t k, std::uint64_t seed, const NmfOptions& opts) {
  check_rank(X, k);
  double total = 0.0;
  for (double v : X.values()) {
    if (v < 0.0) throw DomainError("NMF needs a nonnegative matrix");
    total += v;
  }
  const std::size_t n = X.rows(), m = X.cols();
  const double mean = total / (static_cast<double>(n) * static_cast<double>(m));
  const double scale = mean > 0.0 ? std::sqrt(mean / static_cast<double>(k)) : 1.0;

  FactorModel model;
  model.method = FactorMethod::NMF;
  model.k = k;
  model.meta.seed = seed;
  model.L.resize(n, k);
  model.R.resize(k, m);
  Rng rng(seed);
  for (Eigen::Index e = 0; e < model.L.size(); ++e) model.L.data()[e] = rng.uniform_pos() * scale;
  for (Eigen::Index e = 0; e < model.R.size(); ++e) model.R.data()[e] = rng.uniform_pos() * scale;

  auto& L = model.L;
  auto& R = model.R;
  const SparseMatrix Xt = X.transpose();
  const double x_sq = X.squared_norm();

  RowMatrix XRt(n, k), denomL(n, k);
  ColMatrix LtX(k, m), denomR(k, m);
  Eigen::MatrixXd LtL(k, k), RRt(k, k);

  auto span_of = [](auto& M) { return std::span<double>(M.data(), static_cast<std::size_t>(M.size())); };
  auto objective = [&] {
    // |X|^2 - 2 <L, X R^T> + <L^T L, R R^T>; needs XRt and RRt current
    LtL.noalias() = L.transpose() * L;
    const double cross = kernels::parallel::rowwise_inner(L.data(), XRt.data(), n, k);
    return x_sq - 2.0 * cross + (LtL.array() * RRt.array()).sum();
  };

  kernels::parallel::spmm_rows(X, R.data(), k, XRt.data());
  RRt.noalias() = R * R.transpose();
  double prev = objective();
  model.meta.objective_trace.push_back(prev);

  std::size_t it = 0;
  while (it < opts.max_iter) {
    ++it;
    // R <- R .* (L^T X) ./ (L^T L R)
    kernels::parallel::spmm_rows(Xt, L.data(), k, LtX.data());
    LtL.noalias() = L.transpose() * L;
    denomR.noalias() = LtL * R;
    kernels::parallel::multiplicative_update(span_of(R), span_of(LtX), span_of(denomR), kMuEpsilon);

    // L <- L .* (X R^T) ./ (L R R^T)
    kernels::parallel::spmm_rows(X, R.data(), k, XRt.data());
    RRt.noalias() = R * R.transpose();
    denomL.noalias() = L * RRt;
    kernels::parallel::multiplicative_update(span_of(L), span_of(XRt), span_of(denomL), kMuEpsilon);

    const double obj = objective();
    model.meta.objective_trace.push_back(obj);
    if (!std::isfinite(obj)) throw NumericalError("NMF objective is not finite");
    const double rel = (prev - obj) / std::max(prev, std::numeric_limits<double>::min());
    prev = obj;
    if (rel < opts.tol) break;
  }
  model.meta.iterations = it;
  model.meta.reconstruction_error = std::sqrt(std::max(prev, 0.0));
  return model;
}

FactorModel fit_svd(const SparseMatrix& X, std::size_t k, std::uint64_t seed, const SvdOptions& opts) {
  check_rank(X, k);
  const std::size_t n = X.rows(), m = X.cols();
  const std::size_t l = std::min(k + opts.oversample, std::min(n, m));
  const SparseMatrix Xt = X.transpose();

  // Gaussian test matrix via Box-Muller on the portable generator.
  Rng rng(seed);
  RowMatrix omega(m, l);
  for (Eigen::Index e = 0; e < omega.size(); e += 2) {
    const double u1 = rng.uniform_pos(), u2 = rng.uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    omega.data()[e] = rad * std::cos(2.0 * std::numbers::pi * u2);
    if (e + 1 < omega.size()) omega.data()[e + 1] = rad * std::sin(2.0 * std::numbers::pi * u2);
  }

  auto orthonormalize = [](const RowMatrix& Y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    RowMatrix Q = qr.householderQ() * Eigen::MatrixXd::Identity(Y.rows(), Y.cols());
    return Q;
  };

  RowMatrix Y(n, l), Z(m, l);
  kernels::parallel::spmm_rows(X, omega.data(), l, Y.data());
  RowMatrix Q = orthonormalize(Y);
  for (std::size_t q = 0; q < opts.power_iterations; ++q) {
    kernels::parallel::spmm_rows(Xt, Q.data(), l, Z.data());
    const RowMatrix Qz = orthonormalize(Z);
    kernels::parallel::spmm_rows(X, Qz.data(), l, Y.data());
    Q = orthonormalize(Y);
  }
  // Z = X^T Q = (Q^T X)^T; its SVD gives the small problem's factors
  kernels::parallel::spmm_rows(Xt, Q.data(), l, Z.data());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(Z), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd V = svd.matrixU();                 // m x l, right singular vectors of X
  const Eigen::MatrixXd U = Q * svd.matrixV();             // n x l, left singular vectors of X
  const Eigen::VectorXd sigma = svd.singularValues();

  FactorModel model;
  model.method = FactorMethod::SVD;
  model.k = k;
  model.meta.seed = seed;
  model.meta.iterations = opts.power_iterations;
  model.L.resize(n, k);
  model.R.resize(k, m);
  double captured = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    Eigen::Index arg = 0;
    for (Eigen::Index f = 1; f < V.rows(); ++f)
      if (std::abs(V(f, jj)) > std::abs(V(arg, jj))) arg = f;
    const double sign = V(arg, jj) < 0.0 ? -1.0 : 1.0;
    model.R.row(jj) = sign * V.col(jj).transpose();
    model.L.col(jj) = sign * sigma(jj) * U.col(jj);
    model.meta.singular_values.push_back(sigma(jj));
    captured += sigma(jj) * sigma(jj);
  }
  model.meta.reconstruction_error = std::sqrt(std::max(X.squared_norm() - captured, 0.0));
  return model;
}

}  // namespace metarule
