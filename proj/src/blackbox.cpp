#include "metarule/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "metarule/error.hpp"
#include "metarule/kernels.hpp"

namespace metarule {

namespace {

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_binary(std::span<const Label> y) {
  bool has0 = false, has1 = false;
  for (auto l : y) (l ? has1 : has0) = true;
  if (!(has0 && has1)) throw DomainError("logistic regression needs both classes in the training labels");
}

}  // namespace

double logreg_objective(const SparseMatrix& X, const SparseMatrix& Xt, std::span<const Label> y,
                        std::span<const double> theta, double C, std::span<double> grad) {
  const std::size_t n = X.rows(), m = X.cols();
  const auto w = theta.first(m);
  const double b = theta[m];

  std::vector<double> z(n);
  kernels::parallel::spmv(X, w, z);
  std::vector<double> r(n);
  double loss = 0.0;
  double rsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = y[i] ? 1.0 : -1.0;
    const double margin = s * (z[i] + b);
    loss += softplus(-margin);
    r[i] = -s * sigmoid(-margin);
    rsum += r[i];
  }
  kernels::parallel::spmv(Xt, r, grad.first(m));
  double reg = 0.0;
  for (std::size_t f = 0; f < m; ++f) {
    reg += w[f] * w[f];
    grad[f] = w[f] + C * grad[f];
  }
  grad[m] = C * rsum;
  return 0.5 * reg + C * loss;
}

LogisticModel train_logreg(const SparseMatrix& X, std::span<const Label> y, double C, const LogregOptions& opts) {
  if (X.rows() != y.size()) throw DomainError("label count does not match row count");
  if (!(C > 0.0) || !std::isfinite(C)) throw DomainError("C must be a positive finite number");
  check_binary(y);

  const SparseMatrix Xt = X.transpose();
  const std::size_t dim = X.cols() + 1;
  std::vector<double> theta(dim, 0.0), grad(dim), next(dim), next_grad(dim), dir(dim);
  double f = logreg_objective(X, Xt, y, theta, C, grad);

  LogisticModel model;
  model.C = C;
  model.meta.objective_trace.push_back(f);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> memory;
  std::vector<double> alpha(opts.memory);

  std::size_t it = 0;
  for (; it < opts.max_iter; ++it) {
    if (max_abs(grad) < opts.tol) {
      model.meta.converged = true;
      break;
    }
    // two-loop recursion
    for (std::size_t d = 0; d < dim; ++d) dir[d] = -grad[d];
    for (std::size_t j = memory.size(); j-- > 0;) {
      alpha[j] = memory[j].rho * dot(memory[j].s, dir);
      for (std::size_t d = 0; d < dim; ++d) dir[d] -= alpha[j] * memory[j].y[d];
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& v : dir) v *= gamma;
    } else {
      const double scale = 1.0 / std::max(1.0, std::sqrt(dot(grad, grad)));
      for (auto& v : dir) v *= scale;
    }
    for (std::size_t j = 0; j < memory.size(); ++j) {
      const double beta = memory[j].rho * dot(memory[j].y, dir);
      for (std::size_t d = 0; d < dim; ++d) dir[d] += memory[j].s[d] * (alpha[j] - beta);
    }
    double slope = dot(dir, grad);
    if (!(slope < 0.0)) {
      memory.clear();
      const double scale = 1.0 / std::max(1.0, std::sqrt(dot(grad, grad)));
      for (std::size_t d = 0; d < dim; ++d) dir[d] = -grad[d] * scale;
      slope = dot(dir, grad);
    }

    double step = 1.0;
    double f_next = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t d = 0; d < dim; ++d) next[d] = theta[d] + step * dir[d];
      f_next = logreg_objective(X, Xt, y, next, C, next_grad);
      if (std::isfinite(f_next) && f_next <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (memory.empty()) break;  // stalled even along steepest descent
      memory.clear();
      continue;
    }

    Pair p{std::vector<double>(dim), std::vector<double>(dim), 0.0};
    for (std::size_t d = 0; d < dim; ++d) {
      p.s[d] = next[d] - theta[d];
      p.y[d] = next_grad[d] - grad[d];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-12) {
      p.rho = 1.0 / sy;
      memory.push_back(std::move(p));
      if (memory.size() > opts.memory) memory.pop_front();
    }
    theta.swap(next);
    grad.swap(next_grad);
    f = f_next;
    model.meta.objective_trace.push_back(f);
  }
  if (!model.meta.converged && max_abs(grad) < opts.tol) model.meta.converged = true;

  model.weights.assign(theta.begin(), theta.end() - 1);
  model.intercept = theta.back();
  model.meta.iterations = it;
  model.meta.objective = f;
  model.meta.gradient_max_norm = max_abs(grad);
  for (double w : model.weights)
    if (!std::isfinite(w)) throw NumericalError("logistic regression diverged");
  return model;
}

std::vector<double> predict_proba(const LogisticModel& model, const SparseMatrix& X) {
  if (X.cols() != model.weights.size())
    throw DomainError("matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                      std::to_string(model.weights.size()));
  std::vector<double> z(X.rows());
  kernels::parallel::spmv(X, model.weights, z);
  for (auto& v : z) v = sigmoid(v + model.intercept);
  return z;
}

ThresholdCalibration calibrate_threshold(std::span<const double> train_scores, double positive_rate) {
  if (train_scores.empty()) throw DomainError("no scores to calibrate on");
  if (!(positive_rate >= 0.0 && positive_rate <= 1.0)) throw DomainError("positive rate must lie in [0,1]");

  std::vector<double> sorted(train_scores.begin(), train_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t n = sorted.size();
  const auto target = static_cast<std::size_t>(std::floor(positive_rate * static_cast<double>(n) + 1e-9));

  ThresholdCalibration cal;
  if (target >= n) {
    cal.threshold = std::max(0.0, std::nextafter(sorted.back(), -1.0));
  } else {
    cal.threshold = sorted[target];
  }
  std::size_t above = 0;
  for (double s : sorted) above += s > cal.threshold;
  cal.predicted_positive_rate = static_cast<double>(above) / static_cast<double>(n);
  cal.tie_degenerate = above != std::min(target, n);
  return cal;
}

std::vector<Label> threshold_scores(std::span<const double> scores, double threshold) {
  std::vector<Label> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

std::vector<Label> predict_labels(const ThresholdedClassifier& clf, const SparseMatrix& X) {
  return threshold_scores(predict_proba(clf.model, X), clf.threshold);
}

MetricsReport classification_metrics(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size()) throw DomainError("label arrays differ in length");
  if (y_true.empty()) throw DomainError("no labels");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i]) (y_true[i] ? tp : fp)++;
    else (y_true[i] ? fn : tn)++;
  }
  MetricsReport r;
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(y_true.size());
  r.precision_undefined = tp + fp == 0;
  r.recall_undefined = tp + fn == 0;
  r.precision = r.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = r.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  // harmonic mean of precision and recall, as one exact-count division
  r.f_score = tp > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
  return r;
}

std::vector<double> default_C_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}; }

TunedClassifier tune_C(const Dataset& train, const Dataset& val, std::span<const double> grid,
                       const LogregOptions& opts) {
  if (grid.empty()) throw DomainError("empty C grid");
  TunedClassifier out;
  out.grid.assign(grid.begin(), grid.end());
  std::sort(out.grid.begin(), out.grid.end());

  const bool use_train = val.size() == 0;
  if (use_train) out.warnings.push_back("empty validation set: C selected on training accuracy");
  const double rate = train.positive_rate();

  double best = -1.0;
  for (double C : out.grid) {
    ThresholdedClassifier clf;
    clf.model = train_logreg(train.X, train.y, C, opts);
    const auto scores = predict_proba(clf.model, train.X);
    const auto cal = calibrate_threshold(scores, rate);
    clf.threshold = cal.threshold;
    if (!clf.model.meta.converged)
      out.warnings.push_back("C=" + std::to_string(C) + ": optimizer stopped before reaching tolerance");
    if (cal.tie_degenerate) out.warnings.push_back("C=" + std::to_string(C) + ": score ties at the threshold");

    const auto& eval = use_train ? train : val;
    const auto acc = classification_metrics(eval.y, predict_labels(clf, eval.X)).accuracy;
    out.validation_accuracy.push_back(acc);
    if (acc > best) {
      best = acc;
      out.C = C;
      out.classifier = std::move(clf);
    }
  }
  return out;
}

void write_model(std::ostream& out, const ThresholdedClassifier& clf, std::uint64_t seed) {
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "metarule-logreg 1\n";
  out << "C " << clf.model.C << '\n';
  out << "threshold " << clf.threshold << '\n';
  out << "seed " << seed << '\n';
  out << "intercept " << clf.model.intercept << '\n';
  out << "weights " << clf.model.weights.size() << '\n';
  for (double w : clf.model.weights) out << w << '\n';
  out.precision(prec);
}

ThresholdedClassifier read_model(std::istream& in, std::uint64_t* seed) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "metarule-logreg") throw DataError("not a metarule-logreg model");
  if (version != 1) throw DataError("unsupported model version " + std::to_string(version));
  ThresholdedClassifier clf;
  std::uint64_t s = 0;
  std::size_t m = 0;
  auto expect = [&](const char* key) {
    if (!(in >> tag) || tag != key) throw DataError(std::string("model record: expected '") + key + "'");
  };
  expect("C");
  in >> clf.model.C;
  expect("threshold");
  in >> clf.threshold;
  expect("seed");
  in >> s;
  expect("intercept");
  in >> clf.model.intercept;
  expect("weights");
  in >> m;
  clf.model.weights.resize(m);
  for (auto& w : clf.model.weights) in >> w;
  if (!in) throw DataError("truncated model record");
  if (seed) *seed = s;
  return clf;
}

}  // namespace metarule
