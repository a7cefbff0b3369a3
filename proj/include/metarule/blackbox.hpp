#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "metarule/sparse.hpp"

namespace metarule {

struct TrainingMeta {
  std::size_t iterations = 0;
  double objective = 0.0;
  double gradient_max_norm = 0.0;
  bool converged = false;
  // Objective after every accepted step, starting with the initial point.
  std::vector<double> objective_trace;
};

// L2-regularized logistic regression, the black box being explained.
struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double C = 1.0;
  TrainingMeta meta;
};

struct ThresholdedClassifier {
  LogisticModel model;
  double threshold = 0.5;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool precision_undefined = false;  // no predicted positives
  bool recall_undefined = false;     // no actual positives
};

struct LogregOptions {
  std::size_t max_iter = 500;
  double tol = 1e-4;
  std::size_t memory = 10;
};

// Objective and gradient of
//   1/2 |w|^2 + C sum_i log(1 + exp(-s_i (w.x_i + b))),  s_i in {-1,+1}.
// grad has m+1 entries (weights, then intercept). Exposed for tests.
double logreg_objective(const SparseMatrix& X, const SparseMatrix& Xt, std::span<const Label> y,
                        std::span<const double> theta, double C, std::span<double> grad);

// L-BFGS with Armijo backtracking from w = 0, b = 0. Stops when the
// gradient max-norm drops below tol or after max_iter iterations.
LogisticModel train_logreg(const SparseMatrix& X, std::span<const Label> y, double C,
                           const LogregOptions& opts = {});

// sigma(w.x + b) per row.
std::vector<double> predict_proba(const LogisticModel& model, const SparseMatrix& X);

struct ThresholdCalibration {
  double threshold = 0.5;
  double predicted_positive_rate = 0.0;
  // Score ties straddle the cut so the target rate cannot be hit exactly.
  bool tie_degenerate = false;
};

// Picks t so that the fraction of scores strictly above t is the largest
// value not exceeding `positive_rate`.
ThresholdCalibration calibrate_threshold(std::span<const double> train_scores, double positive_rate);

std::vector<Label> predict_labels(const ThresholdedClassifier& clf, const SparseMatrix& X);
std::vector<Label> threshold_scores(std::span<const double> scores, double threshold);

MetricsReport classification_metrics(std::span<const Label> y_true, std::span<const Label> y_pred);

struct TunedClassifier {
  double C = 1.0;
  ThresholdedClassifier classifier;
  std::vector<double> grid;
  std::vector<double> validation_accuracy;  // one per grid value
  std::vector<std::string> warnings;
};

std::vector<double> default_C_grid();

// Trains one model per grid value on `train`, calibrates t on the training
// scores to the training positive rate and keeps the model with the best
// validation accuracy (ties -> smaller C). An empty validation set falls back
// to training accuracy.
TunedClassifier tune_C(const Dataset& train, const Dataset& val, std::span<const double> grid,
                       const LogregOptions& opts = {});

// Versioned text record: weights, intercept, C, threshold, seed.
void write_model(std::ostream& out, const ThresholdedClassifier& clf, std::uint64_t seed);
ThresholdedClassifier read_model(std::istream& in, std::uint64_t* seed = nullptr);

}  // namespace metarule
