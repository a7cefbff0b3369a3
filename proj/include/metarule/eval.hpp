#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "metarule/metafeature.hpp"
#include "metarule/sparse.hpp"
#include "metarule/tree.hpp"

namespace metarule {

enum class Partition { Train, Validation, Test };
std::string to_string(Partition p);

// Share of instances where the explanation agrees with the black box.
double fidelity(std::span<const Label> y_hat, std::span<const Label> y_wb);

// F-score of the explanation with the black-box labels as ground truth.
// `undefined` (optional) is set when precision + recall = 0; the value is 0.
double f_fidel(std::span<const Label> y_hat, std::span<const Label> y_wb, bool* undefined = nullptr);

// Share of instances where the explanation agrees with the true label.
double accuracy(std::span<const Label> y_true, std::span<const Label> y_wb);

struct FidelityReport {
  double fidelity = 0.0;
  double f_fidel = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  Partition partition = Partition::Test;
  bool f_fidel_undefined = false;
};

FidelityReport evaluate_explanation(std::span<const Label> y_true, std::span<const Label> y_hat,
                                    std::span<const Label> y_wb, Partition partition);

// |A ∩ B| / |A ∪ B| over sorted or unsorted index sets; 1 when both are empty.
double jaccard(std::span<const Index> a, std::span<const Index> b);

// Jaccard between two explanations over data-driven metafeatures that were
// fitted separately. Metafeatures are paired greedily by descending
// descriptor Jaccard (ties: lower v index, then lower w index); a pair counts
// as shared when its descriptor Jaccard is >= c. Descriptors are cut to
// their first top_n features. Both empty -> 1.
double explanation_jaccard_ddmf(const std::vector<Descriptor>& v, const std::vector<Descriptor>& w,
                                std::size_t top_n = 20, double c = 0.5);

struct StabilityConfig {
  std::size_t B = 10;
  std::size_t depth = 5;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
  std::size_t top_n = 20;
  double c = 0.5;
};

struct StabilityReport {
  std::size_t B = 0;
  RepresentationKind kind = RepresentationKind::FG;
  std::vector<double> pairwise_jaccards;  // (0,1), (0,2), ..., (B-2,B-1)
  double mean_jaccard = 0.0;
  std::size_t top_n = 20;
  double c = 0.5;
  std::vector<std::vector<Index>> feature_sets;
  // Bootstrap explanations that used no feature at all (single-leaf trees).
  std::size_t empty_explanations = 0;
};

// Feature matrix of one bootstrap sample; descriptors are filled for data-driven
// metafeatures (one per metafeature) and left empty otherwise.
struct BuiltRepresentation {
  TreeInput input;
  std::vector<Descriptor> descriptors;
};
using RepresentationBuilder = std::function<BuiltRepresentation(const SparseMatrix& sample, std::uint64_t seed)>;

RepresentationBuilder fg_builder();
RepresentationBuilder fixed_space_builder(MetafeatureSpace space);
RepresentationBuilder ddmf_builder(std::size_t k, FactorMethod method, const DdmfOptions& opts, std::size_t top_n = 20);

// Bootstrap stability: B resamples of the training data, each relabelled with
// the black-box labels of the drawn instances, one surrogate per resample,
// mean Jaccard over all B(B-1)/2 pairs of used-feature sets. The B fits run
// concurrently; the result does not depend on scheduling.
StabilityReport stability(const SparseMatrix& X_train, std::span<const Label> y_hat_train, RepresentationKind kind,
                          const RepresentationBuilder& build, const StabilityConfig& cfg);

// Pairwise aggregation over already collected explanations (exposed for tests).
StabilityReport aggregate_stability(std::vector<std::vector<Index>> feature_sets,
                                    const std::vector<std::vector<Descriptor>>* descriptors, RepresentationKind kind,
                                    std::size_t top_n, double c);

struct ComparisonResult {
  std::vector<double> differences;
  std::size_t n_effective = 0;  // nonzero differences
  double rank_sum_positive = 0.0;
  double rank_sum_negative = 0.0;
  double T = 0.0;  // min of the two rank sums
  // Critical values for the one-tailed test (-1: not attainable at this n).
  int critical_05 = -1;
  int critical_01 = -1;
  bool exact = true;  // false: normal approximation (n > 25)
  std::vector<double> significant_at;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

// One-tailed Wilcoxon signed-rank test on paired differences. Zeros are
// dropped, absolute values ranked with average ranks on ties.
ComparisonResult wilcoxon_signed_rank(std::span<const double> differences);

// Tabulated exact one-tailed critical value for n in [5, 25] and alpha in
// {0.05, 0.01}: reject when T <= value. -1 when no T is small enough.
int wilcoxon_critical_value(std::size_t n, double alpha);

}  // namespace metarule
