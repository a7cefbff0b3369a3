#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metarule/blackbox.hpp"
#include "metarule/eval.hpp"
#include "metarule/factorize.hpp"
#include "metarule/metafeature.hpp"
#include "metarule/sampling.hpp"
#include "metarule/sparse.hpp"
#include "metarule/tree.hpp"

namespace metarule {

enum class Representation { FG, DDMF_NMF, DDMF_SVD, DomainMF };

std::string to_string(Representation r);  // "FG", "DDMF-NMF", "DDMF-SVD", "DomainMF"
Representation representation_from_string(const std::string& s);
RepresentationKind kind_of(Representation r);
bool uses_k(Representation r);  // data-driven representations sweep k

enum class SelectionCriterion { Fidelity, FFidel };
std::string to_string(SelectionCriterion c);
SelectionCriterion selection_from_string(const std::string& s);

std::vector<std::size_t> default_k_grid();

// Seed derivation. Every stochastic stage draws from
//   derive_seed(master, {stage, ...})
// with stage tags
//   1 fold assignment            {1}
//   2 train/validation split     {2, fold}
//   3 representation fit         {3, fold, representation, k}
//   4 stability bootstraps       {4, fold, representation, k}
//   5 single train/val/test split (train, explain, stability subcommands) {5}
namespace seed_stage {
inline constexpr std::uint64_t kFolds = 1;
inline constexpr std::uint64_t kHoldout = 2;
inline constexpr std::uint64_t kRepresentation = 3;
inline constexpr std::uint64_t kStability = 4;
inline constexpr std::uint64_t kSingleSplit = 5;
}  // namespace seed_stage

struct ExperimentConfig {
  std::string data_path;
  std::string feature_names_path;
  std::string domain_map_path;
  std::string manifest_path;
  std::string output_dir = "out";
  bool tfidf = false;

  std::vector<Representation> representations{Representation::FG, Representation::DDMF_NMF};
  std::vector<std::size_t> k_grid = default_k_grid();
  std::size_t min_depth = 1;
  std::size_t max_depth = 5;
  bool allow_deep_trees = false;  // lifts the depth <= 5 limit
  std::size_t min_leaf = 1;

  std::size_t n_folds = 5;
  double alpha = 0.8;  // single-split commands only; CV uses 1 - 1/n_folds
  double beta = 0.8;
  std::vector<double> C_grid = default_C_grid();
  LogregOptions logreg;

  NmfOptions nmf;
  SvdOptions svd;
  Normalization normalization = Normalization::ActiveCount;

  std::size_t B = 10;
  std::size_t top_n = 20;
  double match_c = 0.5;
  bool stability_all_folds = false;
  bool stability_per_k = true;  // stability curve over the k grid

  SelectionCriterion criterion = SelectionCriterion::Fidelity;
  std::uint64_t master_seed = 1;

  // Throws ConfigError.
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// One (representation, k, depth, fold) evaluation.
struct CellResult {
  Representation representation = Representation::FG;
  std::size_t k = 0;  // 0 when the representation has no k
  std::size_t depth = 0;
  std::size_t fold = 0;
  double train_fidelity = 0.0;
  double val_fidelity = 0.0;
  double val_f_fidel = 0.0;
  double test_fidelity = 0.0;
  double test_f_fidel = 0.0;
  double test_accuracy = 0.0;
  std::size_t n_rules = 0;
  std::size_t max_antecedents = 0;
};

struct BlackboxFold {
  std::size_t fold = 0;
  double C = 0.0;
  double threshold = 0.0;
  MetricsReport test;
  double train_positive_rate = 0.0;
  double predicted_positive_rate = 0.0;  // on the training split
};

// Mean over folds of one (representation, k, depth) cell.
struct CellSummary {
  Representation representation = Representation::FG;
  std::size_t k = 0;
  std::size_t depth = 0;
  std::size_t folds = 0;
  double val_fidelity = 0.0;
  double val_f_fidel = 0.0;
  double test_fidelity = 0.0;
  double test_f_fidel = 0.0;
  double test_accuracy = 0.0;
};

struct StabilityPoint {
  Representation representation = Representation::FG;
  std::size_t k = 0;
  std::size_t depth = 0;
  double stability = 0.0;
  std::size_t empty_explanations = 0;
};

struct RepresentationSummary {
  Representation representation = Representation::FG;
  bool complete = false;
  std::size_t k = 0;
  std::size_t depth = 0;
  double selection_score = 0.0;  // mean validation criterion of the selected cell
  double test_fidelity = 0.0;
  double test_fidelity_std = 0.0;
  double test_f_fidel = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> stability;
  std::size_t n_rules = 0;         // fold-0 tree of the selected cell
  std::size_t max_antecedents = 0;
  std::string rules_text;
  nlohmann::json rules_json;
  std::vector<RankedFeature> gini_top;  // root impurity reductions on fold 0
  std::vector<std::string> gini_top_names;
};

struct ExperimentReport {
  std::string dataset;
  std::size_t n = 0;
  std::size_t m = 0;
  double positive_rate = 0.0;
  double sparsity = 0.0;
  nlohmann::ordered_json config;
  std::vector<BlackboxFold> blackbox;
  MetricsReport blackbox_mean;
  std::vector<CellResult> cells;
  std::vector<RepresentationSummary> summaries;
  std::vector<StabilityPoint> stability_curve;
  std::vector<std::string> diagnostics;

  const RepresentationSummary* summary(Representation r) const;
};

// Mean-over-folds table of every cell that has all n_folds results.
std::vector<CellSummary> summarize_cells(const std::vector<CellResult>& cells, std::size_t n_folds);

// Best cell of one representation by mean validation criterion; ties go to
// the smaller depth, then the smaller k. nullopt when no cell is complete.
std::optional<CellSummary> select_cell(const std::vector<CellSummary>& summaries, Representation r,
                                       SelectionCriterion criterion);

// Full cross-validated protocol on an in-memory dataset. `domain_map` is
// required when DomainMF is requested.
ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& cfg,
                                const DomainMap* domain_map = nullptr, const std::string& dataset_name = "");

// Loads data (and map/manifest) from the paths in cfg, then runs.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Nodes at `depth` become leaves. Equals a fit with max_depth = depth since
// growth is greedy and top-down.
DecisionTree truncate_tree(const DecisionTree& tree, std::size_t depth);

nlohmann::ordered_json report_to_json(const ExperimentReport& report);
// Reads back the parts of report.json needed for cross-dataset comparison.
ExperimentReport report_from_json(const nlohmann::ordered_json& j);
ExperimentReport load_report(const std::string& path);

std::string format_table(const ExperimentReport& report);

// report.json, table.md, cells.csv, curves/*.csv, rules_<rep>.txt/.json.
// Byte-deterministic for a given report.
void emit_report(const ExperimentReport& report, const std::string& dir);

enum class Metric { Fidelity, FFidel, Accuracy, Stability };
Metric metric_from_string(const std::string& s);

// Paired per-dataset differences (a - b, in percentage points) of a test
// metric, fed to the one-tailed Wilcoxon signed-rank test.
ComparisonResult compare_representations(const std::vector<ExperimentReport>& reports,
                                         Representation a = Representation::DDMF_NMF,
                                         Representation b = Representation::FG, Metric metric = Metric::Fidelity);
ComparisonResult compare_paired(std::span<const double> a, std::span<const double> b);

// Single train/val/test split pipeline shared by the train, explain and
// stability subcommands.
struct SingleSplitModel {
  SplitPlan split;
  Dataset train, val, test;
  TunedClassifier blackbox;
  std::vector<Label> yhat_train, yhat_val, yhat_test;
  MetricsReport blackbox_test;
};
SingleSplitModel train_single_split(const Dataset& data, const ExperimentConfig& cfg);

struct ExplainResult {
  Representation representation = Representation::FG;
  std::size_t k = 0;
  std::size_t depth = 0;
  RuleSet rules;
  std::vector<std::string> feature_names;  // of the representation
  std::vector<std::vector<std::string>> annotations;
  FidelityReport train, test;
  std::string rules_text;
  nlohmann::json rules_json;
};

ExplainResult explain(const SingleSplitModel& model, Representation rep, std::size_t k, std::size_t depth,
                      const ExperimentConfig& cfg, const DomainMap* domain_map = nullptr);

StabilityReport single_split_stability(const SingleSplitModel& model, Representation rep, std::size_t k,
                                       std::size_t depth, const ExperimentConfig& cfg,
                                       const DomainMap* domain_map = nullptr);

Dataset load_dataset(const ExperimentConfig& cfg);

}  // namespace metarule
