#include "metarule/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <tuple>

#include "metarule/error.hpp"
#include "metarule/rng.hpp"
#include "metarule/sampling.hpp"

namespace metarule {

std::string to_string(Representation r) {
  switch (r) {
    case Representation::FG: return "FG";
    case Representation::DDMF_NMF: return "DDMF-NMF";
    case Representation::DDMF_SVD: return "DDMF-SVD";
    case Representation::DomainMF: return "DomainMF";
  }
  return "FG";
}

Representation representation_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "fg") return Representation::FG;
  if (t == "ddmf-nmf" || t == "ddmf" || t == "nmf") return Representation::DDMF_NMF;
  if (t == "ddmf-svd" || t == "svd") return Representation::DDMF_SVD;
  if (t == "domainmf" || t == "domain") return Representation::DomainMF;
  throw ConfigError("unknown representation '" + s + "' (FG, DDMF-NMF, DDMF-SVD, DomainMF)");
}

RepresentationKind kind_of(Representation r) {
  switch (r) {
    case Representation::FG: return RepresentationKind::FG;
    case Representation::DDMF_NMF:
    case Representation::DDMF_SVD: return RepresentationKind::DDMF;
    case Representation::DomainMF: return RepresentationKind::DomainMF;
  }
  return RepresentationKind::FG;
}

bool uses_k(Representation r) { return r == Representation::DDMF_NMF || r == Representation::DDMF_SVD; }

std::string to_string(SelectionCriterion c) { return c == SelectionCriterion::Fidelity ? "fidelity" : "f-fidel"; }

SelectionCriterion selection_from_string(const std::string& s) {
  if (s == "fidelity") return SelectionCriterion::Fidelity;
  if (s == "f-fidel" || s == "ffidel") return SelectionCriterion::FFidel;
  throw ConfigError("unknown selection criterion '" + s + "' (fidelity, f-fidel)");
}

std::vector<std::size_t> default_k_grid() { return {10, 30, 50, 70, 100, 300, 500, 700, 1000}; }

void ExperimentConfig::validate() const {
  if (representations.empty()) throw ConfigError("no representations requested");
  if (k_grid.empty()) throw ConfigError("empty k grid");
  if (std::find(k_grid.begin(), k_grid.end(), std::size_t{0}) != k_grid.end()) throw ConfigError("k must be >= 1");
  if (C_grid.empty()) throw ConfigError("empty C grid");
  for (double c : C_grid)
    if (!(c > 0.0)) throw ConfigError("C grid values must be positive");
  if (min_depth < 1 || min_depth > max_depth) throw ConfigError("depth range must satisfy 1 <= min <= max");
  if (max_depth > 5 && !allow_deep_trees) throw ConfigError("depth above 5 needs allow_deep_trees");
  if (n_folds < 2) throw ConfigError("need at least 2 folds");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0,1]");
  if (B < 2) throw ConfigError("B must be at least 2");
  if (min_leaf < 1) throw ConfigError("min_leaf must be at least 1");
  if (!(match_c > 0.0 && match_c <= 1.0)) throw ConfigError("match cut-off must lie in (0,1]");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["data"] = data_path;
  j["tfidf"] = tfidf;
  auto& reps = j["representations"] = nlohmann::ordered_json::array();
  for (auto r : representations) reps.push_back(to_string(r));
  j["k_grid"] = k_grid;
  j["depth_range"] = {min_depth, max_depth};
  j["min_leaf"] = min_leaf;
  j["n_folds"] = n_folds;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["C_grid"] = C_grid;
  j["logreg"] = {{"max_iter", logreg.max_iter}, {"tol", logreg.tol}};
  j["nmf"] = {{"max_iter", nmf.max_iter}, {"tol", nmf.tol}};
  j["svd"] = {{"oversample", svd.oversample}, {"power_iterations", svd.power_iterations}};
  j["normalization"] = to_string(normalization);
  j["B"] = B;
  j["top_n"] = top_n;
  j["match_c"] = match_c;
  j["stability_all_folds"] = stability_all_folds;
  j["stability_per_k"] = stability_per_k;
  j["selection"] = to_string(criterion);
  j["selection_pooling"] = "mean validation score across folds";
  j["master_seed"] = master_seed;
  return j;
}

const RepresentationSummary* ExperimentReport::summary(Representation r) const {
  for (const auto& s : summaries)
    if (s.representation == r) return &s;
  return nullptr;
}

DecisionTree truncate_tree(const DecisionTree& tree, std::size_t depth) {
  DecisionTree out;
  out.max_depth = std::min(tree.max_depth, depth);
  out.kind = tree.kind;
  out.feature_dimension = tree.feature_dimension;
  if (tree.nodes.empty()) return out;
  auto copy = [&](auto&& self, std::size_t id) -> void {
    const auto at = out.nodes.size();
    out.nodes.push_back(tree.nodes[id]);
    const auto& src = tree.nodes[id];
    if (src.is_leaf()) return;
    if (src.depth >= depth) {
      out.nodes[at].feature = -1;
      out.nodes[at].left = out.nodes[at].right = 0;
      out.nodes[at].threshold = 0.0;
      return;
    }
    out.nodes[at].left = out.nodes.size();
    self(self, src.left);
    out.nodes[at].right = out.nodes.size();
    self(self, src.right);
  };
  copy(copy, 0);
  return out;
}

std::vector<CellSummary> summarize_cells(const std::vector<CellResult>& cells, std::size_t n_folds) {
  std::map<std::tuple<int, std::size_t, std::size_t>, std::vector<const CellResult*>> groups;
  for (const auto& c : cells) groups[{static_cast<int>(c.representation), c.k, c.depth}].push_back(&c);
  std::vector<CellSummary> out;
  for (auto& [key, members] : groups) {
    if (members.size() != n_folds) continue;
    std::sort(members.begin(), members.end(), [](auto a, auto b) { return a->fold < b->fold; });
    CellSummary s;
    s.representation = static_cast<Representation>(std::get<0>(key));
    s.k = std::get<1>(key);
    s.depth = std::get<2>(key);
    s.folds = members.size();
    for (const auto* c : members) {
      s.val_fidelity += c->val_fidelity;
      s.val_f_fidel += c->val_f_fidel;
      s.test_fidelity += c->test_fidelity;
      s.test_f_fidel += c->test_f_fidel;
      s.test_accuracy += c->test_accuracy;
    }
    const double n = static_cast<double>(members.size());
    s.val_fidelity /= n;
    s.val_f_fidel /= n;
    s.test_fidelity /= n;
    s.test_f_fidel /= n;
    s.test_accuracy /= n;
    out.push_back(s);
  }
  return out;
}

std::optional<CellSummary> select_cell(const std::vector<CellSummary>& summaries, Representation r,
                                       SelectionCriterion criterion) {
  std::optional<CellSummary> best;
  auto score = [criterion](const CellSummary& s) {
    return criterion == SelectionCriterion::Fidelity ? s.val_fidelity : s.val_f_fidel;
  };
  for (const auto& s : summaries) {
    if (s.representation != r) continue;
    if (!best || score(s) > score(*best) ||
        (score(s) == score(*best) && (s.depth < best->depth || (s.depth == best->depth && s.k < best->k))))
      best = s;
  }
  return best;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("no data path given");
  LibsvmOptions opts;
  opts.feature_names_path = cfg.feature_names_path;
  Dataset d = load_libsvm(cfg.data_path, opts);
  if (cfg.tfidf) d.X = tfidf_transform(d.X);
  d.validate();
  return d;
}

namespace {

struct FoldContext {
  std::size_t fold = 0;
  Dataset train, val, test;
  std::vector<Label> yhat_train, yhat_val, yhat_test;
};

struct BuiltSplit {
  TreeInput train, val, test;
  std::optional<MetafeatureSpace> space;
  std::vector<std::string> names;
};

// Feature names of a metafeature space: its group names, or for data-driven
// spaces "MF<j>" annotated with the strongest members.
std::vector<std::string> space_feature_names(const MetafeatureSpace& space) { return space.names; }

std::vector<std::vector<std::string>> descriptor_annotations(const MetafeatureSpace& space,
                                                             const std::vector<std::string>& fg_names,
                                                             std::size_t top) {
  std::vector<std::vector<std::string>> out(space.k());
  for (std::size_t j = 0; j < space.k(); ++j)
    for (auto f : space.top_features(j, top).features) out[j].push_back(fg_names[f]);
  return out;
}

std::uint64_t rep_tag(Representation r) { return static_cast<std::uint64_t>(r); }

std::size_t cap_k(std::size_t k, const SparseMatrix& X) { return std::min(k, std::min(X.rows(), X.cols())); }

std::vector<std::size_t> effective_k_grid(const ExperimentConfig& cfg, std::size_t cap) {
  std::vector<std::size_t> ks;
  for (auto k : cfg.k_grid)
    if (k <= cap) ks.push_back(k);
  if (ks.empty()) ks.push_back(cap);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

MetafeatureSpace fit_space(Representation rep, const SparseMatrix& X, std::size_t k, std::uint64_t seed,
                           const ExperimentConfig& cfg, const DomainMap* domain_map,
                           const std::vector<std::string>& feature_names) {
  if (rep == Representation::DomainMF) {
    if (!domain_map) throw ConfigError("DomainMF requested without a domain map");
    return build_domain_mf(*domain_map, feature_names, cfg.normalization);
  }
  DdmfOptions opts{cfg.nmf, cfg.svd, cfg.normalization};
  const auto method = rep == Representation::DDMF_NMF ? FactorMethod::NMF : FactorMethod::SVD;
  return build_ddmf(X, cap_k(k, X), method, seed, opts);
}

BuiltSplit build_split(Representation rep, std::size_t k, std::uint64_t seed, const Dataset& train,
                       const Dataset& val, const Dataset& test, const ExperimentConfig& cfg,
                       const DomainMap* domain_map) {
  if (rep == Representation::FG)
    return BuiltSplit{TreeInput(train.X), TreeInput(val.X), TreeInput(test.X), std::nullopt, train.feature_names};
  auto space = fit_space(rep, train.X, k, seed, cfg, domain_map, train.feature_names);
  BuiltSplit out{TreeInput(space.transform(train.X).values), TreeInput(space.transform(val.X).values),
                 TreeInput(space.transform(test.X).values), std::nullopt, space_feature_names(space)};
  out.space = std::move(space);
  return out;
}

struct TaskOutput {
  std::vector<CellResult> cells;
  std::vector<DecisionTree> trees;  // per depth, min_depth first
  std::optional<MetafeatureSpace> space;
  std::vector<std::string> names;
  std::string error;
};

TaskOutput run_task(Representation rep, std::size_t k, const FoldContext& fc, const ExperimentConfig& cfg,
                    const DomainMap* domain_map) {
  TaskOutput out;
  const auto seed = derive_seed(cfg.master_seed, {seed_stage::kRepresentation, fc.fold, rep_tag(rep), k});
  auto built = build_split(rep, k, seed, fc.train, fc.val, fc.test, cfg, domain_map);

  CartOptions opts;
  opts.max_depth = cfg.max_depth;
  opts.min_leaf = cfg.min_leaf;
  const auto full = fit_cart(built.train, fc.yhat_train, opts, kind_of(rep));
  for (std::size_t d = cfg.min_depth; d <= cfg.max_depth; ++d) {
    auto tree = truncate_tree(full, d);
    const auto rules = extract_rules(tree);
    CellResult c;
    c.representation = rep;
    c.k = uses_k(rep) ? k : 0;
    c.depth = d;
    c.fold = fc.fold;
    c.train_fidelity = fidelity(fc.yhat_train, predict(tree, built.train));
    if (fc.val.size() > 0) {
      const auto yv = predict(tree, built.val);
      c.val_fidelity = fidelity(fc.yhat_val, yv);
      c.val_f_fidel = f_fidel(fc.yhat_val, yv);
    } else {
      // no validation split (beta = 1): select on the training split
      const auto yt = predict(tree, built.train);
      c.val_fidelity = fidelity(fc.yhat_train, yt);
      c.val_f_fidel = f_fidel(fc.yhat_train, yt);
    }
    const auto report = evaluate_explanation(fc.test.y, fc.yhat_test, predict(tree, built.test), Partition::Test);
    c.test_fidelity = report.fidelity;
    c.test_f_fidel = report.f_fidel;
    c.test_accuracy = report.accuracy;
    c.n_rules = rules.rules.size();
    c.max_antecedents = rules.max_antecedents();
    out.cells.push_back(c);
    out.trees.push_back(std::move(tree));
  }
  out.space = std::move(built.space);
  out.names = std::move(built.names);
  return out;
}

struct TaskKey {
  Representation rep;
  std::size_t k;
};

RepresentationBuilder stability_builder(Representation rep, std::size_t k, const ExperimentConfig& cfg,
                                        const std::optional<MetafeatureSpace>& fixed_space) {
  switch (rep) {
    case Representation::FG: return fg_builder();
    case Representation::DomainMF: return fixed_space_builder(*fixed_space);
    case Representation::DDMF_NMF:
    case Representation::DDMF_SVD:
      return ddmf_builder(k, rep == Representation::DDMF_NMF ? FactorMethod::NMF : FactorMethod::SVD,
                          DdmfOptions{cfg.nmf, cfg.svd, cfg.normalization}, cfg.top_n);
  }
  return fg_builder();
}

}  // namespace

SingleSplitModel train_single_split(const Dataset& data, const ExperimentConfig& cfg) {
  SingleSplitModel m;
  m.split = split_train_val_test(data, cfg.alpha, cfg.beta, derive_seed(cfg.master_seed, {seed_stage::kSingleSplit}));
  m.train = data.subset(m.split.train_idx);
  m.val = data.subset(m.split.val_idx);
  m.test = data.subset(m.split.test_idx);
  m.blackbox = tune_C(m.train, m.val, cfg.C_grid, cfg.logreg);
  m.yhat_train = predict_labels(m.blackbox.classifier, m.train.X);
  m.yhat_val = predict_labels(m.blackbox.classifier, m.val.X);
  m.yhat_test = predict_labels(m.blackbox.classifier, m.test.X);
  if (m.test.size() > 0) m.blackbox_test = classification_metrics(m.test.y, m.yhat_test);
  return m;
}

ExplainResult explain(const SingleSplitModel& model, Representation rep, std::size_t k, std::size_t depth,
                      const ExperimentConfig& cfg, const DomainMap* domain_map) {
  const auto seed = derive_seed(cfg.master_seed, {seed_stage::kRepresentation, 0, rep_tag(rep), k});
  auto built = build_split(rep, k, seed, model.train, model.val, model.test, cfg, domain_map);
  CartOptions opts;
  opts.max_depth = depth;
  opts.min_leaf = cfg.min_leaf;
  const auto tree = fit_cart(built.train, model.yhat_train, opts, kind_of(rep));

  ExplainResult r;
  r.representation = rep;
  r.k = built.space ? built.space->k() : 0;
  r.depth = depth;
  r.rules = extract_rules(tree);
  r.feature_names = built.names;
  if (built.space && built.space->kind == MetafeatureKind::DDMF)
    r.annotations = descriptor_annotations(*built.space, model.train.feature_names, 5);
  r.train = evaluate_explanation(model.train.y, model.yhat_train, predict(tree, built.train), Partition::Train);
  if (model.test.size() > 0)
    r.test = evaluate_explanation(model.test.y, model.yhat_test, predict(tree, built.test), Partition::Test);
  r.rules_text = format_rules(r.rules, r.feature_names);
  r.rules_json = rules_to_json(r.rules, r.feature_names, r.annotations.empty() ? nullptr : &r.annotations);
  return r;
}

StabilityReport single_split_stability(const SingleSplitModel& model, Representation rep, std::size_t k,
                                       std::size_t depth, const ExperimentConfig& cfg, const DomainMap* domain_map) {
  std::optional<MetafeatureSpace> fixed;
  if (rep == Representation::DomainMF)
    fixed = fit_space(rep, model.train.X, k, 0, cfg, domain_map, model.train.feature_names);
  StabilityConfig sc;
  sc.B = cfg.B;
  sc.depth = depth;
  sc.min_leaf = cfg.min_leaf;
  sc.top_n = cfg.top_n;
  sc.c = cfg.match_c;
  sc.seed = derive_seed(cfg.master_seed, {seed_stage::kStability, 0, rep_tag(rep), k});
  return stability(model.train.X, model.yhat_train, kind_of(rep), stability_builder(rep, k, cfg, fixed), sc);
}

ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& cfg, const DomainMap* domain_map,
                                const std::string& dataset_name) {
  cfg.validate();
  data.validate();
  if (data.size() < cfg.n_folds) throw DataError("fewer instances than folds");
  for (auto r : cfg.representations)
    if (r == Representation::DomainMF && !domain_map) throw ConfigError("DomainMF requested without a domain map");

  ExperimentReport report;
  report.dataset = dataset_name;
  report.n = data.size();
  report.m = data.dimension();
  report.positive_rate = data.positive_rate();
  report.sparsity = data.X.sparsity();
  report.config = cfg.to_json();

  const auto folds = make_folds(data, cfg.n_folds, derive_seed(cfg.master_seed, {seed_stage::kFolds}));

  // fold-0 artifacts (or every fold's, for all-fold stability)
  std::vector<FoldContext> kept_contexts;
  std::map<std::pair<int, std::size_t>, TaskOutput> fold0_tasks;
  std::map<int, bool> failed;

  for (std::size_t f = 0; f < cfg.n_folds; ++f) {
    FoldContext fc;
    fc.fold = f;
    const auto rest = folds.rest_indices(f);
    auto [train_idx, val_idx] = split_holdout(data.y, rest, cfg.beta,
                                              derive_seed(cfg.master_seed, {seed_stage::kHoldout, f}),
                                              &report.diagnostics);
    const auto test_idx = folds.test_indices(f);
    fc.train = data.subset(train_idx);
    fc.val = data.subset(val_idx);
    fc.test = data.subset(test_idx);

    const auto tuned = tune_C(fc.train, fc.val, cfg.C_grid, cfg.logreg);
    for (const auto& w : tuned.warnings) report.diagnostics.push_back("fold " + std::to_string(f) + ": " + w);
    fc.yhat_train = predict_labels(tuned.classifier, fc.train.X);
    fc.yhat_val = predict_labels(tuned.classifier, fc.val.X);
    fc.yhat_test = predict_labels(tuned.classifier, fc.test.X);
    BlackboxFold bb;
    bb.fold = f;
    bb.C = tuned.C;
    bb.threshold = tuned.classifier.threshold;
    bb.test = classification_metrics(fc.test.y, fc.yhat_test);
    bb.train_positive_rate = fc.train.positive_rate();
    bb.predicted_positive_rate = static_cast<double>(std::count(fc.yhat_train.begin(), fc.yhat_train.end(), 1)) /
                                 static_cast<double>(fc.yhat_train.size());
    report.blackbox.push_back(bb);

    std::vector<TaskKey> tasks;
    const auto cap = std::min(fc.train.size(), data.dimension());
    for (auto rep : cfg.representations) {
      if (uses_k(rep))
        for (auto k : effective_k_grid(cfg, cap)) tasks.push_back({rep, k});
      else
        tasks.push_back({rep, 0});
    }
    std::vector<TaskOutput> outputs(tasks.size());
    const auto n_tasks = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t t = 0; t < n_tasks; ++t) {
      const auto& task = tasks[static_cast<std::size_t>(t)];
      try {
        outputs[static_cast<std::size_t>(t)] = run_task(task.rep, task.k, fc, cfg, domain_map);
      } catch (const std::exception& e) {
        outputs[static_cast<std::size_t>(t)].error = e.what();
      }
    }
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      auto& out = outputs[t];
      if (!out.error.empty()) {
        report.diagnostics.push_back("fold " + std::to_string(f) + ", " + to_string(tasks[t].rep) +
                                     (uses_k(tasks[t].rep) ? " k=" + std::to_string(tasks[t].k) : "") + ": " +
                                     out.error);
        failed[static_cast<int>(tasks[t].rep)] = true;
        continue;
      }
      report.cells.insert(report.cells.end(), out.cells.begin(), out.cells.end());
      if (f == 0) fold0_tasks[{static_cast<int>(tasks[t].rep), tasks[t].k}] = std::move(out);
    }
    if (f == 0 || cfg.stability_all_folds) kept_contexts.push_back(std::move(fc));
  }

  MetricsReport mean;
  for (const auto& bb : report.blackbox) {
    mean.accuracy += bb.test.accuracy;
    mean.precision += bb.test.precision;
    mean.recall += bb.test.recall;
    mean.f_score += bb.test.f_score;
  }
  const double nf = static_cast<double>(report.blackbox.size());
  mean.accuracy /= nf;
  mean.precision /= nf;
  mean.recall /= nf;
  mean.f_score /= nf;
  report.blackbox_mean = mean;

  const auto summaries = summarize_cells(report.cells, cfg.n_folds);
  const auto& fold0 = kept_contexts.front();

  for (auto rep : cfg.representations) {
    RepresentationSummary s;
    s.representation = rep;
    const auto best = select_cell(summaries, rep, cfg.criterion);
    if (!best) {
      report.diagnostics.push_back(to_string(rep) + ": no cell completed on every fold");
      report.summaries.push_back(std::move(s));
      continue;
    }
    s.complete = !failed[static_cast<int>(rep)];
    s.k = best->k;
    s.depth = best->depth;
    s.selection_score = cfg.criterion == SelectionCriterion::Fidelity ? best->val_fidelity : best->val_f_fidel;
    s.test_fidelity = best->test_fidelity;
    s.test_f_fidel = best->test_f_fidel;
    s.test_accuracy = best->test_accuracy;
    double sq = 0.0;
    for (const auto& c : report.cells)
      if (c.representation == rep && c.k == best->k && c.depth == best->depth)
        sq += (c.test_fidelity - s.test_fidelity) * (c.test_fidelity - s.test_fidelity);
    s.test_fidelity_std = std::sqrt(sq / static_cast<double>(cfg.n_folds));

    const auto it = fold0_tasks.find({static_cast<int>(rep), best->k});
    if (it != fold0_tasks.end()) {
      const auto& task = it->second;
      const auto& tree = task.trees[best->depth - cfg.min_depth];
      const auto rules = extract_rules(tree);
      s.n_rules = rules.rules.size();
      s.max_antecedents = rules.max_antecedents();
      std::vector<std::vector<std::string>> annotations;
      if (task.space && task.space->kind == MetafeatureKind::DDMF)
        annotations = descriptor_annotations(*task.space, data.feature_names, 5);
      s.rules_text = format_rules(rules, task.names);
      s.rules_json = rules_to_json(rules, task.names, annotations.empty() ? nullptr : &annotations);

      const TreeInput input = task.space ? TreeInput(task.space->transform(fold0.train.X).values)
                                         : TreeInput(fold0.train.X);
      s.gini_top = impurity_reduction_ranking(input, fold0.yhat_train, 10);
      for (const auto& g : s.gini_top) s.gini_top_names.push_back(task.names[g.feature]);
    }
    report.summaries.push_back(std::move(s));
  }

  // Stability: at the selected cell, plus one point per k when requested.
  for (auto& s : report.summaries) {
    if (s.depth == 0) continue;
    const auto rep = s.representation;
    std::vector<std::pair<std::size_t, std::size_t>> points{{s.k, s.depth}};
    if (uses_k(rep) && cfg.stability_per_k) {
      std::map<std::size_t, std::vector<CellSummary>> by_k;
      for (const auto& cs : summaries)
        if (cs.representation == rep) by_k[cs.k].push_back(cs);
      points.clear();
      for (const auto& [k, cells] : by_k)
        if (auto sel = select_cell(cells, rep, cfg.criterion)) points.emplace_back(sel->k, sel->depth);
    }
    for (const auto& [k, depth] : points) {
      double total = 0.0;
      std::size_t empty = 0;
      try {
        for (const auto& fc : kept_contexts) {
          std::optional<MetafeatureSpace> fixed;
          if (rep == Representation::DomainMF)
            fixed = fit_space(rep, fc.train.X, 0, 0, cfg, domain_map, data.feature_names);
          StabilityConfig sc;
          sc.B = cfg.B;
          sc.depth = depth;
          sc.min_leaf = cfg.min_leaf;
          sc.top_n = cfg.top_n;
          sc.c = cfg.match_c;
          sc.seed = derive_seed(cfg.master_seed, {seed_stage::kStability, fc.fold, rep_tag(rep), k});
          const auto st = stability(fc.train.X, fc.yhat_train, kind_of(rep), stability_builder(rep, k, cfg, fixed), sc);
          total += st.mean_jaccard;
          empty += st.empty_explanations;
        }
      } catch (const std::exception& e) {
        report.diagnostics.push_back(to_string(rep) + " stability: " + e.what());
        continue;
      }
      const double value = total / static_cast<double>(kept_contexts.size());
      report.stability_curve.push_back({rep, k, depth, value, empty});
      if (k == s.k && depth == s.depth) s.stability = value;
      if (empty > 0)
        report.diagnostics.push_back(to_string(rep) + " k=" + std::to_string(k) + ": " + std::to_string(empty) +
                                     " bootstrap explanations used no features");
    }
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = load_dataset(cfg);
  std::optional<DomainMap> map;
  if (!cfg.domain_map_path.empty()) map = load_domain_map(cfg.domain_map_path);
  std::string name = cfg.data_path;
  if (!cfg.manifest_path.empty()) {
    const auto manifest = load_manifest(cfg.manifest_path);
    if (!manifest.name.empty()) name = manifest.name;
  }
  return run_experiment(data, cfg, map ? &*map : nullptr, name);
}

}  // namespace metarule
