#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "metarule/error.hpp"
#include "metarule/harness.hpp"
#include "metarule/synth.hpp"

using namespace metarule;
namespace fs = std::filesystem;

namespace {

struct Cli {
  ExperimentConfig cfg;
  std::vector<std::string> reps{"FG", "DDMF-NMF"};
  std::string normalization = "active";
  std::string criterion = "fidelity";

  // explain / stability
  std::string rep = "DDMF-NMF";
  std::size_t k = 30;
  std::size_t depth = 3;

  // compare
  std::vector<std::string> reports;
  std::vector<double> diffs;
  std::string compare_a = "DDMF-NMF";
  std::string compare_b = "FG";
  std::string metric = "fidelity";

  SynthConfig synth;
};

void finalize(Cli& c) {
  c.cfg.representations.clear();
  for (const auto& r : c.reps) c.cfg.representations.push_back(representation_from_string(r));
  c.cfg.normalization = normalization_from_string(c.normalization);
  c.cfg.criterion = selection_from_string(c.criterion);
  c.cfg.validate();
}

std::optional<DomainMap> maybe_map(const ExperimentConfig& cfg) {
  if (cfg.domain_map_path.empty()) return std::nullopt;
  return load_domain_map(cfg.domain_map_path);
}

void print_metrics(const char* label, const MetricsReport& m) {
  std::printf("%s accuracy=%.4f precision=%.4f recall=%.4f f=%.4f\n", label, m.accuracy, m.precision, m.recall,
              m.f_score);
}

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << s;
  if (!out) throw DataError("cannot write " + p.string());
}

int cmd_train(Cli& c) {
  finalize(c);
  const auto data = load_dataset(c.cfg);
  const auto m = train_single_split(data, c.cfg);
  for (const auto& w : m.split.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& w : m.blackbox.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("n=%zu m=%zu train=%zu val=%zu test=%zu\n", data.size(), data.dimension(), m.train.size(),
              m.val.size(), m.test.size());
  for (std::size_t i = 0; i < m.blackbox.grid.size(); ++i)
    std::printf("C=%g validation_accuracy=%.4f\n", m.blackbox.grid[i], m.blackbox.validation_accuracy[i]);
  std::printf("selected C=%g threshold=%.6g\n", m.blackbox.C, m.blackbox.classifier.threshold);
  print_metrics("test", m.blackbox_test);
  fs::create_directories(c.cfg.output_dir);
  const auto path = fs::path(c.cfg.output_dir) / "model.txt";
  std::ofstream out(path);
  write_model(out, m.blackbox.classifier, c.cfg.master_seed);
  if (!out) throw DataError("cannot write " + path.string());
  std::printf("model written to %s\n", path.string().c_str());
  return 0;
}

int cmd_explain(Cli& c) {
  finalize(c);
  const auto rep = representation_from_string(c.rep);
  const auto data = load_dataset(c.cfg);
  const auto map = maybe_map(c.cfg);
  const auto m = train_single_split(data, c.cfg);
  const auto r = explain(m, rep, c.k, c.depth, c.cfg, map ? &*map : nullptr);
  std::printf("%s", r.rules_text.c_str());
  std::printf("train fidelity=%.4f f-fidel=%.4f accuracy=%.4f\n", r.train.fidelity, r.train.f_fidel,
              r.train.accuracy);
  std::printf("test  fidelity=%.4f f-fidel=%.4f accuracy=%.4f\n", r.test.fidelity, r.test.f_fidel, r.test.accuracy);
  std::string tag = to_string(rep);
  for (auto& ch : tag) ch = ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  const fs::path dir(c.cfg.output_dir);
  write_text(dir / ("rules_" + tag + ".txt"), r.rules_text);
  write_text(dir / ("rules_" + tag + ".json"), r.rules_json.dump(2) + "\n");
  return 0;
}

int cmd_sweep(Cli& c) {
  finalize(c);
  const auto report = run_experiment(c.cfg);
  emit_report(report, c.cfg.output_dir);
  std::printf("%s", format_table(report).c_str());
  for (const auto& d : report.diagnostics) std::fprintf(stderr, "note: %s\n", d.c_str());
  for (const auto& s : report.summaries)
    if (!s.complete) return 2;
  return 0;
}

int cmd_stability(Cli& c) {
  finalize(c);
  const auto rep = representation_from_string(c.rep);
  const auto data = load_dataset(c.cfg);
  const auto map = maybe_map(c.cfg);
  const auto m = train_single_split(data, c.cfg);
  const auto st = single_split_stability(m, rep, c.k, c.depth, c.cfg, map ? &*map : nullptr);
  std::printf("representation=%s k=%zu depth=%zu B=%zu stability=%.4f\n", to_string(rep).c_str(),
              uses_k(rep) ? c.k : 0, c.depth, st.B, st.mean_jaccard);
  if (st.empty_explanations > 0)
    std::printf("%zu bootstrap explanations used no features\n", st.empty_explanations);
  return 0;
}

int cmd_compare(Cli& c) {
  ComparisonResult r;
  if (!c.diffs.empty()) {
    r = wilcoxon_signed_rank(c.diffs);
  } else {
    if (c.reports.empty()) throw ConfigError("compare needs report files or --diffs");
    std::vector<ExperimentReport> reports;
    for (const auto& p : c.reports) reports.push_back(load_report(p));
    r = compare_representations(reports, representation_from_string(c.compare_a),
                                representation_from_string(c.compare_b), metric_from_string(c.metric));
  }
  std::printf("differences:");
  for (double d : r.differences) std::printf(" %.2f", d);
  std::printf("\nmean=%.2f sd=%.2f\n", r.mean, r.stddev);
  std::printf("n=%zu W+=%.1f W-=%.1f T=%.1f%s\n", r.n_effective, r.rank_sum_positive, r.rank_sum_negative, r.T,
              r.exact ? "" : " (normal approximation)");
  std::printf("critical values: 5%%=%d 1%%=%d\n", r.critical_05, r.critical_01);
  if (r.significant_at.empty())
    std::printf("not significant at 5%%\n");
  else
    std::printf("significant at %g%%\n", 100.0 * r.significant_at.back());
  return 0;
}

int cmd_synth(Cli& c) {
  const auto s = generate_synthetic(c.synth);
  write_synthetic(s, c.cfg.output_dir);
  std::printf("wrote n=%zu m=%zu positive_rate=%.4f to %s\n", s.data.size(), s.data.dimension(),
              s.data.positive_rate(), c.cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-based explanations of black-box classifiers on sparse data"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value configuration file");

  Cli c;
  auto& cfg = c.cfg;
  app.add_option("--data", cfg.data_path, "libsvm data file");
  app.add_option("--names", cfg.feature_names_path, "Feature names, one per line");
  app.add_option("--domain-map", cfg.domain_map_path, "feature<TAB>group map for DomainMF");
  app.add_option("--manifest", cfg.manifest_path, "Dataset manifest");
  app.add_option("-o,--out", cfg.output_dir, "Output directory")->capture_default_str();
  app.add_flag("--tfidf", cfg.tfidf, "Apply tf-idf to the input counts");
  app.add_option("--reps", c.reps, "Representations: FG DDMF-NMF DDMF-SVD DomainMF")->capture_default_str();
  app.add_option("--k-grid", cfg.k_grid, "Metafeature counts to sweep")->capture_default_str();
  app.add_option("--min-depth", cfg.min_depth)->capture_default_str();
  app.add_option("--max-depth", cfg.max_depth)->capture_default_str();
  app.add_flag("--allow-deep-trees", cfg.allow_deep_trees, "Permit depths above 5");
  app.add_option("--min-leaf", cfg.min_leaf)->capture_default_str();
  app.add_option("--folds", cfg.n_folds)->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "Train+val share of the single split")->capture_default_str();
  app.add_option("--beta", cfg.beta, "Train share of train+val")->capture_default_str();
  app.add_option("--C-grid", cfg.C_grid)->capture_default_str();
  app.add_option("--logreg-iters", cfg.logreg.max_iter)->capture_default_str();
  app.add_option("--logreg-tol", cfg.logreg.tol)->capture_default_str();
  app.add_option("--nmf-iters", cfg.nmf.max_iter)->capture_default_str();
  app.add_option("--nmf-tol", cfg.nmf.tol)->capture_default_str();
  app.add_option("--normalization", c.normalization, "active, none or binary")->capture_default_str();
  app.add_option("--B", cfg.B, "Bootstrap samples for stability")->capture_default_str();
  app.add_option("--top-n", cfg.top_n, "Descriptor length for metafeature matching")->capture_default_str();
  app.add_option("--match-c", cfg.match_c, "Descriptor Jaccard cut-off")->capture_default_str();
  app.add_flag("--stability-all-folds", cfg.stability_all_folds);
  app.add_option("--criterion", c.criterion, "Selection criterion: fidelity or f-fidel")->capture_default_str();
  app.add_option("--seed", cfg.master_seed, "Master seed")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train and evaluate the black box on one split");
  auto* expl = app.add_subcommand("explain", "Extract rules for one representation at fixed k and depth");
  auto* sweep = app.add_subcommand("sweep", "Cross-validated sweep over representations, k and depth");
  auto* stab = app.add_subcommand("stability", "Bootstrap stability of one representation");
  auto* comp = app.add_subcommand("compare", "Wilcoxon signed-rank comparison across reports");
  auto* syn = app.add_subcommand("synth", "Generate the planted-group benchmark");

  for (auto* sub : {expl, stab}) {
    sub->add_option("--rep", c.rep)->capture_default_str();
    sub->add_option("--k", c.k)->capture_default_str();
    sub->add_option("--depth", c.depth)->capture_default_str();
  }
  comp->add_option("reports", c.reports, "report.json files, one per dataset");
  comp->add_option("--diffs", c.diffs, "Raw paired differences instead of reports");
  comp->add_option("--a", c.compare_a)->capture_default_str();
  comp->add_option("--b", c.compare_b)->capture_default_str();
  comp->add_option("--metric", c.metric, "fidelity, f-fidel, accuracy or stability")->capture_default_str();
  syn->add_option("--n", c.synth.n)->capture_default_str();
  syn->add_option("--m", c.synth.m)->capture_default_str();
  syn->add_option("--groups", c.synth.groups)->capture_default_str();
  syn->add_option("--groups-per-instance", c.synth.groups_per_instance)->capture_default_str();
  syn->add_option("--min-active", c.synth.min_active)->capture_default_str();
  syn->add_option("--max-active", c.synth.max_active)->capture_default_str();
  syn->add_option("--noise", c.synth.noise)->capture_default_str();
  syn->add_option("--scale", c.synth.scale)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  c.synth.seed = cfg.master_seed;

  try {
    if (*train) return cmd_train(c);
    if (*expl) return cmd_explain(c);
    if (*sweep) return cmd_sweep(c);
    if (*stab) return cmd_stability(c);
    if (*comp) return cmd_compare(c);
    if (*syn) return cmd_synth(c);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  }
  return 0;
}
