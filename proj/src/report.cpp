#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "metarule/error.hpp"
#include "metarule/harness.hpp"

namespace metarule {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

ojson metrics_json(const MetricsReport& m) {
  return ojson{{"accuracy", m.accuracy},
               {"precision", m.precision},
               {"recall", m.recall},
               {"f_score", m.f_score},
               {"precision_undefined", m.precision_undefined},
               {"recall_undefined", m.recall_undefined}};
}

MetricsReport metrics_from(const ojson& j) {
  MetricsReport m;
  m.accuracy = j.value("accuracy", 0.0);
  m.precision = j.value("precision", 0.0);
  m.recall = j.value("recall", 0.0);
  m.f_score = j.value("f_score", 0.0);
  m.precision_undefined = j.value("precision_undefined", false);
  m.recall_undefined = j.value("recall_undefined", false);
  return m;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << content;
  if (!out) throw DataError("write failed for " + p.string());
}

std::string file_tag(Representation r) {
  switch (r) {
    case Representation::FG: return "fg";
    case Representation::DDMF_NMF: return "ddmf_nmf";
    case Representation::DDMF_SVD: return "ddmf_svd";
    case Representation::DomainMF: return "domainmf";
  }
  return "fg";
}

}  // namespace

ojson report_to_json(const ExperimentReport& r) {
  ojson j;
  j["format"] = "metarule-report 1";
  j["dataset"] = {{"name", r.dataset}, {"n", r.n}, {"m", r.m}, {"positive_rate", r.positive_rate},
                  {"sparsity", r.sparsity}};
  j["config"] = r.config;

  auto& bb = j["blackbox"] = ojson::object();
  bb["mean_test"] = metrics_json(r.blackbox_mean);
  auto& folds = bb["folds"] = ojson::array();
  for (const auto& f : r.blackbox)
    folds.push_back(ojson{{"fold", f.fold},
                          {"C", f.C},
                          {"threshold", f.threshold},
                          {"train_positive_rate", f.train_positive_rate},
                          {"predicted_positive_rate", f.predicted_positive_rate},
                          {"test", metrics_json(f.test)}});

  auto& sums = j["summaries"] = ojson::array();
  for (const auto& s : r.summaries) {
    ojson o{{"representation", to_string(s.representation)},
            {"complete", s.complete},
            {"k", s.k},
            {"depth", s.depth},
            {"selection_score", s.selection_score},
            {"test_fidelity", s.test_fidelity},
            {"test_fidelity_std", s.test_fidelity_std},
            {"test_f_fidel", s.test_f_fidel},
            {"test_accuracy", s.test_accuracy}};
    o["stability"] = s.stability ? ojson(*s.stability) : ojson(nullptr);
    o["n_rules"] = s.n_rules;
    o["max_antecedents"] = s.max_antecedents;
    auto& g = o["gini_top"] = ojson::array();
    for (std::size_t i = 0; i < s.gini_top.size(); ++i)
      g.push_back(ojson{{"feature", s.gini_top_names[i]},
                         {"index", s.gini_top[i].feature},
                         {"reduction", s.gini_top[i].reduction}});
    sums.push_back(std::move(o));
  }

  auto& st = j["stability_curve"] = ojson::array();
  for (const auto& p : r.stability_curve)
    st.push_back(ojson{{"representation", to_string(p.representation)},
                       {"k", p.k},
                       {"depth", p.depth},
                       {"stability", p.stability},
                       {"empty_explanations", p.empty_explanations}});

  auto& cells = j["cells"] = ojson::array();
  for (const auto& c : r.cells)
    cells.push_back(ojson{{"representation", to_string(c.representation)},
                          {"k", c.k},
                          {"depth", c.depth},
                          {"fold", c.fold},
                          {"train_fidelity", c.train_fidelity},
                          {"val_fidelity", c.val_fidelity},
                          {"val_f_fidel", c.val_f_fidel},
                          {"test_fidelity", c.test_fidelity},
                          {"test_f_fidel", c.test_f_fidel},
                          {"test_accuracy", c.test_accuracy},
                          {"n_rules", c.n_rules},
                          {"max_antecedents", c.max_antecedents}});
  j["diagnostics"] = r.diagnostics;
  return j;
}

ExperimentReport report_from_json(const ojson& j) {
  if (j.value("format", "") != "metarule-report 1") throw DataError("not a metarule report");
  ExperimentReport r;
  try {
    const auto& d = j.at("dataset");
    r.dataset = d.at("name").get<std::string>();
    r.n = d.at("n").get<std::size_t>();
    r.m = d.at("m").get<std::size_t>();
    r.positive_rate = d.at("positive_rate").get<double>();
    r.sparsity = d.at("sparsity").get<double>();
    r.config = j.at("config");
    r.blackbox_mean = metrics_from(j.at("blackbox").at("mean_test"));
    for (const auto& f : j.at("blackbox").at("folds")) {
      BlackboxFold b;
      b.fold = f.at("fold").get<std::size_t>();
      b.C = f.at("C").get<double>();
      b.threshold = f.at("threshold").get<double>();
      b.train_positive_rate = f.at("train_positive_rate").get<double>();
      b.predicted_positive_rate = f.at("predicted_positive_rate").get<double>();
      b.test = metrics_from(f.at("test"));
      r.blackbox.push_back(b);
    }
    for (const auto& o : j.at("summaries")) {
      RepresentationSummary s;
      s.representation = representation_from_string(o.at("representation").get<std::string>());
      s.complete = o.at("complete").get<bool>();
      s.k = o.at("k").get<std::size_t>();
      s.depth = o.at("depth").get<std::size_t>();
      s.selection_score = o.at("selection_score").get<double>();
      s.test_fidelity = o.at("test_fidelity").get<double>();
      s.test_fidelity_std = o.at("test_fidelity_std").get<double>();
      s.test_f_fidel = o.at("test_f_fidel").get<double>();
      s.test_accuracy = o.at("test_accuracy").get<double>();
      if (!o.at("stability").is_null()) s.stability = o.at("stability").get<double>();
      s.n_rules = o.at("n_rules").get<std::size_t>();
      s.max_antecedents = o.at("max_antecedents").get<std::size_t>();
      for (const auto& g : o.at("gini_top")) {
        s.gini_top.push_back({g.at("index").get<Index>(), g.at("reduction").get<double>()});
        s.gini_top_names.push_back(g.at("feature").get<std::string>());
      }
      r.summaries.push_back(std::move(s));
    }
    for (const auto& o : j.at("stability_curve"))
      r.stability_curve.push_back({representation_from_string(o.at("representation").get<std::string>()),
                                   o.at("k").get<std::size_t>(), o.at("depth").get<std::size_t>(),
                                   o.at("stability").get<double>(), o.at("empty_explanations").get<std::size_t>()});
    for (const auto& o : j.at("cells")) {
      CellResult c;
      c.representation = representation_from_string(o.at("representation").get<std::string>());
      c.k = o.at("k").get<std::size_t>();
      c.depth = o.at("depth").get<std::size_t>();
      c.fold = o.at("fold").get<std::size_t>();
      c.train_fidelity = o.at("train_fidelity").get<double>();
      c.val_fidelity = o.at("val_fidelity").get<double>();
      c.val_f_fidel = o.at("val_f_fidel").get<double>();
      c.test_fidelity = o.at("test_fidelity").get<double>();
      c.test_f_fidel = o.at("test_f_fidel").get<double>();
      c.test_accuracy = o.at("test_accuracy").get<double>();
      c.n_rules = o.at("n_rules").get<std::size_t>();
      c.max_antecedents = o.at("max_antecedents").get<std::size_t>();
      r.cells.push_back(c);
    }
    r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return r;
}

ExperimentReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  ojson j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return report_from_json(j);
}

std::string format_table(const ExperimentReport& r) {
  std::ostringstream out;
  out << "| Data set | Representation | fidelity(%) | f-fidel(%) | stability(%) | accuracy(%) | optimal depth |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& s : r.summaries) {
    out << "| " << r.dataset << " | " << to_string(s.representation);
    if (uses_k(s.representation) && s.depth > 0) out << " (k=" << s.k << ")";
    if (s.depth == 0) {
      out << " | - | - | - | - | - |\n";
      continue;
    }
    out << " | " << pct(s.test_fidelity) << " | " << pct(s.test_f_fidel) << " | "
        << (s.stability ? pct(*s.stability) : std::string("-")) << " | " << pct(s.test_accuracy) << " | " << s.depth
        << " |\n";
  }
  return out.str();
}

void emit_report(const ExperimentReport& r, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "curves");

  write_file(root / "report.json", report_to_json(r).dump(2) + "\n");
  write_file(root / "table.md", format_table(r));

  {
    std::ostringstream out;
    out << "representation,k,depth,fold,train_fidelity,val_fidelity,val_f_fidel,test_fidelity,test_f_fidel,"
           "test_accuracy,n_rules,max_antecedents\n";
    for (const auto& c : r.cells)
      out << to_string(c.representation) << ',' << c.k << ',' << c.depth << ',' << c.fold << ','
          << num(c.train_fidelity) << ',' << num(c.val_fidelity) << ',' << num(c.val_f_fidel) << ','
          << num(c.test_fidelity) << ',' << num(c.test_f_fidel) << ',' << num(c.test_accuracy) << ',' << c.n_rules
          << ',' << c.max_antecedents << '\n';
    write_file(root / "cells.csv", out.str());
  }

  const auto summaries = summarize_cells(r.cells, r.blackbox.size());
  {
    std::ostringstream out;
    out << "representation,k,depth,val_fidelity,test_fidelity,test_f_fidel\n";
    for (const auto& s : summaries)
      out << to_string(s.representation) << ',' << s.k << ',' << s.depth << ',' << num(s.val_fidelity) << ','
          << num(s.test_fidelity) << ',' << num(s.test_f_fidel) << '\n';
    write_file(root / "curves" / "fidelity_vs_depth.csv", out.str());
  }
  {
    // best depth per k, by validation fidelity
    std::map<std::pair<int, std::size_t>, std::vector<CellSummary>> by_k;
    for (const auto& s : summaries)
      if (uses_k(s.representation)) by_k[{static_cast<int>(s.representation), s.k}].push_back(s);
    std::ostringstream out;
    out << "representation,k,depth,val_fidelity,test_fidelity,test_f_fidel\n";
    for (const auto& [key, group] : by_k) {
      const auto rep = static_cast<Representation>(key.first);
      if (auto best = select_cell(group, rep, SelectionCriterion::Fidelity))
        out << to_string(rep) << ',' << best->k << ',' << best->depth << ',' << num(best->val_fidelity) << ','
            << num(best->test_fidelity) << ',' << num(best->test_f_fidel) << '\n';
    }
    write_file(root / "curves" / "fidelity_vs_k.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "representation,k,depth,stability,empty_explanations\n";
    for (const auto& p : r.stability_curve)
      out << to_string(p.representation) << ',' << p.k << ',' << p.depth << ',' << num(p.stability) << ','
          << p.empty_explanations << '\n';
    write_file(root / "curves" / "stability_vs_k.csv", out.str());
  }

  for (const auto& s : r.summaries) {
    if (s.depth == 0 || s.rules_text.empty()) continue;
    write_file(root / ("rules_" + file_tag(s.representation) + ".txt"), s.rules_text);
    write_file(root / ("rules_" + file_tag(s.representation) + ".json"), s.rules_json.dump(2) + "\n");
  }
}

Metric metric_from_string(const std::string& s) {
  if (s == "fidelity") return Metric::Fidelity;
  if (s == "f-fidel" || s == "ffidel") return Metric::FFidel;
  if (s == "accuracy") return Metric::Accuracy;
  if (s == "stability") return Metric::Stability;
  throw ConfigError("unknown metric '" + s + "' (fidelity, f-fidel, accuracy, stability)");
}

ComparisonResult compare_representations(const std::vector<ExperimentReport>& reports, Representation a,
                                         Representation b, Metric metric) {
  auto value = [metric](const ExperimentReport& r, const RepresentationSummary* s) -> double {
    switch (metric) {
      case Metric::Fidelity: return s->test_fidelity;
      case Metric::FFidel: return s->test_f_fidel;
      case Metric::Accuracy: return s->test_accuracy;
      case Metric::Stability:
        if (!s->stability) throw DataError(r.dataset + ": no stability for " + to_string(s->representation));
        return *s->stability;
    }
    return 0.0;
  };
  std::vector<double> va, vb;
  for (const auto& r : reports) {
    const auto* sa = r.summary(a);
    const auto* sb = r.summary(b);
    if (!sa || !sb || sa->depth == 0 || sb->depth == 0)
      throw DataError(r.dataset + ": report lacks " + to_string(a) + " or " + to_string(b));
    va.push_back(100.0 * value(r, sa));
    vb.push_back(100.0 * value(r, sb));
  }
  return compare_paired(va, vb);
}

ComparisonResult compare_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return wilcoxon_signed_rank(d);
}

}  // namespace metarule
