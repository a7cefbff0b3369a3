#include "metarule/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <numeric>

#include "metarule/blackbox.hpp"
#include "metarule/error.hpp"
#include "metarule/rng.hpp"
#include "metarule/sampling.hpp"

namespace metarule {

std::string to_string(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Validation: return "val";
    case Partition::Test: return "test";
  }
  return "test";
}

namespace {

void check_pair(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw DomainError("label arrays differ in length");
  if (a.empty()) throw DomainError("no labels");
}

double agreement(std::span<const Label> a, std::span<const Label> b) {
  check_pair(a, b);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace

double fidelity(std::span<const Label> y_hat, std::span<const Label> y_wb) { return agreement(y_hat, y_wb); }

double accuracy(std::span<const Label> y_true, std::span<const Label> y_wb) { return agreement(y_true, y_wb); }

double f_fidel(std::span<const Label> y_hat, std::span<const Label> y_wb, bool* undefined) {
  check_pair(y_hat, y_wb);
  const auto m = classification_metrics(y_hat, y_wb);
  if (undefined) *undefined = m.precision + m.recall == 0.0;
  return m.f_score;
}

FidelityReport evaluate_explanation(std::span<const Label> y_true, std::span<const Label> y_hat,
                                    std::span<const Label> y_wb, Partition partition) {
  FidelityReport r;
  r.partition = partition;
  r.n = y_wb.size();
  r.fidelity = fidelity(y_hat, y_wb);
  r.f_fidel = f_fidel(y_hat, y_wb, &r.f_fidel_undefined);
  r.accuracy = accuracy(y_true, y_wb);
  return r;
}

double jaccard(std::span<const Index> a, std::span<const Index> b) {
  std::vector<Index> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  std::vector<Index> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  const auto uni = sa.size() + sb.size() - common.size();
  if (uni == 0) return 1.0;
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

double explanation_jaccard_ddmf(const std::vector<Descriptor>& v, const std::vector<Descriptor>& w,
                                std::size_t top_n, double c) {
  if (v.empty() && w.empty()) return 1.0;
  auto cut = [top_n](const Descriptor& d) {
    if (d.empty()) throw DomainError("metafeature without descriptor");
    Descriptor t;
    const auto take = static_cast<std::ptrdiff_t>(std::min(top_n, d.features.size()));
    t.features.assign(d.features.begin(), d.features.begin() + take);
    return t;
  };
  std::vector<Descriptor> tv, tw;
  for (const auto& d : v) tv.push_back(cut(d));
  for (const auto& d : w) tw.push_back(cut(d));

  struct Pair {
    double j;
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < tv.size(); ++a)
    for (std::size_t b = 0; b < tw.size(); ++b) {
      const double j = descriptor_jaccard(tv[a], tw[b]);
      if (j >= c) pairs.push_back({j, a, b});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.j != y.j) return x.j > y.j;
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  std::vector<char> used_v(tv.size(), 0), used_w(tw.size(), 0);
  std::size_t matched = 0;
  for (const auto& p : pairs) {
    if (used_v[p.a] || used_w[p.b]) continue;
    used_v[p.a] = used_w[p.b] = 1;
    ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(tv.size() + tw.size() - matched);
}

RepresentationBuilder fg_builder() {
  return [](const SparseMatrix& sample, std::uint64_t) { return BuiltRepresentation{TreeInput(sample), {}}; };
}

RepresentationBuilder fixed_space_builder(MetafeatureSpace space) {
  return [space = std::move(space)](const SparseMatrix& sample, std::uint64_t) {
    return BuiltRepresentation{TreeInput(space.transform(sample).values), {}};
  };
}

RepresentationBuilder ddmf_builder(std::size_t k, FactorMethod method, const DdmfOptions& opts, std::size_t top_n) {
  return [=](const SparseMatrix& sample, std::uint64_t seed) {
    const auto kk = std::min(k, std::min(sample.rows(), sample.cols()));
    const auto space = build_ddmf(sample, kk, method, seed, opts);
    BuiltRepresentation out{TreeInput(space.transform(sample).values), {}};
    for (std::size_t j = 0; j < space.k(); ++j) out.descriptors.push_back(space.top_features(j, top_n));
    return out;
  };
}

StabilityReport aggregate_stability(std::vector<std::vector<Index>> feature_sets,
                                    const std::vector<std::vector<Descriptor>>* descriptors, RepresentationKind kind,
                                    std::size_t top_n, double c) {
  const auto B = feature_sets.size();
  if (B < 2) throw DomainError("stability needs at least two bootstrap samples");
  StabilityReport r;
  r.B = B;
  r.kind = kind;
  r.top_n = top_n;
  r.c = c;
  const bool matched = kind == RepresentationKind::DDMF && descriptors != nullptr;
  auto described = [&](std::size_t b) {
    std::vector<Descriptor> out;
    for (auto f : feature_sets[b]) out.push_back((*descriptors)[b].at(f));
    return out;
  };
  for (std::size_t v = 0; v < B; ++v) {
    if (feature_sets[v].empty()) ++r.empty_explanations;
    for (std::size_t w = v + 1; w < B; ++w) {
      r.pairwise_jaccards.push_back(matched ? explanation_jaccard_ddmf(described(v), described(w), top_n, c)
                                            : jaccard(feature_sets[v], feature_sets[w]));
    }
  }
  double sum = 0.0;
  for (double j : r.pairwise_jaccards) sum += j;
  r.mean_jaccard = sum / static_cast<double>(r.pairwise_jaccards.size());
  r.feature_sets = std::move(feature_sets);
  return r;
}

StabilityReport stability(const SparseMatrix& X_train, std::span<const Label> y_hat_train, RepresentationKind kind,
                          const RepresentationBuilder& build, const StabilityConfig& cfg) {
  if (cfg.B < 2) throw DomainError("stability needs B >= 2");
  if (y_hat_train.size() != X_train.rows()) throw DomainError("label count does not match row count");

  const auto B = static_cast<std::int64_t>(cfg.B);
  std::vector<std::vector<Index>> sets(cfg.B);
  std::vector<std::vector<Descriptor>> descriptors(cfg.B);
  std::vector<std::exception_ptr> errors(cfg.B);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t bi = 0; bi < B; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    try {
      const auto sample = bootstrap_sample(X_train.rows(), derive_seed(cfg.seed, {b, 0}));
      std::vector<Label> labels(sample.indices.size());
      for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = y_hat_train[sample.indices[i]];
      auto rep = build(X_train.select_rows(sample.indices), derive_seed(cfg.seed, {b, 1}));
      CartOptions opts;
      opts.max_depth = cfg.depth;
      opts.min_leaf = cfg.min_leaf;
      const auto tree = fit_cart(rep.input, labels, opts, kind);
      sets[b] = feature_set(tree);
      descriptors[b] = std::move(rep.descriptors);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return aggregate_stability(std::move(sets), kind == RepresentationKind::DDMF ? &descriptors : nullptr, kind,
                             cfg.top_n, cfg.c);
}

namespace {

// One-tailed exact critical values, n = 5..25.
constexpr std::array<std::array<int, 2>, 21> kWilcoxonCritical{{
    {0, -1},   {2, -1},   {3, 0},    {5, 1},    {8, 3},    {10, 5},   {13, 7},
    {17, 9},   {21, 12},  {25, 15},  {30, 19},  {35, 23},  {41, 27},  {47, 32},
    {53, 37},  {60, 43},  {67, 49},  {75, 55},  {83, 62},  {91, 69},  {100, 76},
}};

}  // namespace

int wilcoxon_critical_value(std::size_t n, double alpha) {
  if (n < 5 || n > 25) return -1;
  if (alpha == 0.05) return kWilcoxonCritical[n - 5][0];
  if (alpha == 0.01) return kWilcoxonCritical[n - 5][1];
  throw DomainError("tabulated alpha levels are 0.05 and 0.01");
}

ComparisonResult wilcoxon_signed_rank(std::span<const double> differences) {
  ComparisonResult r;
  r.differences.assign(differences.begin(), differences.end());
  if (!differences.empty()) {
    double sum = 0.0;
    for (double d : differences) sum += d;
    r.mean = sum / static_cast<double>(differences.size());
    double sq = 0.0;
    for (double d : differences) sq += (d - r.mean) * (d - r.mean);
    r.stddev = std::sqrt(sq / static_cast<double>(differences.size()));
  }

  std::vector<double> nz;
  for (double d : differences)
    if (d != 0.0) nz.push_back(d);
  r.n_effective = nz.size();
  if (nz.size() < 5)
    throw DomainError("too few nonzero differences (" + std::to_string(nz.size()) + ", need at least 5)");

  std::vector<std::size_t> order(nz.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(nz[a]) < std::abs(nz[b]); });
  auto tied = [&](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); };
  std::vector<double> rank(nz.size());
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s + 1;
    while (e < order.size() && tied(std::abs(nz[order[s]]), std::abs(nz[order[e]]))) ++e;
    const double avg = (static_cast<double>(s + 1) + static_cast<double>(e)) / 2.0;
    for (std::size_t p = s; p < e; ++p) rank[order[p]] = avg;
    s = e;
  }
  for (std::size_t i = 0; i < nz.size(); ++i) (nz[i] > 0.0 ? r.rank_sum_positive : r.rank_sum_negative) += rank[i];
  r.T = std::min(r.rank_sum_positive, r.rank_sum_negative);

  const auto n = r.n_effective;
  if (n <= 25) {
    r.critical_05 = wilcoxon_critical_value(n, 0.05);
    r.critical_01 = wilcoxon_critical_value(n, 0.01);
    if (r.critical_05 >= 0 && r.T <= r.critical_05) r.significant_at.push_back(0.05);
    if (r.critical_01 >= 0 && r.T <= r.critical_01) r.significant_at.push_back(0.01);
  } else {
    r.exact = false;
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double sd = std::sqrt(nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0);
    const double z = (r.T - mu) / sd;
    if (z <= -1.6448536269514722) r.significant_at.push_back(0.05);
    if (z <= -2.3263478740408408) r.significant_at.push_back(0.01);
  }
  return r;
}

}  // namespace metarule
