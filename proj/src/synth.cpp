#include "metarule/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "metarule/error.hpp"
#include "metarule/rng.hpp"

namespace metarule {

SynthData generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n == 0 || cfg.m == 0) throw ConfigError("synthetic data needs n, m >= 1");
  if (cfg.groups == 0 || cfg.groups > cfg.m) throw ConfigError("groups must lie in [1, m]");
  if (cfg.groups_per_instance == 0 || cfg.groups_per_instance > cfg.groups)
    throw ConfigError("groups_per_instance must lie in [1, groups]");
  if (cfg.min_active == 0 || cfg.min_active > cfg.max_active || cfg.max_active > cfg.m)
    throw ConfigError("active range must satisfy 1 <= min <= max <= m");
  if (!(cfg.noise >= 0.0 && cfg.noise <= 1.0)) throw ConfigError("noise must lie in [0,1]");

  Rng rng(cfg.seed);

  // balanced random partition of the features
  std::vector<std::size_t> perm(cfg.m);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  std::vector<std::size_t> group_of(cfg.m);
  std::vector<std::vector<std::size_t>> members(cfg.groups);
  for (std::size_t p = 0; p < cfg.m; ++p) {
    group_of[perm[p]] = p % cfg.groups;
    members[p % cfg.groups].push_back(perm[p]);
  }
  for (auto& g : members) std::sort(g.begin(), g.end());

  std::vector<double> beta(cfg.groups);
  for (std::size_t g = 0; g < cfg.groups; ++g) beta[g] = (g % 2 == 0 ? 1.0 : -1.0) * (1.0 + rng.uniform());

  std::vector<Triplet> triplets;
  std::vector<Label> y(cfg.n);
  std::vector<std::size_t> group_ids(cfg.groups);
  std::iota(group_ids.begin(), group_ids.end(), 0);
  std::vector<char> used(cfg.m, 0);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    rng.shuffle(group_ids.begin(), group_ids.end());
    std::vector<double> mix(cfg.groups_per_instance);
    double total = 0.0;
    for (auto& w : mix) total += (w = -std::log(rng.uniform_pos()));  // flat Dirichlet
    for (auto& w : mix) w /= total;

    const auto active = cfg.min_active + static_cast<std::size_t>(rng.below(cfg.max_active - cfg.min_active + 1));
    std::vector<std::size_t> chosen;
    std::vector<double> share(cfg.groups, 0.0);
    while (chosen.size() < active) {
      std::size_t f;
      if (rng.uniform() < cfg.noise) {
        f = static_cast<std::size_t>(rng.below(cfg.m));
      } else {
        double u = rng.uniform();
        std::size_t c = 0;
        while (c + 1 < mix.size() && u >= mix[c]) u -= mix[c++];
        const auto& g = members[group_ids[c]];
        f = g[static_cast<std::size_t>(rng.below(g.size()))];
      }
      if (used[f]) continue;
      used[f] = 1;
      chosen.push_back(f);
      share[group_of[f]] += 1.0;
    }
    double logit = 0.0;
    for (std::size_t g = 0; g < cfg.groups; ++g) logit += beta[g] * share[g] / static_cast<double>(active);
    const double p = 1.0 / (1.0 + std::exp(-cfg.scale * logit));
    y[i] = rng.uniform() < p ? 1 : 0;
    for (auto f : chosen) {
      used[f] = 0;
      triplets.push_back({i, f, 1.0});
    }
  }

  SynthData out;
  out.data.X = SparseMatrix::from_triplets(cfg.n, cfg.m, std::move(triplets));
  out.data.y = std::move(y);
  out.data.feature_names.resize(cfg.m);
  for (std::size_t f = 0; f < cfg.m; ++f) out.data.feature_names[f] = "item" + std::to_string(f + 1);
  out.data.validate();
  for (std::size_t f = 0; f < cfg.m; ++f)
    out.domain_map.emplace_back(out.data.feature_names[f], "group" + std::to_string(group_of[f] + 1));
  out.group_effects = beta;
  out.manifest.name = "synthetic";
  out.manifest.n = cfg.n;
  out.manifest.m = cfg.m;
  out.manifest.label_meaning = "logistic in planted group shares";
  out.manifest.extra["groups"] = std::to_string(cfg.groups);
  out.manifest.extra["seed"] = std::to_string(cfg.seed);
  return out;
}

void write_synthetic(const SynthData& s, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  save_libsvm((root / "data.libsvm").string(), s.data);
  {
    std::ofstream out(root / "data.libsvm.names");
    for (const auto& name : s.data.feature_names) out << name << '\n';
    if (!out) throw DataError("cannot write feature names in " + dir);
  }
  {
    std::ofstream out(root / "domain_map.tsv");
    write_domain_map(out, s.domain_map);
    if (!out) throw DataError("cannot write domain map in " + dir);
  }
  std::ofstream out(root / "manifest.txt");
  write_manifest(out, s.manifest);
  if (!out) throw DataError("cannot write manifest in " + dir);
}

}  // namespace metarule
