#pragma once

#include <cstdint>
#include <string>

#include "metarule/metafeature.hpp"
#include "metarule/sparse.hpp"

namespace metarule {

// Planted-group benchmark: features are partitioned into `groups` latent
// groups, each instance draws its active features from a few groups, and
// the label follows a logistic model on the per-group shares of those
// features. Individual features carry little signal; group totals carry it.
struct SynthConfig {
  std::size_t n = 2000;
  std::size_t m = 5000;
  std::size_t groups = 20;
  std::size_t groups_per_instance = 3;
  std::size_t min_active = 20;
  std::size_t max_active = 60;
  double noise = 0.1;   // share of active features drawn uniformly from all features
  double scale = 6.0;   // logit scale on the group shares
  std::uint64_t seed = 1;
};

struct SynthData {
  Dataset data;
  DomainMap domain_map;          // the planted groups
  std::vector<double> group_effects;
  DatasetManifest manifest;
};

SynthData generate_synthetic(const SynthConfig& cfg);

// data.libsvm, data.libsvm.names, domain_map.tsv, manifest.txt
void write_synthetic(const SynthData& s, const std::string& dir);

}  // namespace metarule
