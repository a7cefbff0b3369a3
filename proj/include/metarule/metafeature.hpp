#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "metarule/dense.hpp"
#include "metarule/factorize.hpp"
#include "metarule/sparse.hpp"

namespace metarule {

enum class MetafeatureKind { DDMF, DomainMF };

// Each fine-grained feature belongs to exactly one of k metafeatures.
struct BinaryAssignment {
  std::vector<Index> assignment;
  std::size_t k = 0;

  std::size_t features() const noexcept { return assignment.size(); }
  std::vector<std::size_t> histogram() const;
};

// Per-column argmax of R; ties go to the lowest metafeature index.
BinaryAssignment binarize_R(const ColMatrix& R);
inline BinaryAssignment binarize_R(const FactorModel& model) { return binarize_R(model.R); }

// Member features of one metafeature, strongest loading first.
struct Descriptor {
  std::vector<Index> features;
  std::vector<double> weights;
  // Members whose winning loading was negative (SVD only).
  std::size_t negative_dominant = 0;

  bool empty() const noexcept { return features.empty(); }
};

enum class Normalization {
  ActiveCount,  // divide by the number of active features of the instance
  None,         // raw group sums
  Binary,       // 1 where the group sum is nonzero
};

std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string& s);

struct MetafeatureMatrix {
  RowMatrix values;
  std::vector<std::size_t> source_active_counts;
  std::size_t empty_rows = 0;  // instances without active features (all-zero rows)
};

// X'[i,j] = sum of X[i,f] over features assigned to j, then scaled per the
// normalization (default: divided by the active-feature count of row i).
MetafeatureMatrix project_and_normalize(const SparseMatrix& X, const BinaryAssignment& a,
                                        Normalization norm = Normalization::ActiveCount);

// A fitted mapping from fine-grained features to metafeatures. Applying it
// never changes it; validation and test data go through the training fit.
struct MetafeatureSpace {
  MetafeatureKind kind = MetafeatureKind::DDMF;
  FactorMethod method = FactorMethod::NMF;  // DDMF only
  std::uint64_t seed = 0;
  Normalization normalization = Normalization::ActiveCount;
  BinaryAssignment assignment;
  std::vector<Descriptor> descriptors;
  std::vector<std::string> names;
  std::vector<std::string> warnings;

  std::size_t k() const noexcept { return assignment.k; }
  std::size_t features() const noexcept { return assignment.features(); }

  MetafeatureMatrix transform(const SparseMatrix& X) const;

  // The n strongest members of metafeature j.
  Descriptor top_features(std::size_t j, std::size_t n = 20) const;
};

struct DdmfOptions {
  NmfOptions nmf;
  SvdOptions svd;
  Normalization normalization = Normalization::ActiveCount;
};

// Descriptors and names from an already fitted factor model.
MetafeatureSpace space_from_factors(const FactorModel& model, Normalization norm = Normalization::ActiveCount);

MetafeatureSpace build_ddmf(const SparseMatrix& X_train, std::size_t k, FactorMethod method, std::uint64_t seed,
                            const DdmfOptions& opts = {});

using DomainMap = std::vector<std::pair<std::string, std::string>>;  // (feature, group)

// `feature<TAB>group` per line.
DomainMap read_domain_map(std::istream& in);
DomainMap load_domain_map(const std::string& path);
void write_domain_map(std::ostream& out, const DomainMap& map);

inline constexpr const char* kOtherGroup = "other";

// Groups keep their order of first appearance in the map; features not in
// the map go to a trailing "other" metafeature.
MetafeatureSpace build_domain_mf(const DomainMap& map, const std::vector<std::string>& feature_names,
                                 Normalization norm = Normalization::ActiveCount);

double descriptor_jaccard(const Descriptor& a, const Descriptor& b);

// Two metafeatures are the same when their descriptor sets overlap with
// Jaccard >= c.
bool match_metafeatures(const Descriptor& a, const Descriptor& b, double c = 0.5);

void write_space(std::ostream& out, const MetafeatureSpace& space);
MetafeatureSpace read_space(std::istream& in);

}  // namespace metarule
