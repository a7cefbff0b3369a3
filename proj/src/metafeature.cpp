#include "metarule/metafeature.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "metarule/error.hpp"
#include "metarule/kernels.hpp"

namespace metarule {

std::vector<std::size_t> BinaryAssignment::histogram() const {
  std::vector<std::size_t> h(k, 0);
  for (auto a : assignment) ++h[a];
  return h;
}

BinaryAssignment binarize_R(const ColMatrix& R) {
  BinaryAssignment out;
  out.k = static_cast<std::size_t>(R.rows());
  out.assignment.resize(static_cast<std::size_t>(R.cols()));
  for (Eigen::Index f = 0; f < R.cols(); ++f) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < R.rows(); ++j)
      if (R(j, f) > R(best, f)) best = j;
    out.assignment[static_cast<std::size_t>(f)] = static_cast<Index>(best);
  }
  return out;
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::ActiveCount: return "active";
    case Normalization::None: return "none";
    case Normalization::Binary: return "binary";
  }
  return "active";
}

Normalization normalization_from_string(const std::string& s) {
  if (s == "active") return Normalization::ActiveCount;
  if (s == "none") return Normalization::None;
  if (s == "binary") return Normalization::Binary;
  throw DomainError("unknown normalization '" + s + "' (active|none|binary)");
}

MetafeatureMatrix project_and_normalize(const SparseMatrix& X, const BinaryAssignment& a, Normalization norm) {
  if (a.features() != X.cols())
    throw DomainError("assignment covers " + std::to_string(a.features()) + " features, matrix has " +
                      std::to_string(X.cols()));
  MetafeatureMatrix out;
  out.values.resize(static_cast<Eigen::Index>(X.rows()), static_cast<Eigen::Index>(a.k));
  kernels::parallel::project_rows(X, a.assignment, a.k, out.values.data());
  out.source_active_counts = row_active_counts(X);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const auto active = out.source_active_counts[i];
    auto row = out.values.row(static_cast<Eigen::Index>(i));
    if (active == 0) {
      ++out.empty_rows;
      continue;
    }
    switch (norm) {
      case Normalization::ActiveCount: row /= static_cast<double>(active); break;
      case Normalization::Binary:
        for (Eigen::Index j = 0; j < row.size(); ++j) row(j) = row(j) != 0.0 ? 1.0 : 0.0;
        break;
      case Normalization::None: break;
    }
  }
  return out;
}

MetafeatureMatrix MetafeatureSpace::transform(const SparseMatrix& X) const {
  return project_and_normalize(X, assignment, normalization);
}

Descriptor MetafeatureSpace::top_features(std::size_t j, std::size_t n) const {
  if (j >= k()) throw DomainError("metafeature index " + std::to_string(j) + " out of range");
  const auto& d = descriptors[j];
  Descriptor out;
  const auto take = std::min(n, d.features.size());
  out.features.assign(d.features.begin(), d.features.begin() + static_cast<std::ptrdiff_t>(take));
  out.weights.assign(d.weights.begin(), d.weights.begin() + static_cast<std::ptrdiff_t>(take));
  out.negative_dominant = static_cast<std::size_t>(
      std::count_if(out.weights.begin(), out.weights.end(), [](double w) { return w < 0.0; }));
  return out;
}

MetafeatureSpace space_from_factors(const FactorModel& model, Normalization norm) {
  MetafeatureSpace space;
  space.kind = MetafeatureKind::DDMF;
  space.method = model.method;
  space.seed = model.meta.seed;
  space.normalization = norm;
  space.assignment = binarize_R(model.R);
  const auto k = space.k();
  space.descriptors.resize(k);
  for (std::size_t f = 0; f < space.features(); ++f) {
    const auto j = space.assignment.assignment[f];
    space.descriptors[j].features.push_back(static_cast<Index>(f));
  }
  std::size_t negative = 0;
  for (std::size_t j = 0; j < k; ++j) {
    auto& d = space.descriptors[j];
    const auto row = static_cast<Eigen::Index>(j);
    std::stable_sort(d.features.begin(), d.features.end(), [&](Index a, Index b) {
      return model.R(row, static_cast<Eigen::Index>(a)) > model.R(row, static_cast<Eigen::Index>(b));
    });
    for (auto f : d.features) d.weights.push_back(model.R(row, static_cast<Eigen::Index>(f)));
    d.negative_dominant = static_cast<std::size_t>(
        std::count_if(d.weights.begin(), d.weights.end(), [](double w) { return w < 0.0; }));
    negative += d.negative_dominant;
    space.names.push_back("MF" + std::to_string(j));
  }
  const auto empty = static_cast<std::size_t>(
      std::count_if(space.descriptors.begin(), space.descriptors.end(), [](const Descriptor& d) { return d.empty(); }));
  if (empty > 0) space.warnings.push_back(std::to_string(empty) + " metafeatures received no features");
  if (negative > 0)
    space.warnings.push_back(std::to_string(negative) + " features assigned through a negative maximum loading");
  return space;
}

MetafeatureSpace build_ddmf(const SparseMatrix& X_train, std::size_t k, FactorMethod method, std::uint64_t seed,
                            const DdmfOptions& opts) {
  const auto model = method == FactorMethod::NMF ? fit_nmf(X_train, k, seed, opts.nmf)
                                                 : fit_svd(X_train, k, seed, opts.svd);
  return space_from_factors(model, opts.normalization);
}

DomainMap read_domain_map(std::istream& in) {
  DomainMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw ParseError("expected feature<TAB>group", line_no);
    map.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return map;
}

DomainMap load_domain_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_domain_map(in);
}

void write_domain_map(std::ostream& out, const DomainMap& map) {
  for (const auto& [f, g] : map) out << f << '\t' << g << '\n';
}

MetafeatureSpace build_domain_mf(const DomainMap& map, const std::vector<std::string>& feature_names,
                                 Normalization norm) {
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t f = 0; f < feature_names.size(); ++f) index_of.emplace(feature_names[f], f);

  std::vector<std::string> unknown, duplicate;
  std::vector<std::string> groups;
  std::unordered_map<std::string, std::size_t> group_of;
  constexpr auto kUnassigned = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> member_of(feature_names.size(), kUnassigned);
  for (const auto& [feature, group] : map) {
    const auto it = index_of.find(feature);
    if (it == index_of.end()) {
      unknown.push_back(feature);
      continue;
    }
    if (member_of[it->second] != kUnassigned) {
      duplicate.push_back(feature);
      continue;
    }
    auto [g, inserted] = group_of.emplace(group, groups.size());
    if (inserted) groups.push_back(group);
    member_of[it->second] = g->second;
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size() && i < 20; ++i) s += (i ? ", " : "") + v[i];
    if (v.size() > 20) s += ", ...";
    return s;
  };
  if (!unknown.empty()) throw DataError("domain map names unknown features: " + join(unknown));
  if (!duplicate.empty()) throw DataError("features mapped more than once: " + join(duplicate));

  MetafeatureSpace space;
  space.kind = MetafeatureKind::DomainMF;
  space.normalization = norm;
  space.names = groups;
  const auto unmapped = static_cast<std::size_t>(std::count(member_of.begin(), member_of.end(), kUnassigned));
  if (unmapped > 0) {
    space.names.push_back(kOtherGroup);
    space.warnings.push_back(std::to_string(unmapped) + " features not in the domain map were put in '" +
                             kOtherGroup + "'");
  }
  space.assignment.k = space.names.size();
  space.assignment.assignment.resize(feature_names.size());
  space.descriptors.resize(space.names.size());
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    const auto g = member_of[f] == kUnassigned ? groups.size() : member_of[f];
    space.assignment.assignment[f] = static_cast<Index>(g);
    space.descriptors[g].features.push_back(static_cast<Index>(f));
    space.descriptors[g].weights.push_back(1.0);
  }
  return space;
}

double descriptor_jaccard(const Descriptor& a, const Descriptor& b) {
  std::vector<Index> sa(a.features), sb(b.features);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<Index> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  const auto uni = sa.size() + sb.size() - common.size();
  if (uni == 0) return 1.0;
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

bool match_metafeatures(const Descriptor& a, const Descriptor& b, double c) {
  if (a.empty() || b.empty()) throw DomainError("cannot match an empty descriptor");
  return descriptor_jaccard(a, b) >= c;
}

void write_space(std::ostream& out, const MetafeatureSpace& space) {
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "metarule-metafeatures 1\n";
  out << "kind " << (space.kind == MetafeatureKind::DDMF ? "DDMF" : "DomainMF") << '\n';
  out << "method " << to_string(space.method) << '\n';
  out << "seed " << space.seed << '\n';
  out << "normalization " << to_string(space.normalization) << '\n';
  out << "k " << space.k() << '\n';
  out << "m " << space.features() << '\n';
  out << "assignment";
  for (auto a : space.assignment.assignment) out << ' ' << a;
  out << '\n';
  for (std::size_t j = 0; j < space.k(); ++j) {
    const auto& d = space.descriptors[j];
    out << "metafeature " << j << ' ' << d.features.size() << ' ' << d.negative_dominant << ' ' << space.names[j]
        << '\n';
    for (std::size_t p = 0; p < d.features.size(); ++p) out << (p ? " " : "") << d.features[p] << ':' << d.weights[p];
    out << '\n';
  }
  out.precision(prec);
}

MetafeatureSpace read_space(std::istream& in) {
  std::string line, tag;
  auto next_line = [&](const char* key) {
    if (!std::getline(in, line)) throw DataError(std::string("metafeature record truncated before '") + key + "'");
    std::istringstream ls(line);
    ls >> tag;
    if (tag != key) throw DataError(std::string("metafeature record: expected '") + key + "'");
    std::string rest;
    std::getline(ls >> std::ws, rest);
    return rest;
  };
  if (!std::getline(in, line) || line != "metarule-metafeatures 1") throw DataError("not a metarule-metafeatures v1 record");
  MetafeatureSpace s;
  const auto kind = next_line("kind");
  if (kind == "DDMF") s.kind = MetafeatureKind::DDMF;
  else if (kind == "DomainMF") s.kind = MetafeatureKind::DomainMF;
  else throw DataError("unknown metafeature kind '" + kind + "'");
  s.method = factor_method_from_string(next_line("method"));
  s.seed = std::stoull(next_line("seed"));
  s.normalization = normalization_from_string(next_line("normalization"));
  s.assignment.k = std::stoull(next_line("k"));
  const std::size_t m = std::stoull(next_line("m"));
  {
    std::istringstream ls(next_line("assignment"));
    s.assignment.assignment.resize(m);
    for (auto& a : s.assignment.assignment)
      if (!(ls >> a) || a >= s.assignment.k) throw DataError("bad assignment entry");
  }
  s.descriptors.resize(s.assignment.k);
  for (std::size_t j = 0; j < s.assignment.k; ++j) {
    std::istringstream head(next_line("metafeature"));
    std::size_t idx = 0, count = 0;
    auto& d = s.descriptors[j];
    head >> idx >> count >> d.negative_dominant;
    std::string name;
    std::getline(head >> std::ws, name);
    if (!head.eof() && head.fail()) throw DataError("bad metafeature header");
    s.names.push_back(name);
    if (!std::getline(in, line)) throw DataError("metafeature record truncated");
    std::istringstream body(line);
    std::string tok;
    while (body >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw DataError("bad descriptor entry '" + tok + "'");
      d.features.push_back(static_cast<Index>(std::stoul(tok.substr(0, colon))));
      d.weights.push_back(std::stod(tok.substr(colon + 1)));
    }
    if (d.features.size() != count) throw DataError("descriptor length mismatch");
  }
  return s;
}

}  // namespace metarule
