#include "metarule/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "metarule/error.hpp"

namespace metarule {

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols,
                           std::vector<std::size_t> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (n_cols > std::numeric_limits<Index>::max())
    throw DomainError("column count exceeds index range");
  if (row_offsets_.size() != n_rows_ + 1) throw DomainError("row_offsets must have n_rows+1 entries");
  if (row_offsets_.front() != 0) throw DomainError("row_offsets[0] must be 0");
  if (row_offsets_.back() != values_.size() || col_indices_.size() != values_.size())
    throw DomainError("row_offsets[n_rows] must equal the number of stored values");
  for (std::size_t i = 0; i < n_rows_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1]) throw DomainError("row_offsets must be non-decreasing");
    for (auto p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (col_indices_[p] >= n_cols_) throw DomainError("column index out of range");
      if (p > row_offsets_[i] && col_indices_[p] <= col_indices_[p - 1])
        throw DomainError("column indices must be strictly increasing within a row");
      if (!std::isfinite(values_[p]) || values_[p] == 0.0)
        throw DomainError("stored values must be finite and nonzero");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(n_rows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  std::size_t t = 0;
  for (std::size_t i = 0; i < n_rows; ++i) {
    while (t < triplets.size() && triplets[t].row == i) {
      const auto c = triplets[t].col;
      if (c >= n_cols) throw DomainError("triplet column out of range");
      double v = 0.0;
      while (t < triplets.size() && triplets[t].row == i && triplets[t].col == c) v += triplets[t++].value;
      if (v != 0.0) {
        cols.push_back(static_cast<Index>(c));
        vals.push_back(v);
      }
    }
    offsets[i + 1] = vals.size();
  }
  if (t != triplets.size()) throw DomainError("triplet row out of range");
  return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::from_dense(std::size_t n_rows, std::size_t n_cols,
                                      std::span<const double> row_major) {
  if (row_major.size() != n_rows * n_cols) throw DomainError("dense buffer size mismatch");
  std::vector<std::size_t> offsets(n_rows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      const double v = row_major[i * n_cols + j];
      if (v != 0.0) {
        cols.push_back(static_cast<Index>(j));
        vals.push_back(v);
      }
    }
    offsets[i + 1] = vals.size();
  }
  return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const noexcept {
  const auto r = row(i);
  const auto it = std::lower_bound(r.cols.begin(), r.cols.end(), static_cast<Index>(j));
  if (it == r.cols.end() || *it != j) return 0.0;
  return r.values[static_cast<std::size_t>(it - r.cols.begin())];
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> offsets(n_cols_ + 1, 0);
  for (auto c : col_indices_) ++offsets[c + 1];
  for (std::size_t j = 0; j < n_cols_; ++j) offsets[j + 1] += offsets[j];
  std::vector<Index> cols(values_.size());
  std::vector<double> vals(values_.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (auto p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      const auto dst = cursor[col_indices_[p]]++;
      cols[dst] = static_cast<Index>(i);
      vals[dst] = values_[p];
    }
  }
  return SparseMatrix(n_cols_, n_rows_, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::size_t> offsets(rows.size() + 1, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n_rows_) throw DomainError("row index out of range");
    offsets[r + 1] = offsets[r] + (row_offsets_[rows[r] + 1] - row_offsets_[rows[r]]);
  }
  std::vector<Index> cols(offsets.back());
  std::vector<double> vals(offsets.back());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto b = row_offsets_[rows[r]];
    const auto e = row_offsets_[rows[r] + 1];
    std::copy(col_indices_.begin() + b, col_indices_.begin() + e, cols.begin() + offsets[r]);
    std::copy(values_.begin() + b, values_.begin() + e, vals.begin() + offsets[r]);
  }
  return SparseMatrix(rows.size(), n_cols_, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::sparsity() const noexcept {
  const double cells = static_cast<double>(n_rows_) * static_cast<double>(n_cols_);
  if (cells == 0.0) return 1.0;
  return 1.0 - static_cast<double>(nnz()) / cells;
}

double SparseMatrix::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> out(n_rows_ * n_cols_, 0.0);
  for (std::size_t i = 0; i < n_rows_; ++i)
    for (auto p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) out[i * n_cols_ + col_indices_[p]] = values_[p];
  return out;
}

void Dataset::validate() const {
  if (y.size() != X.rows()) throw DataError("label count does not match row count");
  if (feature_names.size() != X.cols()) throw DataError("feature name count does not match column count");
  if (!instance_ids.empty() && instance_ids.size() != X.rows())
    throw DataError("instance id count does not match row count");
  for (auto l : y)
    if (l > 1) throw DataError("labels must be 0 or 1");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.X = X.select_rows(rows);
  out.y.reserve(rows.size());
  for (auto r : rows) out.y.push_back(y[r]);
  out.feature_names = feature_names;
  if (!instance_ids.empty()) {
    out.instance_ids.reserve(rows.size());
    for (auto r : rows) out.instance_ids.push_back(instance_ids[r]);
  }
  return out;
}

double Dataset::positive_rate() const noexcept {
  if (y.empty()) return 0.0;
  std::size_t pos = 0;
  for (auto l : y) pos += l;
  return static_cast<double>(pos) / static_cast<double>(y.size());
}

std::vector<std::string> default_feature_names(std::size_t n_cols) {
  std::vector<std::string> names(n_cols);
  for (std::size_t j = 0; j < n_cols; ++j) names[j] = "f" + std::to_string(j + 1);
  return names;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view tok, std::size_t line, const char* what) {
  // from_chars<double> is available in libstdc++ 11
  double v = 0.0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw ParseError(std::string("bad ") + what, line);
  if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + what, line);
  return v;
}

}  // namespace

Dataset read_libsvm(std::istream& in, const LibsvmOptions& opts) {
  std::vector<Triplet> triplets;
  std::vector<double> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_col = 0;
  std::vector<std::pair<std::size_t, double>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = std::string_view(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;

    std::istringstream tokens{std::string(body)};
    std::string tok;
    tokens >> tok;
    raw_labels.push_back(parse_double(tok, line_no, "label"));
    entries.clear();
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected <col>:<value>, got '" + tok + "'", line_no);
      const auto col_tok = std::string_view(tok).substr(0, colon);
      std::size_t col = 0;
      const auto [ptr, ec] = std::from_chars(col_tok.data(), col_tok.data() + col_tok.size(), col);
      if (ec != std::errc() || ptr != col_tok.data() + col_tok.size() || col == 0)
        throw ParseError("bad column index '" + std::string(col_tok) + "' (1-based)", line_no);
      const double v = parse_double(std::string_view(tok).substr(colon + 1), line_no, "value");
      entries.emplace_back(col - 1, v);
    }
    std::sort(entries.begin(), entries.end());
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (e > 0 && entries[e].first == entries[e - 1].first)
        throw ParseError("duplicate column " + std::to_string(entries[e].first + 1), line_no);
      max_col = std::max(max_col, entries[e].first + 1);
      if (entries[e].second != 0.0) triplets.push_back({raw_labels.size() - 1, entries[e].first, entries[e].second});
    }
  }
  if (raw_labels.empty()) throw DataError("no instances");

  // {0,1} kept, {-1,+1} mapped; anything else is not a binary task.
  bool has_minus = false, has_zero = false;
  for (double l : raw_labels) {
    if (l == -1.0) has_minus = true;
    else if (l == 0.0) has_zero = true;
    else if (l != 1.0) throw DomainError("non-binary label " + std::to_string(l));
  }
  if (has_minus && has_zero) throw DomainError("labels mix -1 and 0");

  std::size_t n_cols = max_col;
  if (opts.n_cols) {
    if (*opts.n_cols < max_col) throw DataError("column override smaller than largest index in file");
    n_cols = *opts.n_cols;
  }

  Dataset d;
  const auto n = raw_labels.size();
  d.X = SparseMatrix::from_triplets(n, n_cols, std::move(triplets));
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.y[i] = raw_labels[i] == 1.0 ? 1 : 0;
  d.instance_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.instance_ids[i] = std::to_string(i);
  d.feature_names = default_feature_names(n_cols);
  return d;
}

std::vector<std::string> load_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  Dataset d = read_libsvm(in, opts);

  std::string names_path = opts.feature_names_path;
  if (names_path.empty() && std::filesystem::exists(path + ".names")) names_path = path + ".names";
  if (!names_path.empty()) {
    auto names = load_lines(names_path);
    if (names.size() != d.X.cols())
      throw DataError("feature names file has " + std::to_string(names.size()) + " lines, expected " +
                      std::to_string(d.X.cols()));
    d.feature_names = std::move(names);
  }
  return d;
}

void write_libsvm(std::ostream& out, const Dataset& d) {
  d.validate();
  out << std::setprecision(17);
  for (std::size_t i = 0; i < d.X.rows(); ++i) {
    out << static_cast<int>(d.y[i]);
    const auto r = d.X.row(i);
    for (std::size_t p = 0; p < r.size(); ++p) out << ' ' << (r.cols[p] + 1) << ':' << r.values[p];
    out << '\n';
  }
}

void save_libsvm(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_libsvm(out, d);
}

DatasetManifest read_manifest(std::istream& in) {
  DatasetManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto sep = body.find_first_of(":=");
    if (sep == std::string_view::npos) throw ParseError("expected key: value", line_no);
    const auto key = std::string(trim(body.substr(0, sep)));
    const auto value = std::string(trim(body.substr(sep + 1)));
    if (key == "name") {
      m.name = value;
    } else if (key == "n" || key == "m") {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) throw ParseError("bad count for " + key, line_no);
      (key == "n" ? m.n : m.m) = v;
    } else if (key == "label") {
      m.label_meaning = value;
    } else {
      m.extra[key] = value;
    }
  }
  return m;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_manifest(in);
}

void write_manifest(std::ostream& out, const DatasetManifest& m) {
  out << "name: " << m.name << '\n';
  if (m.n) out << "n: " << *m.n << '\n';
  if (m.m) out << "m: " << *m.m << '\n';
  if (!m.label_meaning.empty()) out << "label: " << m.label_meaning << '\n';
  for (const auto& [k, v] : m.extra) out << k << ": " << v << '\n';
}

SparseMatrix tfidf_transform(const SparseMatrix& counts) {
  for (double v : counts.values())
    if (v < 0.0) throw DomainError("tf-idf needs nonnegative counts");

  const auto n = counts.rows();
  std::vector<std::size_t> df(counts.cols(), 0);
  for (auto c : counts.col_indices()) ++df[c];
  std::vector<double> idf(counts.cols());
  for (std::size_t t = 0; t < idf.size(); ++t)
    idf[t] = std::log((1.0 + static_cast<double>(n)) / (1.0 + static_cast<double>(df[t]))) + 1.0;

  std::vector<double> vals(counts.values().begin(), counts.values().end());
  const auto offsets = counts.row_offsets();
  const auto cols = counts.col_indices();
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p) {
      vals[p] *= idf[cols[p]];
      sq += vals[p] * vals[p];
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (auto p = offsets[i]; p < offsets[i + 1]; ++p) vals[p] *= inv;
    }
  }
  return SparseMatrix(n, counts.cols(), {offsets.begin(), offsets.end()}, {cols.begin(), cols.end()},
                      std::move(vals));
}

std::vector<std::size_t> row_active_counts(const SparseMatrix& X) {
  std::vector<std::size_t> out(X.rows());
  const auto off = X.row_offsets();
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = off[i + 1] - off[i];
  return out;
}

}  // namespace metarule
