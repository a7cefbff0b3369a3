#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metarule {

using Index = std::uint32_t;
using Label = std::uint8_t;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed sparse-row matrix. Immutable once built; every constructor
// validates the CSR invariants (monotone offsets, strictly increasing
// in-row columns below n_cols, finite nonzero values).
class SparseMatrix {
 public:
  struct RowView {
    std::span<const Index> cols;
    std::span<const double> values;
    std::size_t size() const noexcept { return cols.size(); }
  };

  SparseMatrix() : row_offsets_(1, 0) {}
  SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  // Duplicate (row, col) pairs are summed; entries that end up zero are dropped.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> triplets);
  // Row-major dense input; zeros are not stored.
  static SparseMatrix from_dense(std::size_t n_rows, std::size_t n_cols,
                                 std::span<const double> row_major);

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  RowView row(std::size_t i) const noexcept {
    const auto b = row_offsets_[i];
    const auto e = row_offsets_[i + 1];
    return {std::span<const Index>(col_indices_).subspan(b, e - b),
            std::span<const double>(values_).subspan(b, e - b)};
  }

  // Value lookup by binary search within the row; 0 when not stored.
  double at(std::size_t i, std::size_t j) const noexcept;

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  SparseMatrix transpose() const;

  // Rows in the given order; repeated indices are allowed (bootstrap samples).
  SparseMatrix select_rows(std::span<const std::size_t> rows) const;

  // Fraction of zero cells, 1 - nnz / (n*m).
  double sparsity() const noexcept;

  double squared_norm() const noexcept;

  std::vector<double> to_dense() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

struct Dataset {
  SparseMatrix X;
  std::vector<Label> y;
  std::vector<std::string> feature_names;
  std::vector<std::string> instance_ids;

  std::size_t size() const noexcept { return X.rows(); }
  std::size_t dimension() const noexcept { return X.cols(); }

  // Throws DataError when lengths disagree or a label is not 0/1.
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;

  // Fraction of positive labels (b in the usual dataset tables).
  double positive_rate() const noexcept;
};

// Names used when a dataset carries no sidecar names: "f1", "f2", ...
std::vector<std::string> default_feature_names(std::size_t n_cols);

struct LibsvmOptions {
  // Overrides the column count inferred from the largest index seen.
  std::optional<std::size_t> n_cols;
  // One name per line; if empty, "<path>.names" is used when it exists.
  std::string feature_names_path;
};

// libsvm text: `<label> <col>:<value> ...`, 1-based columns on disk, 0-based
// in memory. Labels 0/1 or -1/+1 (mapped to 0/1).
Dataset read_libsvm(std::istream& in, const LibsvmOptions& opts = {});
Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts = {});

void write_libsvm(std::ostream& out, const Dataset& d);
void save_libsvm(const std::string& path, const Dataset& d);

std::vector<std::string> load_lines(const std::string& path);

// Key/value header for reports ("name: movielens100", "label: gender", ...).
struct DatasetManifest {
  std::string name;
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::string label_meaning;
  std::map<std::string, std::string> extra;
};

DatasetManifest read_manifest(std::istream& in);
DatasetManifest load_manifest(const std::string& path);
void write_manifest(std::ostream& out, const DatasetManifest& m);

// Raw-count tf times smooth idf ln((1+n)/(1+df)) + 1, rows scaled to unit L2
// norm. Sparsity pattern is preserved; empty rows stay empty.
SparseMatrix tfidf_transform(const SparseMatrix& counts);

// Stored entries per row (number of active fine-grained features).
std::vector<std::size_t> row_active_counts(const SparseMatrix& X);

}  // namespace metarule
