#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "esnmf/error.hpp"

// =============================================================================
// Compressed sparse column storage.
//
// INVARIANT (canonical form):
// - row indices inside each column are strictly ascending, so entries are
//   ordered by (column, row) and duplicate free;
// - no stored value is zero, NaN or infinite;
// - every index is in range.
// Every constructor and every kernel in sparse_ops.hpp preserves it.
// =============================================================================

namespace esnmf {

using Index = std::size_t;

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

inline std::string shape_string(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

/// Read-only view of one stored column.
struct ColumnView {
  std::span<const Index> rows;
  std::span<const double> values;

  Index size() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }
};

class SparseMatrix {
 public:
  /// Appends entries column by column. Rows pushed into a column must be
  /// strictly ascending; zero values are skipped.
  class Builder {
   public:
    Builder(Index rows, Index cols, Index reserve = 0) : rows_(rows), cols_(cols) {
      col_ptr_.reserve(cols + 1);
      col_ptr_.push_back(0);
      row_idx_.reserve(reserve);
      values_.reserve(reserve);
    }

    void push(Index row, double value) {
      assert(row < rows_);
      assert(std::isfinite(value));
      assert(row_idx_.size() == col_ptr_.back() || row_idx_.back() < row);
      if (value == 0.0) return;
      row_idx_.push_back(row);
      values_.push_back(value);
    }

    void end_column() { col_ptr_.push_back(row_idx_.size()); }

    Index current_column() const noexcept { return col_ptr_.size() - 1; }

    SparseMatrix finish() && {
      assert(col_ptr_.size() == cols_ + 1);
      SparseMatrix m;
      m.rows_ = rows_;
      m.cols_ = cols_;
      m.col_ptr_ = std::move(col_ptr_);
      m.row_idx_ = std::move(row_idx_);
      m.values_ = std::move(values_);
      assert(m.is_canonical());
      return m;
    }

   private:
    Index rows_;
    Index cols_;
    std::vector<Index> col_ptr_;
    std::vector<Index> row_idx_;
    std::vector<double> values_;
  };

  SparseMatrix() : col_ptr_(1, 0) {}

  /// Empty (all-zero) rows x cols matrix.
  SparseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), col_ptr_(cols + 1, 0) {}

  /// Duplicates are summed, zeros (including sums that cancel) dropped.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= rows || t.col >= cols) {
        throw std::out_of_range("entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                ") outside " + shape_string(rows, cols) + " matrix");
      }
      if (!std::isfinite(t.value)) {
        throw std::invalid_argument("non-finite value at (" + std::to_string(t.row) + ", " +
                                    std::to_string(t.col) + ")");
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    Builder b(rows, cols, entries.size());
    std::size_t i = 0;
    for (Index j = 0; j < cols; ++j) {
      while (i < entries.size() && entries[i].col == j) {
        const Index r = entries[i].row;
        double sum = 0.0;
        for (; i < entries.size() && entries[i].col == j && entries[i].row == r; ++i) {
          sum += entries[i].value;
        }
        b.push(r, sum);
      }
      b.end_column();
    }
    return std::move(b).finish();
  }

  /// Builds from a dense row-major array; zeros are not stored.
  static SparseMatrix from_dense(Index rows, Index cols, std::span<const double> row_major) {
    if (row_major.size() != rows * cols) {
      throw DimensionError("dense data has " + std::to_string(row_major.size()) +
                           " values, expected " + shape_string(rows, cols));
    }
    Builder b(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) {
        const double v = row_major[i * cols + j];
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite dense value");
        b.push(i, v);
      }
      b.end_column();
    }
    return std::move(b).finish();
  }

  static SparseMatrix identity(Index n) {
    Builder b(n, n, n);
    for (Index j = 0; j < n; ++j) {
      b.push(j, 1.0);
      b.end_column();
    }
    return std::move(b).finish();
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return row_idx_.size(); }
  bool empty() const noexcept { return row_idx_.empty(); }

  std::span<const Index> col_ptr() const noexcept { return col_ptr_; }
  std::span<const Index> row_indices() const noexcept { return row_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  ColumnView column(Index j) const noexcept {
    assert(j < cols_);
    const Index b = col_ptr_[j];
    const Index e = col_ptr_[j + 1];
    return {std::span<const Index>(row_idx_).subspan(b, e - b),
            std::span<const double>(values_).subspan(b, e - b)};
  }

  Index column_nnz(Index j) const noexcept { return col_ptr_[j + 1] - col_ptr_[j]; }

  /// Stored value or 0.
  double at(Index row, Index col) const {
    if (row >= rows_ || col >= cols_) {
      throw std::out_of_range("index outside " + shape_string(rows_, cols_) + " matrix");
    }
    const auto c = column(col);
    const auto it = std::lower_bound(c.rows.begin(), c.rows.end(), row);
    if (it == c.rows.end() || *it != row) return 0.0;
    return c.values[static_cast<std::size_t>(it - c.rows.begin())];
  }

  /// Entries in canonical order.
  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (Index j = 0; j < cols_; ++j) {
      for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) out.push_back({row_idx_[p], j, values_[p]});
    }
    return out;
  }

  /// Row-major dense copy. Intended for small matrices and tests.
  std::vector<double> to_dense() const {
    std::vector<double> out(rows_ * cols_, 0.0);
    for (Index j = 0; j < cols_; ++j) {
      for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) out[row_idx_[p] * cols_ + j] = values_[p];
    }
    return out;
  }

  std::vector<Index> row_nnz() const {
    std::vector<Index> counts(rows_, 0);
    for (Index r : row_idx_) ++counts[r];
    return counts;
  }

  std::vector<Index> column_nnz_list() const {
    std::vector<Index> counts(cols_, 0);
    for (Index j = 0; j < cols_; ++j) counts[j] = column_nnz(j);
    return counts;
  }

  bool is_canonical() const noexcept {
    if (col_ptr_.size() != cols_ + 1 || col_ptr_.front() != 0) return false;
    if (col_ptr_.back() != row_idx_.size() || row_idx_.size() != values_.size()) return false;
    for (Index j = 0; j < cols_; ++j) {
      if (col_ptr_[j] > col_ptr_[j + 1]) return false;
      for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
        if (row_idx_[p] >= rows_) return false;
        if (p > col_ptr_[j] && row_idx_[p - 1] >= row_idx_[p]) return false;
        if (values_[p] == 0.0 || !std::isfinite(values_[p])) return false;
      }
    }
    return true;
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> col_ptr_;
  std::vector<Index> row_idx_;
  std::vector<double> values_;
};

}  // namespace esnmf
