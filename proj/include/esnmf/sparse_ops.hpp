#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "esnmf/error.hpp"
#include "esnmf/small_dense.hpp"
#include "esnmf/sparse_matrix.hpp"

// Kernels used by the ALS solvers. All are pure; outputs are canonical.

namespace esnmf {

namespace detail {

/// Dense accumulator for one output column with a touched-row list.
class ColumnAccumulator {
 public:
  explicit ColumnAccumulator(Index rows) : acc_(rows, 0.0), mark_(rows, kUnset) {}

  void add(Index row, double v, Index tag) {
    if (mark_[row] != tag) {
      mark_[row] = tag;
      acc_[row] = v;
      touched_.push_back(row);
    } else {
      acc_[row] += v;
    }
  }

  /// Emits the column into the builder in ascending row order and resets.
  void flush(SparseMatrix::Builder& b) {
    std::sort(touched_.begin(), touched_.end());
    for (Index r : touched_) b.push(r, acc_[r]);
    touched_.clear();
    b.end_column();
  }

 private:
  static constexpr Index kUnset = std::numeric_limits<Index>::max();
  std::vector<double> acc_;
  std::vector<Index> mark_;
  std::vector<Index> touched_;
};

/// Strict total order: larger magnitude first, then earlier storage position.
struct MagnitudeOrder {
  std::span<const double> values;
  bool operator()(Index a, Index b) const noexcept {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    return ma != mb ? ma > mb : a < b;
  }
};

/// Marks the `t` winners of `positions` under MagnitudeOrder.
inline void mark_top(std::vector<Index>& positions, Index t, std::span<const double> values,
                     std::vector<char>& keep) {
  if (t >= positions.size()) {
    for (Index p : positions) keep[p] = 1;
    return;
  }
  if (t == 0) return;
  std::nth_element(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(t - 1),
                   positions.end(), MagnitudeOrder{values});
  for (Index i = 0; i < t; ++i) keep[positions[i]] = 1;
}

template <class Pred>
SparseMatrix filter_entries(const SparseMatrix& m, Pred&& keep) {
  SparseMatrix::Builder b(m.rows(), m.cols(), m.nnz());
  const auto rows = m.row_indices();
  const auto vals = m.values();
  const auto ptr = m.col_ptr();
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index p = ptr[j]; p < ptr[j + 1]; ++p) {
      if (keep(p, vals[p])) b.push(rows[p], vals[p]);
    }
    b.end_column();
  }
  return std::move(b).finish();
}

}  // namespace detail

/// Exact sparse product a * b (column-by-column Gustavson). Entries that
/// cancel to exactly zero are not stored.
inline SparseMatrix matmul(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: left operand is " + shape_string(a.rows(), a.cols()) +
                         ", right operand is " + shape_string(b.rows(), b.cols()));
  }
  SparseMatrix::Builder out(a.rows(), b.cols());
  detail::ColumnAccumulator acc(a.rows());
  for (Index j = 0; j < b.cols(); ++j) {
    const auto bc = b.column(j);
    for (Index q = 0; q < bc.size(); ++q) {
      const auto ac = a.column(bc.rows[q]);
      const double bv = bc.values[q];
      for (Index p = 0; p < ac.size(); ++p) acc.add(ac.rows[p], ac.values[p] * bv, j);
    }
    acc.flush(out);
  }
  return std::move(out).finish();
}

inline SparseMatrix transpose(const SparseMatrix& m) {
  std::vector<Index> counts(m.rows() + 1, 0);
  for (Index r : m.row_indices()) ++counts[r + 1];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<Index> rows(m.nnz());
  std::vector<double> vals(m.nnz());
  std::vector<Index> next(counts.begin(), counts.end() - 1);
  for (Index j = 0; j < m.cols(); ++j) {
    const auto c = m.column(j);
    for (Index p = 0; p < c.size(); ++p) {
      const Index dst = next[c.rows[p]]++;
      rows[dst] = j;
      vals[dst] = c.values[p];
    }
  }
  SparseMatrix::Builder b(m.cols(), m.rows(), m.nnz());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index p = counts[i]; p < counts[i + 1]; ++p) b.push(rows[p], vals[p]);
    b.end_column();
  }
  return std::move(b).finish();
}

/// left^T * right as a small dense matrix (left.cols x right.cols).
inline SmallDense cross_gram(const SparseMatrix& left, const SparseMatrix& right) {
  if (left.rows() != right.rows()) {
    throw DimensionError("cross_gram: " + shape_string(left.rows(), left.cols()) + " and " +
                         shape_string(right.rows(), right.cols()) + " differ in rows");
  }
  SmallDense g(left.cols(), right.cols());
  std::vector<double> dense(right.rows(), 0.0);
  for (Index j = 0; j < right.cols(); ++j) {
    const auto rc = right.column(j);
    for (Index p = 0; p < rc.size(); ++p) dense[rc.rows[p]] = rc.values[p];
    for (Index i = 0; i < left.cols(); ++i) {
      const auto lc = left.column(i);
      double s = 0.0;
      for (Index p = 0; p < lc.size(); ++p) s += lc.values[p] * dense[lc.rows[p]];
      g(i, j) = s;
    }
    for (Index p = 0; p < rc.size(); ++p) dense[rc.rows[p]] = 0.0;
  }
  return g;
}

/// m^T m, computed on the upper triangle and mirrored so it is exactly symmetric.
inline SmallDense gram(const SparseMatrix& m) {
  const Index k = m.cols();
  SmallDense g(k);
  std::vector<double> dense(m.rows(), 0.0);
  for (Index j = 0; j < k; ++j) {
    const auto cj = m.column(j);
    for (Index p = 0; p < cj.size(); ++p) dense[cj.rows[p]] = cj.values[p];
    for (Index i = 0; i <= j; ++i) {
      const auto ci = m.column(i);
      double s = 0.0;
      for (Index p = 0; p < ci.size(); ++p) s += ci.values[p] * dense[ci.rows[p]];
      g(i, j) = s;
      g(j, i) = s;
    }
    for (Index p = 0; p < cj.size(); ++p) dense[cj.rows[p]] = 0.0;
  }
  return g;
}

/// Sparse (r x p) times small dense (p x q).
inline SparseMatrix apply_small(const SparseMatrix& m, const SmallDense& g) {
  if (m.cols() != g.rows()) {
    throw DimensionError("apply_small: sparse operand is " + shape_string(m.rows(), m.cols()) +
                         ", dense operand is " + shape_string(g.rows(), g.cols()));
  }
  SparseMatrix::Builder out(m.rows(), g.cols());
  detail::ColumnAccumulator acc(m.rows());
  for (Index j = 0; j < g.cols(); ++j) {
    for (Index l = 0; l < m.cols(); ++l) {
      const double s = g(l, j);
      if (s == 0.0) continue;
      const auto c = m.column(l);
      for (Index p = 0; p < c.size(); ++p) acc.add(c.rows[p], c.values[p] * s, j);
    }
    acc.flush(out);
  }
  return std::move(out).finish();
}

/// Removes every negative entry.
inline SparseMatrix project_nonnegative(const SparseMatrix& m) {
  return detail::filter_entries(m, [](Index, double v) { return !(v < 0.0); });
}

/// Keeps the min(t, nnz) largest-magnitude entries of the whole matrix.
/// Ties at the cut keep the entry that comes first in canonical order.
inline SparseMatrix keep_top_t(const SparseMatrix& m, Index t) {
  if (t >= m.nnz()) return m;
  std::vector<Index> positions(m.nnz());
  std::iota(positions.begin(), positions.end(), Index{0});
  std::vector<char> keep(m.nnz(), 0);
  detail::mark_top(positions, t, m.values(), keep);
  return detail::filter_entries(m, [&](Index p, double) { return keep[p] != 0; });
}

/// Column-wise variant of keep_top_t: every column keeps at most t_col entries.
inline SparseMatrix keep_top_t_per_column(const SparseMatrix& m, Index t_col) {
  std::vector<char> keep(m.nnz(), 0);
  std::vector<Index> positions;
  const auto ptr = m.col_ptr();
  bool dropped = false;
  for (Index j = 0; j < m.cols(); ++j) {
    positions.resize(ptr[j + 1] - ptr[j]);
    std::iota(positions.begin(), positions.end(), ptr[j]);
    dropped = dropped || positions.size() > t_col;
    detail::mark_top(positions, t_col, m.values(), keep);
  }
  if (!dropped) return m;
  return detail::filter_entries(m, [&](Index p, double) { return keep[p] != 0; });
}

/// Sum of squared stored values.
inline double squared_norm(const SparseMatrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return s;
}

inline double frobenius_norm(const SparseMatrix& m) { return std::sqrt(squared_norm(m)); }

/// Entrywise a - b; exact zeros dropped.
inline SparseMatrix subtract(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("subtract: " + shape_string(a.rows(), a.cols()) + " minus " +
                         shape_string(b.rows(), b.cols()));
  }
  SparseMatrix::Builder out(a.rows(), a.cols(), a.nnz() + b.nnz());
  for (Index j = 0; j < a.cols(); ++j) {
    const auto ca = a.column(j);
    const auto cb = b.column(j);
    Index p = 0, q = 0;
    while (p < ca.size() || q < cb.size()) {
      if (q == cb.size() || (p < ca.size() && ca.rows[p] < cb.rows[q])) {
        out.push(ca.rows[p], ca.values[p]);
        ++p;
      } else if (p == ca.size() || cb.rows[q] < ca.rows[p]) {
        out.push(cb.rows[q], -cb.values[q]);
        ++q;
      } else {
        out.push(ca.rows[p], ca.values[p] - cb.values[q]);
        ++p;
        ++q;
      }
    }
    out.end_column();
  }
  return std::move(out).finish();
}

/// Sum over entries of a .* b (equals trace(a^T b)).
inline double inner_product(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("inner_product: " + shape_string(a.rows(), a.cols()) + " and " +
                         shape_string(b.rows(), b.cols()));
  }
  double s = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    const auto ca = a.column(j);
    const auto cb = b.column(j);
    Index p = 0, q = 0;
    while (p < ca.size() && q < cb.size()) {
      if (ca.rows[p] < cb.rows[q]) {
        ++p;
      } else if (cb.rows[q] < ca.rows[p]) {
        ++q;
      } else {
        s += ca.values[p++] * cb.values[q++];
      }
    }
  }
  return s;
}

/// [left right]: columns of `right` appended after those of `left`.
inline SparseMatrix hcat(const SparseMatrix& left, const SparseMatrix& right) {
  if (left.rows() != right.rows()) {
    throw DimensionError("hcat: " + shape_string(left.rows(), left.cols()) + " and " +
                         shape_string(right.rows(), right.cols()) + " differ in rows");
  }
  SparseMatrix::Builder out(left.rows(), left.cols() + right.cols(), left.nnz() + right.nnz());
  for (const SparseMatrix* part : {&left, &right}) {
    for (Index j = 0; j < part->cols(); ++j) {
      const auto c = part->column(j);
      for (Index p = 0; p < c.size(); ++p) out.push(c.rows[p], c.values[p]);
      out.end_column();
    }
  }
  return std::move(out).finish();
}

}  // namespace esnmf
