#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "esnmf/error.hpp"
#include "esnmf/sparse_matrix.hpp"

namespace esnmf {

/// Default ridge scale for Gram solves: eps = scale * (trace(G)/k + 1).
inline constexpr double kDefaultRidgeScale = 1e-10;

/// Small dense row-major matrix. Holds k x k Gram systems and their
/// inverses, and the k1 x k2 cross products of the sequential solver.
class SmallDense {
 public:
  SmallDense() = default;
  SmallDense(Index rows, Index cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  explicit SmallDense(Index dim) : SmallDense(dim, dim) {}

  SmallDense(Index rows, Index cols, std::vector<double> row_major)
      : rows_(rows), cols_(cols), values_(std::move(row_major)) {
    if (values_.size() != rows_ * cols_) {
      throw DimensionError("dense data has " + std::to_string(values_.size()) +
                           " values, expected " + shape_string(rows_, cols_));
    }
  }

  static SmallDense identity(Index dim) {
    SmallDense m(dim);
    for (Index i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  /// Side length; only meaningful when square.
  Index dim() const noexcept { return rows_; }

  double& operator()(Index i, Index j) noexcept { return values_[i * cols_ + j]; }
  double operator()(Index i, Index j) const noexcept { return values_[i * cols_ + j]; }

  const std::vector<double>& values() const noexcept { return values_; }

  double trace() const noexcept {
    double t = 0.0;
    for (Index i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  bool is_finite() const noexcept {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const SmallDense&, const SmallDense&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> values_;
};

inline SmallDense multiply(const SmallDense& a, const SmallDense& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("dense multiply: " + shape_string(a.rows(), a.cols()) + " times " +
                         shape_string(b.rows(), b.cols()));
  }
  SmallDense c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index l = 0; l < a.cols(); ++l) {
      const double s = a(i, l);
      for (Index j = 0; j < b.cols(); ++j) c(i, j) += s * b(l, j);
    }
  }
  return c;
}

/// Inverse of (G + eps*I) with eps = ridge_scale * (trace(G)/k + 1).
///
/// Gauss-Jordan elimination with partial pivoting followed by one step of
/// iterative refinement on the left residual X (G + eps I) - I. Throws
/// DegenerateFactorError when a pivot falls below k * machine epsilon
/// relative to the largest entry.
inline SmallDense solve_gram(const SmallDense& gram, double ridge_scale = kDefaultRidgeScale) {
  if (!gram.is_square()) {
    throw DimensionError("solve_gram: matrix is " + shape_string(gram.rows(), gram.cols()));
  }
  if (!(ridge_scale >= 0.0) || !std::isfinite(ridge_scale)) {
    throw std::invalid_argument("solve_gram: ridge scale must be finite and >= 0");
  }
  if (!gram.is_finite()) throw DegenerateFactorError("solve_gram: Gram matrix has non-finite entries");
  const Index k = gram.dim();
  if (k == 0) return SmallDense(0);

  SmallDense a = gram;
  const double eps = ridge_scale * (gram.trace() / static_cast<double>(k) + 1.0);
  for (Index i = 0; i < k; ++i) a(i, i) += eps;

  double scale = 0.0;
  for (double v : a.values()) scale = std::max(scale, std::abs(v));
  const double tiny = static_cast<double>(k) * std::numeric_limits<double>::epsilon() * scale;

  SmallDense work = a;
  SmallDense inv = SmallDense::identity(k);
  for (Index col = 0; col < k; ++col) {
    Index pivot = col;
    for (Index r = col + 1; r < k; ++r) {
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    }
    if (scale == 0.0 || !(std::abs(work(pivot, col)) > tiny)) {
      throw DegenerateFactorError("solve_gram: Gram matrix is numerically singular (column " +
                                  std::to_string(col) + ")");
    }
    if (pivot != col) {
      for (Index j = 0; j < k; ++j) {
        std::swap(work(pivot, j), work(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    }
    const double d = work(col, col);
    for (Index j = 0; j < k; ++j) {
      work(col, j) /= d;
      inv(col, j) /= d;
    }
    for (Index r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      if (f == 0.0) continue;
      for (Index j = 0; j < k; ++j) {
        work(r, j) -= f * work(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }

  // X <- X + (I - X A) X; the left residual is what V = B X relies on.
  SmallDense resid = multiply(inv, a);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) resid(i, j) = (i == j ? 1.0 : 0.0) - resid(i, j);
  }
  const SmallDense corr = multiply(resid, inv);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) inv(i, j) += corr(i, j);
  }
  if (!inv.is_finite()) throw DegenerateFactorError("solve_gram: inverse is not finite");
  return inv;
}

}  // namespace esnmf
