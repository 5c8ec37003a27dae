#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esnmf/error.hpp"
#include "esnmf/random.hpp"
#include "esnmf/small_dense.hpp"
#include "esnmf/sparse_matrix.hpp"
#include "esnmf/sparse_ops.hpp"

// =============================================================================
// Projected ALS, enforced-sparsity ALS and sequential (block-at-a-time) ALS
// for A ~ U V^T with U (n x k) and V (m x k) nonnegative and sparse.
//
// One iteration, for the block (U2, V2) being solved while (U1, V1) stay fixed:
//   V2 <- (A^T U2 - V1 U1^T U2)(U2^T U2 + eps I)^{-1}, drop negatives, truncate
//   U2 <- (A V2 - U1 V1^T V2)(V2^T V2 + eps I)^{-1},   drop negatives, truncate
//   reseed any column of U2 that became empty
// Plain and enforced ALS are the case where U1 and V1 have no columns.
// =============================================================================

namespace esnmf {

enum class Enforcement { global, per_column };

inline std::string to_string(Enforcement mode) {
  return mode == Enforcement::global ? "global" : "per_column";
}

struct NmfConfig {
  Index k = 5;
  Index max_iters = 100;
  /// Stop once the residual drops below this.
  double residual_tol = 1e-10;
  /// Stored-entry budgets; absent means no truncation. In per-column mode
  /// they are budgets for every column.
  std::optional<Index> t_u;
  std::optional<Index> t_v;
  Enforcement mode = Enforcement::global;
  double ridge_scale = kDefaultRidgeScale;
  std::uint64_t seed = 0;
  /// Entries in the initial guess; absent means fully dense.
  std::optional<Index> init_nnz;

  /// Throws std::invalid_argument for out-of-range values given an n-row data matrix.
  void validate(Index n) const {
    if (k < 1) throw std::invalid_argument("rank k must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(residual_tol >= 0.0) || !std::isfinite(residual_tol)) {
      throw std::invalid_argument("residual tolerance must be finite and >= 0");
    }
    if (!(ridge_scale >= 0.0) || !std::isfinite(ridge_scale)) {
      throw std::invalid_argument("ridge scale must be finite and >= 0");
    }
    const Index min_budget = mode == Enforcement::global ? k : 1;
    for (const auto& [name, t] : {std::pair{"t_u", t_u}, std::pair{"t_v", t_v}}) {
      if (t && *t < min_budget) {
        throw std::invalid_argument(std::string(name) + " = " + std::to_string(*t) + " is below the minimum " +
                                    std::to_string(min_budget) + " for " + to_string(mode) + " enforcement");
      }
    }
    if (init_nnz && (*init_nnz < k || *init_nnz > n * k)) {
      throw std::invalid_argument("init_nnz must lie in [k, n*k] = [" + std::to_string(k) + ", " +
                                  std::to_string(n * k) + "]");
    }
  }
};

struct NmfModel {
  SparseMatrix u;  // terms x topics
  SparseMatrix v;  // documents x topics

  Index rank() const noexcept { return u.cols(); }
  friend bool operator==(const NmfModel&, const NmfModel&) = default;
};

/// Telemetry for one ALS iteration. Counts cover the whole model, including
/// blocks already fixed by the sequential solver.
struct IterationRecord {
  Index iter = 0;  // 1-based, running across blocks
  double residual = 0.0;
  double error = 0.0;
  Index nnz_u = 0;  // after projection and truncation
  Index nnz_v = 0;
  /// Largest combined U+V entry count held at any point of the iteration,
  /// including the least-squares solutions before projection.
  Index peak_nnz = 0;
  Index block = 0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct NmfResult {
  NmfModel model;
  std::vector<IterationRecord> records;
};

/// n x k guess with exactly init_nnz entries at distinct positions, values
/// uniform in (0, 1]. When init_nnz >= k each column gets an entry first.
inline SparseMatrix init_guess(Index n, Index k, Index init_nnz, std::uint64_t seed) {
  if (n == 0 || k == 0) throw std::invalid_argument("init_guess: n and k must be positive");
  if (init_nnz > n * k) {
    throw std::invalid_argument("init_guess: " + std::to_string(init_nnz) + " entries do not fit in " +
                                shape_string(n, k));
  }
  Rng rng(seed);
  std::vector<Index> chosen;  // linear index col * n + row
  chosen.reserve(init_nnz);
  const bool cover = init_nnz >= k;
  if (cover) {
    for (Index j = 0; j < k; ++j) chosen.push_back(j * n + rng.uniform_index(n));
  }
  std::vector<Index> pool;
  pool.reserve(n * k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (!cover || chosen[j] != j * n + i) pool.push_back(j * n + i);
    }
  }
  // partial Fisher-Yates
  const Index extra = init_nnz - chosen.size();
  for (Index s = 0; s < extra; ++s) {
    const Index pick = s + rng.uniform_index(pool.size() - s);
    std::swap(pool[s], pool[pick]);
    chosen.push_back(pool[s]);
  }
  std::vector<Triplet> entries;
  entries.reserve(chosen.size());
  for (Index pos : chosen) entries.push_back({pos % n, pos / n, rng.uniform_open_closed()});
  return SparseMatrix::from_triplets(n, k, std::move(entries));
}

/// Applies a budget in the given mode; no budget returns m unchanged.
inline SparseMatrix enforce_budget(const SparseMatrix& m, std::optional<Index> budget, Enforcement mode) {
  if (!budget) return m;
  return mode == Enforcement::global ? keep_top_t(m, *budget) : keep_top_t_per_column(m, *budget);
}

/// Gives every empty column one random entry. With a global budget the
/// smallest entries of multi-entry columns are evicted to stay within it.
inline SparseMatrix reseed_dead_columns(const SparseMatrix& u, Rng& rng, std::optional<Index> budget,
                                        Enforcement mode) {
  std::vector<Index> dead;
  for (Index j = 0; j < u.cols(); ++j) {
    if (u.column_nnz(j) == 0) dead.push_back(j);
  }
  if (dead.empty() || u.rows() == 0) return u;

  std::vector<Triplet> entries = u.triplets();
  const Index original = entries.size();
  for (Index j : dead) entries.push_back({rng.uniform_index(u.rows()), j, rng.uniform_open_closed()});

  if (budget && mode == Enforcement::global && entries.size() > *budget) {
    std::vector<Index> count = u.column_nnz_list();
    std::vector<char> evicted(original, 0);
    for (Index over = entries.size() - *budget; over > 0; --over) {
      Index victim = original;
      for (Index p = 0; p < original; ++p) {
        if (evicted[p] || count[entries[p].col] < 2) continue;
        // smallest magnitude; ties evict the later entry
        if (victim == original || std::abs(entries[p].value) <= std::abs(entries[victim].value)) victim = p;
      }
      if (victim == original) break;
      evicted[victim] = 1;
      --count[entries[victim].col];
    }
    std::vector<Triplet> kept;
    kept.reserve(entries.size());
    for (Index p = 0; p < entries.size(); ++p) {
      if (p >= original || !evicted[p]) kept.push_back(entries[p]);
    }
    entries = std::move(kept);
  }
  return SparseMatrix::from_triplets(u.rows(), u.cols(), std::move(entries));
}

namespace detail {

struct LeastSquares {
  SparseMatrix product;   // data * factor
  SparseMatrix solution;  // before projection
};

/// (data * factor - fixed_out * (fixed_in^T factor)) (factor^T factor + eps I)^{-1}
inline LeastSquares least_squares(const SparseMatrix& data, const SparseMatrix& factor,
                                  const SparseMatrix& fixed_in, const SparseMatrix& fixed_out,
                                  double ridge_scale) {
  LeastSquares out{matmul(data, factor), {}};
  const SmallDense inverse = solve_gram(gram(factor), ridge_scale);
  if (fixed_in.cols() == 0) {
    out.solution = apply_small(out.product, inverse);
  } else {
    const SparseMatrix rhs = subtract(out.product, apply_small(fixed_out, cross_gram(fixed_in, factor)));
    out.solution = apply_small(rhs, inverse);
  }
  return out;
}

inline double dense_inner(const SmallDense& a, const SmallDense& b) {
  double s = 0.0;
  for (Index i = 0; i < a.values().size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

inline double error_from_terms(double norm_a2, double cross, double quad) {
  return std::sqrt(std::max(0.0, norm_a2 - 2.0 * cross + quad) / norm_a2);
}

/// Shared state for solving one block against a fixed, possibly empty, prefix.
struct BlockProblem {
  const SparseMatrix& a;
  const SparseMatrix& at;
  double norm_a2;
  const SparseMatrix& u_fixed;
  const SparseMatrix& v_fixed;
  double fixed_cross;  // trace(U1^T A V1)
};

inline double block_error(const BlockProblem& pb, const SparseMatrix& u, const SparseMatrix& v,
                          const SparseMatrix& av) {
  const double cross = pb.fixed_cross + inner_product(u, av);
  double quad = 0.0;
  if (pb.u_fixed.cols() == 0) {
    quad = dense_inner(gram(u), gram(v));
  } else {
    quad = dense_inner(gram(hcat(pb.u_fixed, u)), gram(hcat(pb.v_fixed, v)));
  }
  return error_from_terms(pb.norm_a2, cross, quad);
}

inline NmfModel solve_block(const BlockProblem& pb, SparseMatrix u, const NmfConfig& cfg, Rng& rng, Index block,
                            std::vector<IterationRecord>& records);

}  // namespace detail

/// ||U - U_prev|| / ||U||.
inline double residual(const SparseMatrix& u_prev, const SparseMatrix& u) {
  if (u_prev.rows() != u.rows() || u_prev.cols() != u.cols()) {
    throw DimensionError("residual: " + shape_string(u_prev.rows(), u_prev.cols()) + " vs " +
                         shape_string(u.rows(), u.cols()));
  }
  const double denom = frobenius_norm(u);
  if (denom == 0.0) throw DegenerateFactorError("residual: current factor is entirely zero");
  return frobenius_norm(subtract(u, u_prev)) / denom;
}

/// ||A - U V^T||_F / ||A||_F without forming U V^T.
inline double relative_error(const SparseMatrix& a, const NmfModel& model) {
  const auto& [u, v] = model;
  if (u.rows() != a.rows() || v.rows() != a.cols() || u.cols() != v.cols()) {
    throw DimensionError("relative_error: A is " + shape_string(a.rows(), a.cols()) + ", U is " +
                         shape_string(u.rows(), u.cols()) + ", V is " + shape_string(v.rows(), v.cols()));
  }
  const double norm_a2 = squared_norm(a);
  if (norm_a2 == 0.0) throw InputError("relative_error: data matrix is zero");
  const double cross = inner_product(v, matmul(transpose(a), u));
  const double quad = detail::dense_inner(gram(u), gram(v));
  return detail::error_from_terms(norm_a2, cross, quad);
}

/// V = max(0, A^T U (U^T U + eps I)^{-1}).
inline SparseMatrix als_step_v(const SparseMatrix& a, const SparseMatrix& u, double ridge_scale = kDefaultRidgeScale) {
  if (u.rows() != a.rows()) {
    throw DimensionError("als_step_v: A is " + shape_string(a.rows(), a.cols()) + ", U is " +
                         shape_string(u.rows(), u.cols()));
  }
  const SparseMatrix none_u(a.rows(), 0), none_v(a.cols(), 0);
  return project_nonnegative(detail::least_squares(transpose(a), u, none_u, none_v, ridge_scale).solution);
}

/// U = max(0, A V (V^T V + eps I)^{-1}).
inline SparseMatrix als_step_u(const SparseMatrix& a, const SparseMatrix& v, double ridge_scale = kDefaultRidgeScale) {
  if (v.rows() != a.cols()) {
    throw DimensionError("als_step_u: A is " + shape_string(a.rows(), a.cols()) + ", V is " +
                         shape_string(v.rows(), v.cols()));
  }
  const SparseMatrix none_v(a.cols(), 0), none_u(a.rows(), 0);
  return project_nonnegative(detail::least_squares(a, v, none_v, none_u, ridge_scale).solution);
}

/// V2 = max(0, (A^T U2 - V1 U1^T U2)(U2^T U2 + eps I)^{-1}).
inline SparseMatrix sequential_step_v(const SparseMatrix& a, const SparseMatrix& u2, const SparseMatrix& u1,
                                      const SparseMatrix& v1, double ridge_scale = kDefaultRidgeScale) {
  if (u2.rows() != a.rows() || u1.rows() != a.rows() || v1.rows() != a.cols() || u1.cols() != v1.cols()) {
    throw DimensionError("sequential_step_v: inconsistent shapes for A " + shape_string(a.rows(), a.cols()));
  }
  return project_nonnegative(detail::least_squares(transpose(a), u2, u1, v1, ridge_scale).solution);
}

/// U2 = max(0, (A V2 - U1 V1^T V2)(V2^T V2 + eps I)^{-1}).
inline SparseMatrix sequential_step_u(const SparseMatrix& a, const SparseMatrix& v2, const SparseMatrix& u1,
                                      const SparseMatrix& v1, double ridge_scale = kDefaultRidgeScale) {
  if (v2.rows() != a.cols() || u1.rows() != a.rows() || v1.rows() != a.cols() || u1.cols() != v1.cols()) {
    throw DimensionError("sequential_step_u: inconsistent shapes for A " + shape_string(a.rows(), a.cols()));
  }
  return project_nonnegative(detail::least_squares(a, v2, v1, u1, ridge_scale).solution);
}

namespace detail {

inline NmfModel solve_block(const BlockProblem& pb, SparseMatrix u, const NmfConfig& cfg, Rng& rng, Index block,
                            std::vector<IterationRecord>& records) {
  const Index fixed_nnz = pb.u_fixed.nnz() + pb.v_fixed.nnz();
  SparseMatrix v(pb.a.cols(), u.cols());
  for (Index it = 0; it < cfg.max_iters; ++it) {
    const LeastSquares vs = least_squares(pb.at, u, pb.u_fixed, pb.v_fixed, cfg.ridge_scale);
    Index peak = fixed_nnz + u.nnz() + vs.solution.nnz();
    v = enforce_budget(project_nonnegative(vs.solution), cfg.t_v, cfg.mode);

    const LeastSquares us = least_squares(pb.a, v, pb.v_fixed, pb.u_fixed, cfg.ridge_scale);
    peak = std::max(peak, fixed_nnz + v.nnz() + us.solution.nnz());
    SparseMatrix next = enforce_budget(project_nonnegative(us.solution), cfg.t_u, cfg.mode);
    next = reseed_dead_columns(next, rng, cfg.t_u, cfg.mode);

    IterationRecord rec;
    rec.iter = records.size() + 1;
    rec.residual = residual(u, next);
    rec.error = block_error(pb, next, v, us.product);
    rec.nnz_u = pb.u_fixed.nnz() + next.nnz();
    rec.nnz_v = pb.v_fixed.nnz() + v.nnz();
    rec.peak_nnz = std::max(peak, rec.nnz_u + rec.nnz_v);
    rec.block = block;
    records.push_back(rec);

    u = std::move(next);
    if (rec.residual < cfg.residual_tol) break;
  }
  return {std::move(u), std::move(v)};
}

inline void validate_data(const SparseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw InputError("data matrix has zero rows or columns (" + shape_string(a.rows(), a.cols()) + ")");
  }
  if (a.empty()) throw InputError("data matrix has no nonzero entries");
  for (double x : a.values()) {
    if (x < 0.0) throw InputError("data matrix has negative entries");
  }
}

inline constexpr std::uint64_t kReseedStream = 1;

}  // namespace detail

/// Enforced-sparsity ALS; with neither budget set this is plain projected ALS.
inline NmfResult projected_als(const SparseMatrix& a, const NmfConfig& config) {
  detail::validate_data(a);
  config.validate(a.rows());
  const SparseMatrix at = transpose(a);
  const SparseMatrix u_fixed(a.rows(), 0), v_fixed(a.cols(), 0);
  const detail::BlockProblem pb{a, at, squared_norm(a), u_fixed, v_fixed, 0.0};

  SparseMatrix u0 = init_guess(a.rows(), config.k, config.init_nnz.value_or(a.rows() * config.k), config.seed);
  Rng rng(config.seed, detail::kReseedStream);
  NmfResult result;
  result.model = detail::solve_block(pb, std::move(u0), config, rng, 0, result.records);
  return result;
}

/// Sequential ALS: n_blocks blocks of block_rank topics, each solved against
/// the already converged ones. config.k must equal block_rank * n_blocks;
/// budgets and max_iters apply per block, and every block starts from the
/// same initial guess.
inline NmfResult sequential_als(const SparseMatrix& a, const NmfConfig& config, Index block_rank, Index n_blocks) {
  detail::validate_data(a);
  if (block_rank < 1 || n_blocks < 1) throw std::invalid_argument("block rank and block count must be >= 1");
  if (config.k != block_rank * n_blocks) {
    throw std::invalid_argument("rank k = " + std::to_string(config.k) + " is not block rank " +
                                std::to_string(block_rank) + " times " + std::to_string(n_blocks) + " blocks");
  }
  NmfConfig block_cfg = config;
  block_cfg.k = block_rank;
  block_cfg.validate(a.rows());

  const SparseMatrix at = transpose(a);
  const SparseMatrix u0 =
      init_guess(a.rows(), block_rank, block_cfg.init_nnz.value_or(a.rows() * block_rank), config.seed);
  Rng rng(config.seed, detail::kReseedStream);

  NmfResult result;
  SparseMatrix u_fixed(a.rows(), 0), v_fixed(a.cols(), 0);
  for (Index b = 0; b < n_blocks; ++b) {
    const double fixed_cross = b == 0 ? 0.0 : inner_product(u_fixed, matmul(a, v_fixed));
    const detail::BlockProblem pb{a, at, squared_norm(a), u_fixed, v_fixed, fixed_cross};
    NmfModel block = detail::solve_block(pb, u0, block_cfg, rng, b, result.records);
    if (b == 0) {
      u_fixed = std::move(block.u);
      v_fixed = std::move(block.v);
    } else {
      u_fixed = hcat(u_fixed, block.u);
      v_fixed = hcat(v_fixed, block.v);
    }
  }
  result.model = {std::move(u_fixed), std::move(v_fixed)};
  return result;
}

/// Truncates a finished model once, without re-solving.
inline NmfModel enforce_after(const NmfModel& model, std::optional<Index> t_u, std::optional<Index> t_v,
                              Enforcement mode) {
  return {enforce_budget(model.u, t_u, mode), enforce_budget(model.v, t_v, mode)};
}

}  // namespace esnmf
