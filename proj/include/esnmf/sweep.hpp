#pragma once

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "esnmf/corpus.hpp"
#include "esnmf/eval.hpp"
#include "esnmf/matrix_market.hpp"
#include "esnmf/nmf.hpp"

// Budget sweeps: one run per (solver, target, budget), in that nesting order.

namespace esnmf {

enum class Solver { als, per_column, sequential, enforce_after };
enum class Target { u, v, both };

inline std::string to_string(Solver s) {
  switch (s) {
    case Solver::als: return "als";
    case Solver::per_column: return "per-column";
    case Solver::sequential: return "sequential";
    case Solver::enforce_after: return "enforce-after";
  }
  return "?";
}

inline std::string to_string(Target t) {
  switch (t) {
    case Target::u: return "u";
    case Target::v: return "v";
    case Target::both: return "both";
  }
  return "?";
}

struct SweepSpec {
  NmfConfig base;  // budgets in `base` are ignored
  std::vector<Solver> solvers{Solver::als};
  std::vector<Target> targets{Target::u, Target::v, Target::both};
  std::vector<Index> budgets;
  Index block_size = 1;
  /// Iterations per block for the sequential solver; absent splits
  /// base.max_iters evenly over the blocks.
  std::optional<Index> iters_per_block;
};

struct SweepRun {
  Solver solver = Solver::als;
  Target target = Target::both;
  std::optional<Index> t_u;
  std::optional<Index> t_v;
  NmfResult result;
  std::optional<double> mean_accuracy;
  /// Relative error of the returned model (after truncation for enforce-after).
  double final_error = 0.0;
  double wall_ms = 0.0;

  Index iterations() const noexcept { return result.records.size(); }
  Index max_post_nnz() const noexcept {
    Index m = 0;
    for (const auto& r : result.records) m = std::max(m, r.nnz_u + r.nnz_v);
    return m;
  }
  Index max_peak_nnz() const noexcept {
    Index m = 0;
    for (const auto& r : result.records) m = std::max(m, r.peak_nnz);
    return m;
  }
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

inline std::vector<SweepRun> run_sweep(const SparseMatrix& a, const std::optional<DocumentLabels>& labels,
                                       const SweepSpec& grid) {
  if (grid.budgets.empty()) throw std::invalid_argument("sweep needs at least one budget");
  if (grid.solvers.empty() || grid.targets.empty()) throw std::invalid_argument("sweep needs solvers and targets");

  NmfConfig dense_cfg = grid.base;
  dense_cfg.t_u.reset();
  dense_cfg.t_v.reset();
  dense_cfg.mode = Enforcement::global;

  std::optional<NmfResult> dense;  // shared by every enforce-after run
  double dense_ms = 0.0;

  std::vector<SweepRun> runs;
  for (Solver solver : grid.solvers) {
    for (Target target : grid.targets) {
      for (Index budget : grid.budgets) {
        SweepRun run;
        run.solver = solver;
        run.target = target;
        if (target != Target::v) run.t_u = budget;
        if (target != Target::u) run.t_v = budget;

        NmfConfig cfg = dense_cfg;
        cfg.t_u = run.t_u;
        cfg.t_v = run.t_v;
        const auto start = std::chrono::steady_clock::now();
        switch (solver) {
          case Solver::als:
            run.result = projected_als(a, cfg);
            run.wall_ms = detail::elapsed_ms(start);
            break;
          case Solver::per_column:
            cfg.mode = Enforcement::per_column;
            run.result = projected_als(a, cfg);
            run.wall_ms = detail::elapsed_ms(start);
            break;
          case Solver::sequential: {
            if (grid.block_size < 1 || cfg.k % grid.block_size != 0) {
              throw std::invalid_argument("rank " + std::to_string(cfg.k) + " is not a multiple of block size " +
                                          std::to_string(grid.block_size));
            }
            const Index blocks = cfg.k / grid.block_size;
            cfg.max_iters = grid.iters_per_block.value_or(std::max<Index>(1, cfg.max_iters / blocks));
            run.result = sequential_als(a, cfg, grid.block_size, blocks);
            run.wall_ms = detail::elapsed_ms(start);
            break;
          }
          case Solver::enforce_after: {
            if (!dense) {
              dense = projected_als(a, dense_cfg);
              dense_ms = detail::elapsed_ms(start);
            }
            const auto t0 = std::chrono::steady_clock::now();
            run.result.model = enforce_after(dense->model, run.t_u, run.t_v, Enforcement::global);
            run.result.records = dense->records;
            run.wall_ms = dense_ms + detail::elapsed_ms(t0);
            break;
          }
        }
        run.final_error = relative_error(a, run.result.model);
        if (labels) run.mean_accuracy = mean_accuracy(run.result.model, labels->index, labels->names.size());
        runs.push_back(std::move(run));
      }
    }
  }
  return runs;
}

/// True when every record of an enforcing run respects its budgets
/// (per column in per-column mode, per block for the sequential solver).
inline bool within_budget(const SweepRun& run) {
  if (run.solver == Solver::enforce_after) {
    const auto& m = run.result.model;
    return (!run.t_u || m.u.nnz() <= *run.t_u) && (!run.t_v || m.v.nnz() <= *run.t_v);
  }
  if (run.solver == Solver::per_column) {
    const auto& m = run.result.model;
    for (Index j = 0; j < m.u.cols(); ++j) {
      if ((run.t_u && m.u.column_nnz(j) > *run.t_u) || (run.t_v && m.v.column_nnz(j) > *run.t_v)) return false;
    }
  }
  const Index k = run.result.model.rank();
  for (const auto& r : run.result.records) {
    const Index scale = run.solver == Solver::sequential ? r.block + 1 : 1;
    const Index cols = run.solver == Solver::per_column ? k : 1;
    if (run.t_u && r.nnz_u > *run.t_u * scale * cols) return false;
    if (run.t_v && r.nnz_v > *run.t_v * scale * cols) return false;
  }
  return true;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRun>& runs) {
  os << "solver,target,t_u,t_v,iterations,residual,error,mean_accuracy,peak_nnz,max_nnz_uv,final_nnz_u,"
        "final_nnz_v,wall_ms,ms_per_iter\n";
  auto opt = [](const std::optional<Index>& t) { return t ? std::to_string(*t) : std::string(); };
  for (const auto& r : runs) {
    const auto& recs = r.result.records;
    const double res = recs.empty() ? 0.0 : recs.back().residual;
    os << to_string(r.solver) << ',' << to_string(r.target) << ',' << opt(r.t_u) << ',' << opt(r.t_v) << ','
       << r.iterations() << ',' << format_double(res) << ',' << format_double(r.final_error) << ','
       << (r.mean_accuracy ? format_double(*r.mean_accuracy) : std::string()) << ',' << r.max_peak_nnz() << ','
       << r.max_post_nnz() << ',' << r.result.model.u.nnz() << ',' << r.result.model.v.nnz() << ','
       << format_double(r.wall_ms) << ','
       << format_double(r.iterations() ? r.wall_ms / static_cast<double>(r.iterations()) : 0.0) << '\n';
  }
}

}  // namespace esnmf
