// Stored entries and accuracy as the budget on V tightens, enforced during
// ALS versus truncating the finished factorization once.

#include <cstdio>

#include "esnmf/esnmf.hpp"

int main() {
  using namespace esnmf;

  const auto corpus = normalize_rows(synthetic_corpus({5, 40, 10, 0.1, 0.05, 2}));
  SweepSpec grid;
  grid.base.k = 5;
  grid.base.max_iters = 50;
  grid.base.seed = 1;
  grid.solvers = {Solver::als, Solver::enforce_after};
  grid.targets = {Target::v};
  grid.budgets = {5, 20, 50, 100, 200, 1000};

  std::printf("%-14s %6s %10s %10s %8s\n", "solver", "t_v", "peak nnz", "error", "acc");
  for (const auto& run : run_sweep(corpus.matrix, corpus.labels, grid)) {
    std::printf("%-14s %6zu %10zu %10.4f %8.3f\n", to_string(run.solver).c_str(), *run.t_v, run.max_peak_nnz(),
                run.final_error, *run.mean_accuracy);
  }
}
